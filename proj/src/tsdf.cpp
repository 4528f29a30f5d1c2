#include "headscan/tsdf.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace headscan {

namespace {

constexpr char kMagic[8] = {'H', 'S', 'T', 'S', 'D', 'F', '1', '\0'};

template <typename T>
void put_le(std::ostream& out, T value) {
    static_assert(std::endian::native == std::endian::little, "little-endian host expected");
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get_le(std::istream& in) {
    T value{};
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!in) throw std::runtime_error("tsdf snapshot: truncated file");
    return value;
}

}  // namespace

TsdfVolume::TsdfVolume(const Vec3i& resolution, double voxel_size, const Vec3& origin,
                       double trunc_dist, double w_alpha)
    : resolution_(resolution), voxel_size_(voxel_size), origin_(origin),
      trunc_dist_(trunc_dist), w_alpha_(w_alpha) {
    if ((resolution.array() < 2).any()) throw std::invalid_argument("tsdf: resolution must be >= 2 per axis");
    if (!(voxel_size > 0) || !(trunc_dist > 0) || !(w_alpha > 0))
        throw std::invalid_argument("tsdf: voxel size, truncation and weight cap must be positive");
    const auto n = static_cast<std::size_t>(resolution.x()) * resolution.y() * resolution.z();
    tsdf_.assign(n, 1.0);
    weight_.assign(n, 0.0);
}

TsdfVolume TsdfVolume::cube(const Vec3& center, double extent, int resolution,
                            double trunc_multiple, double w_alpha) {
    const double voxel = extent / resolution;
    const Vec3 origin = center - Vec3::Constant(0.5 * voxel * (resolution - 1));
    return {Vec3i::Constant(resolution), voxel, origin, trunc_multiple * voxel, w_alpha};
}

void TsdfVolume::set(int i, int j, int k, double tsdf, double weight) {
    const auto idx = index(i, j, k);
    tsdf_[idx] = std::clamp(tsdf, -1.0, 1.0);
    weight_[idx] = std::clamp(weight, 0.0, w_alpha_);
}

std::optional<double> TsdfVolume::sample(const Vec3& p) const {
    const Vec3 g = (p - origin_) / voxel_size_;
    const int i = static_cast<int>(std::floor(g.x()));
    const int j = static_cast<int>(std::floor(g.y()));
    const int k = static_cast<int>(std::floor(g.z()));
    if (i < 0 || j < 0 || k < 0 || i + 1 >= resolution_.x() || j + 1 >= resolution_.y() ||
        k + 1 >= resolution_.z())
        return std::nullopt;
    const double fx = g.x() - i, fy = g.y() - j, fz = g.z() - k;
    const std::size_t sx = 1, sy = static_cast<std::size_t>(resolution_.x()),
                      sz = sy * static_cast<std::size_t>(resolution_.y());
    const std::size_t base = index(i, j, k);
    const std::size_t c[8] = {base,           base + sx,           base + sy,      base + sx + sy,
                              base + sz,      base + sx + sz,      base + sy + sz, base + sx + sy + sz};
    for (auto idx : c)
        if (weight_[idx] <= 0.0) return std::nullopt;
    const double c00 = tsdf_[c[0]] * (1 - fx) + tsdf_[c[1]] * fx;
    const double c10 = tsdf_[c[2]] * (1 - fx) + tsdf_[c[3]] * fx;
    const double c01 = tsdf_[c[4]] * (1 - fx) + tsdf_[c[5]] * fx;
    const double c11 = tsdf_[c[6]] * (1 - fx) + tsdf_[c[7]] * fx;
    const double c0 = c00 * (1 - fy) + c10 * fy;
    const double c1 = c01 * (1 - fy) + c11 * fy;
    return c0 * (1 - fz) + c1 * fz;
}

std::optional<Vec3> TsdfVolume::normal(const Vec3& p) const {
    Vec3 grad;
    for (int a = 0; a < 3; ++a) {
        Vec3 off = Vec3::Zero();
        off[a] = voxel_size_;
        const auto hi = sample(p + off);
        const auto lo = sample(p - off);
        if (!hi || !lo) return std::nullopt;
        grad[a] = *hi - *lo;
    }
    const double len = grad.norm();
    if (!(len > 0)) return std::nullopt;
    return Vec3(grad / len);
}

Eigen::AlignedBox3d TsdfVolume::bounds() const {
    return {origin_, origin_ + voxel_size_ * (resolution_ - Vec3i::Ones()).cast<double>()};
}

void TsdfVolume::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out.write(kMagic, sizeof kMagic);
    for (int a = 0; a < 3; ++a) put_le<std::int32_t>(out, resolution_[a]);
    put_le<double>(out, voxel_size_);
    for (int a = 0; a < 3; ++a) put_le<double>(out, origin_[a]);
    put_le<double>(out, trunc_dist_);
    put_le<double>(out, w_alpha_);
    for (double v : tsdf_) put_le<float>(out, static_cast<float>(v));
    for (double v : weight_) put_le<float>(out, static_cast<float>(v));
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

TsdfVolume TsdfVolume::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    char magic[8];
    in.read(magic, sizeof magic);
    if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
        throw std::runtime_error(path.string() + ": byte 0: not a TSDF snapshot");
    Vec3i res;
    for (int a = 0; a < 3; ++a) res[a] = get_le<std::int32_t>(in);
    const double voxel = get_le<double>(in);
    Vec3 origin;
    for (int a = 0; a < 3; ++a) origin[a] = get_le<double>(in);
    const double trunc = get_le<double>(in);
    const double w_alpha = get_le<double>(in);
    TsdfVolume vol(res, voxel, origin, trunc, w_alpha);
    for (auto& v : vol.tsdf_) v = get_le<float>(in);
    for (auto& v : vol.weight_) v = get_le<float>(in);
    return vol;
}

std::pair<double, double> tsdf_update(double D, double W, double d, double w, double w_alpha) {
    const double total = W + w;
    return {(W * D + w * d) / total, std::min(total, w_alpha)};
}

std::optional<double> projective_tsdf(const DepthFrame& frame, const CameraIntrinsics& k,
                                      const Vec3& pc, double trunc_dist) {
    if (!(pc.z() > 0)) return std::nullopt;
    const double u = k.fx * pc.x() / pc.z() + k.cx;
    const double v = k.fy * pc.y() / pc.z() + k.cy;
    const double ui = std::floor(u + 0.5);
    const double vi = std::floor(v + 0.5);
    if (ui < 0 || vi < 0 || ui >= frame.width() || vi >= frame.height()) return std::nullopt;
    const auto idx = frame.index(static_cast<int>(ui), static_cast<int>(vi));
    if (!frame.valid(idx)) return std::nullopt;
    double depth = frame.depth(idx);
    // Bilinear between the four surrounding pixels when they are valid and lie on one
    // surface; nearest-pixel lookup leaves steps on surfaces seen at grazing angles.
    const int u0 = static_cast<int>(std::floor(u)), v0 = static_cast<int>(std::floor(v));
    if (u0 >= 0 && v0 >= 0 && u0 + 1 < frame.width() && v0 + 1 < frame.height() &&
        frame.valid(u0, v0) && frame.valid(u0 + 1, v0) && frame.valid(u0, v0 + 1) &&
        frame.valid(u0 + 1, v0 + 1)) {
        const double d00 = frame.depth(u0, v0), d10 = frame.depth(u0 + 1, v0);
        const double d01 = frame.depth(u0, v0 + 1), d11 = frame.depth(u0 + 1, v0 + 1);
        const double lo = std::min({d00, d10, d01, d11}), hi = std::max({d00, d10, d01, d11});
        if (hi - lo < trunc_dist) {
            const double fu = u - u0, fv = v - v0;
            depth = (d00 * (1 - fu) + d10 * fu) * (1 - fv) + (d01 * (1 - fu) + d11 * fu) * fv;
        }
    }
    const double sdf = depth - pc.z();
    if (sdf < -trunc_dist) return std::nullopt;
    return std::min(1.0, sdf / trunc_dist);
}

void integrate(TsdfVolume& volume, const DepthFrame& frame, const RigidTransform& pose,
               const CameraIntrinsics& k, double w_frame) {
    if (!frame.matches(k)) throw std::invalid_argument("integrate: frame size does not match intrinsics");
    if (!(w_frame > 0)) throw std::invalid_argument("integrate: frame weight must be positive");
    if (frame.valid_count() == 0) return;
    const RigidTransform world_to_cam = pose.inverse();
    const Mat3 r = world_to_cam.rotation();
    const Vec3 t = world_to_cam.translation();
    const Vec3i res = volume.resolution_;
    const double trunc = volume.trunc_dist_;
    const double w_alpha = volume.w_alpha_;

#pragma omp parallel for schedule(static)
    for (int kz = 0; kz < res.z(); ++kz) {
        for (int j = 0; j < res.y(); ++j) {
            for (int i = 0; i < res.x(); ++i) {
                const Vec3 pc = r * volume.voxel_center(i, j, kz) + t;
                const auto d = projective_tsdf(frame, k, pc, trunc);
                if (!d) continue;
                const auto idx = volume.index(i, j, kz);
                auto [D, W] = tsdf_update(volume.tsdf_[idx], volume.weight_[idx], *d, w_frame, w_alpha);
                volume.tsdf_[idx] = D;
                volume.weight_[idx] = W;
            }
        }
    }
}

PointCloud raycast(const TsdfVolume& volume, const RigidTransform& pose, const CameraIntrinsics& k) {
    k.validate();
    const int n = k.width * k.height;
    std::vector<Vec3> hit_points(static_cast<std::size_t>(n));
    std::vector<Vec3> hit_normals(static_cast<std::size_t>(n));
    std::vector<std::uint8_t> hit(static_cast<std::size_t>(n), 0);

    const Eigen::AlignedBox3d box = volume.bounds();
    const double fine = 0.5 * volume.voxel_size();
    const double coarse = std::max(fine, 0.5 * volume.trunc_dist());
    const Vec3 origin = pose.translation();

#pragma omp parallel for schedule(dynamic, 32)
    for (int idx = 0; idx < n; ++idx) {
        const int u = idx % k.width;
        const int v = idx / k.width;
        const Vec3 dir = pose.rotate(Vec3((u - k.cx) / k.fx, (v - k.cy) / k.fy, 1.0)).normalized();

        double t0 = 0.0, t1 = std::numeric_limits<double>::infinity();
        bool inside = true;
        for (int a = 0; a < 3 && inside; ++a) {
            if (dir[a] == 0.0) {
                inside = origin[a] >= box.min()[a] && origin[a] <= box.max()[a];
                continue;
            }
            double ta = (box.min()[a] - origin[a]) / dir[a];
            double tb = (box.max()[a] - origin[a]) / dir[a];
            if (ta > tb) std::swap(ta, tb);
            t0 = std::max(t0, ta);
            t1 = std::min(t1, tb);
            inside = t0 <= t1;
        }
        if (!inside) continue;

        double t = t0;
        double prev_t = t;
        double prev = 0.0;
        bool have_prev = false;
        bool force_fine = false;
        while (t <= t1) {
            const auto val = volume.sample(origin + t * dir);
            if (!val) {
                have_prev = false;
                prev_t = t;
                t += fine;
                continue;
            }
            if (have_prev && prev > 0 && *val < 0) {
                if (t - prev_t > fine * 1.0000001 && !force_fine) {
                    // Crossed on a coarse step: back up and walk the band finely.
                    t = prev_t;
                    force_fine = true;
                    continue;
                }
                const double t_hit = prev_t + (t - prev_t) * (prev / (prev - *val));
                const Vec3 p = origin + t_hit * dir;
                const auto nrm = volume.normal(p);
                if (nrm) {
                    hit_points[static_cast<std::size_t>(idx)] = p;
                    hit_normals[static_cast<std::size_t>(idx)] = *nrm;
                    hit[static_cast<std::size_t>(idx)] = 1;
                }
                break;
            }
            prev = *val;
            have_prev = true;
            prev_t = t;
            const bool free_space = *val >= 1.0 && !force_fine;
            t += free_space ? coarse : fine;
        }
    }

    PointCloud out;
    for (std::size_t i = 0; i < hit.size(); ++i) {
        if (!hit[i]) continue;
        out.points.push_back(hit_points[i]);
        out.normals.push_back(hit_normals[i]);
    }
    return out;
}

}  // namespace headscan
