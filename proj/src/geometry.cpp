#include "headscan/geometry.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <random>
#include <string>

#include <Eigen/SVD>

namespace headscan {

RigidTransform::RigidTransform(const Mat3& rotation, const Vec3& translation)
    : rotation_(rotation), translation_(translation) {}

RigidTransform RigidTransform::from_axis_angle(const Vec3& axis, double angle_rad,
                                               const Vec3& translation) {
    if (axis.norm() == 0.0 || angle_rad == 0.0) return {Mat3::Identity(), translation};
    return {Eigen::AngleAxisd(angle_rad, axis.normalized()).toRotationMatrix(), translation};
}

RigidTransform RigidTransform::from_row_major(const std::array<double, 12>& rt) {
    Mat3 r;
    Vec3 t;
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) r(i, j) = rt[i * 4 + j];
        t(i) = rt[i * 4 + 3];
    }
    return {r, t};
}

RigidTransform RigidTransform::inverse() const {
    Mat3 rt = rotation_.transpose();
    return {rt, -(rt * translation_)};
}

Eigen::Matrix4d RigidTransform::matrix() const {
    Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
    m.topLeftCorner<3, 3>() = rotation_;
    m.topRightCorner<3, 1>() = translation_;
    return m;
}

std::array<double, 12> RigidTransform::row_major() const {
    std::array<double, 12> out{};
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) out[i * 4 + j] = rotation_(i, j);
        out[i * 4 + 3] = translation_(i);
    }
    return out;
}

double RigidTransform::rotation_angle_between(const RigidTransform& a, const RigidTransform& b) {
    Mat3 rel = a.rotation().transpose() * b.rotation();
    double c = std::clamp((rel.trace() - 1.0) * 0.5, -1.0, 1.0);
    // acos is ill-conditioned near 0; use the skew part there.
    Vec3 s(rel(2, 1) - rel(1, 2), rel(0, 2) - rel(2, 0), rel(1, 0) - rel(0, 1));
    return std::atan2(0.5 * s.norm(), c);
}

RigidTransform compose(const RigidTransform& a, const RigidTransform& b) {
    return {a.rotation() * b.rotation(), a.rotation() * b.translation() + a.translation()};
}

RigidTransform inverse(const RigidTransform& t) { return t.inverse(); }

Mat3 orthonormalize(const Mat3& m) {
    Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Mat3 u = svd.matrixU();
    Mat3 v = svd.matrixV();
    if ((u * v.transpose()).determinant() < 0) u.col(2) *= -1.0;
    return u * v.transpose();
}

void CameraIntrinsics::validate() const {
    if (!(fx > 0 && fy > 0)) throw std::invalid_argument("intrinsics: focal lengths must be positive");
    if (width <= 0 || height <= 0) throw std::invalid_argument("intrinsics: image size must be positive");
    if (!(cx >= 0 && cx < width && cy >= 0 && cy < height))
        throw std::invalid_argument("intrinsics: principal point outside the image");
}

CameraIntrinsics CameraIntrinsics::from_fov(int width, int height, double hfov_deg) {
    CameraIntrinsics k;
    k.width = width;
    k.height = height;
    k.fx = 0.5 * width / std::tan(0.5 * hfov_deg * M_PI / 180.0);
    k.fy = k.fx;
    k.cx = 0.5 * (width - 1);
    k.cy = 0.5 * (height - 1);
    k.validate();
    return k;
}

DepthFrame::DepthFrame(int width, int height) : width_(width), height_(height) {
    if (width < 0 || height < 0) throw std::invalid_argument("depth frame: negative size");
    const auto n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    depth_.assign(n, 0.0);
    valid_.assign(n, 0);
}

void DepthFrame::set(int u, int v, double z) { set(index(u, v), z); }
void DepthFrame::invalidate(int u, int v) { invalidate(index(u, v)); }

void DepthFrame::set(std::size_t i, double z) {
    if (!std::isfinite(z) || z <= 0.0)
        throw std::invalid_argument("depth frame: valid depth must be finite and positive");
    depth_[i] = z;
    valid_[i] = 1;
}

void DepthFrame::invalidate(std::size_t i) {
    depth_[i] = 0.0;
    valid_[i] = 0;
}

std::size_t DepthFrame::valid_count() const {
    std::size_t n = 0;
    for (auto v : valid_) n += v;
    return n;
}

PointCloud PointCloud::transformed(const RigidTransform& t) const {
    PointCloud out;
    out.points.reserve(points.size());
    for (const auto& p : points) out.points.push_back(t.apply(p));
    out.normals.reserve(normals.size());
    for (const auto& n : normals) out.normals.push_back(t.rotate(n));
    return out;
}

PointCloud PointCloud::subset(const std::vector<std::size_t>& indices) const {
    PointCloud out;
    out.points.reserve(indices.size());
    for (auto i : indices) out.points.push_back(points.at(i));
    if (has_normals()) {
        out.normals.reserve(indices.size());
        for (auto i : indices) out.normals.push_back(normals.at(i));
    }
    return out;
}

void PointCloud::validate() const {
    if (!normals.empty() && normals.size() != points.size())
        throw std::invalid_argument("point cloud: normal count differs from point count");
    for (const auto& n : normals)
        if (std::abs(n.norm() - 1.0) > 1e-6)
            throw std::invalid_argument("point cloud: normal is not unit length");
}

void TriangleMesh::validate() const {
    const auto nv = vertices.size();
    for (std::size_t f = 0; f < faces.size(); ++f) {
        const auto& t = faces[f];
        for (auto i : t)
            if (i >= nv)
                throw std::invalid_argument("mesh: face " + std::to_string(f) +
                                            " references a missing vertex");
        if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2])
            throw std::invalid_argument("mesh: face " + std::to_string(f) +
                                        " repeats a vertex");
    }
    if (!colors.empty() && colors.size() != nv)
        throw std::invalid_argument("mesh: color count differs from vertex count");
}

TriangleMesh TriangleMesh::transformed(const RigidTransform& t) const {
    TriangleMesh out = *this;
    for (auto& v : out.vertices) v = t.apply(v);
    return out;
}

Vec3 TriangleMesh::face_normal(std::size_t f) const {
    const auto& t = faces[f];
    Vec3 n = (vertices[t[1]] - vertices[t[0]]).cross(vertices[t[2]] - vertices[t[0]]);
    double len = n.norm();
    return len > 0 ? Vec3(n / len) : Vec3::Zero();
}

double TriangleMesh::face_area(std::size_t f) const {
    const auto& t = faces[f];
    return 0.5 * (vertices[t[1]] - vertices[t[0]]).cross(vertices[t[2]] - vertices[t[0]]).norm();
}

double TriangleMesh::signed_volume() const {
    double vol = 0.0;
    for (const auto& t : faces)
        vol += vertices[t[0]].dot(vertices[t[1]].cross(vertices[t[2]]));
    return vol / 6.0;
}

double TriangleMesh::surface_area() const {
    double a = 0.0;
    for (std::size_t f = 0; f < faces.size(); ++f) a += face_area(f);
    return a;
}

Eigen::AlignedBox3d TriangleMesh::bounds() const {
    Eigen::AlignedBox3d box;
    for (const auto& v : vertices) box.extend(v);
    return box;
}

TriangleMesh TriangleMesh::submesh(const std::vector<bool>& keep_vertex) const {
    TriangleMesh out;
    std::vector<std::int64_t> remap(vertices.size(), -1);
    for (const auto& t : faces) {
        if (!(keep_vertex[t[0]] && keep_vertex[t[1]] && keep_vertex[t[2]])) continue;
        std::array<std::uint32_t, 3> nt{};
        for (int k = 0; k < 3; ++k) {
            auto& r = remap[t[k]];
            if (r < 0) {
                r = static_cast<std::int64_t>(out.vertices.size());
                out.vertices.push_back(vertices[t[k]]);
                if (has_colors()) out.colors.push_back(colors[t[k]]);
            }
            nt[k] = static_cast<std::uint32_t>(r);
        }
        out.faces.push_back(nt);
    }
    return out;
}

void TriangleMesh::append(const TriangleMesh& other) {
    const auto base = static_cast<std::uint32_t>(vertices.size());
    vertices.insert(vertices.end(), other.vertices.begin(), other.vertices.end());
    for (auto t : other.faces) faces.push_back({t[0] + base, t[1] + base, t[2] + base});
    if (has_colors() || other.has_colors()) colors.clear();
}

PointCloud NormalMap::to_cloud(int stride) const {
    PointCloud out;
    stride = std::max(stride, 1);
    for (int v = 0; v < height; v += stride) {
        for (int u = 0; u < width; u += stride) {
            auto i = static_cast<std::size_t>(v) * width + u;
            if (!normal_valid[i]) continue;
            out.points.push_back(points[i]);
            out.normals.push_back(normals[i]);
        }
    }
    return out;
}

Vec3 unproject(const CameraIntrinsics& k, double u, double v, double z) {
    return {(u - k.cx) * z / k.fx, (v - k.cy) * z / k.fy, z};
}

std::optional<Vec3> project(const CameraIntrinsics& k, const Vec3& p) {
    if (!(p.z() > 0.0)) return std::nullopt;
    return Vec3(k.fx * p.x() / p.z() + k.cx, k.fy * p.y() / p.z() + k.cy, p.z());
}

PointCloud backproject(const DepthFrame& frame, const CameraIntrinsics& k,
                       const RigidTransform& pose) {
    if (!frame.matches(k))
        throw std::invalid_argument("backproject: frame size does not match intrinsics");
    PointCloud cloud;
    cloud.points.reserve(frame.valid_count());
    for (int v = 0; v < frame.height(); ++v)
        for (int u = 0; u < frame.width(); ++u)
            if (frame.valid(u, v))
                cloud.points.push_back(pose.apply(unproject(k, u, v, frame.depth(u, v))));
    return cloud;
}

NormalMap estimate_normals(const DepthFrame& frame, const CameraIntrinsics& k,
                           const NormalOptions& options) {
    if (!frame.matches(k))
        throw std::invalid_argument("estimate_normals: frame size does not match intrinsics");
    const int w = frame.width();
    const int h = frame.height();
    const int r = std::max(options.window, 1);
    NormalMap map;
    map.width = w;
    map.height = h;
    const auto n = frame.size();
    map.points.assign(n, Vec3::Zero());
    map.normals.assign(n, Vec3::Zero());
    map.point_valid.assign(n, 0);
    map.normal_valid.assign(n, 0);

    for (int v = 0; v < h; ++v)
        for (int u = 0; u < w; ++u)
            if (frame.valid(u, v)) {
                auto i = frame.index(u, v);
                map.points[i] = unproject(k, u, v, frame.depth(u, v));
                map.point_valid[i] = 1;
            }

    auto usable = [&](int u, int v, double z0) {
        if (u < 0 || v < 0 || u >= w || v >= h || !frame.valid(u, v)) return false;
        return std::abs(frame.depth(u, v) - z0) <= options.max_depth_jump;
    };

    for (int v = 0; v < h; ++v) {
        for (int u = 0; u < w; ++u) {
            auto i = frame.index(u, v);
            if (!map.point_valid[i]) continue;
            double z0 = frame.depth(i);
            if (!usable(u - r, v, z0) || !usable(u + r, v, z0) || !usable(u, v - r, z0) ||
                !usable(u, v + r, z0))
                continue;
            Vec3 dx = map.points[frame.index(u + r, v)] - map.points[frame.index(u - r, v)];
            Vec3 dy = map.points[frame.index(u, v + r)] - map.points[frame.index(u, v - r)];
            Vec3 nrm = dx.cross(dy);
            double len = nrm.norm();
            if (!(len > 0.0)) continue;
            nrm /= len;
            // Face the camera: the view ray from the origin is the point itself.
            double facing = nrm.dot(map.points[i]);
            if (facing > 0) nrm = -nrm;
            if (facing == 0.0) continue;
            map.normals[i] = nrm;
            map.normal_valid[i] = 1;
        }
    }
    return map;
}

RigidTransform look_at(const Vec3& eye, const Vec3& target, const Vec3& up) {
    Vec3 z = (target - eye).normalized();
    Vec3 x = z.cross(up);
    if (x.norm() < 1e-12) throw std::invalid_argument("look_at: view direction parallel to up");
    x.normalize();
    Vec3 y = z.cross(x);
    Mat3 r;
    r.col(0) = x;
    r.col(1) = y;
    r.col(2) = z;
    return {r, eye};
}

PointCloud sample_surface(const TriangleMesh& mesh, std::size_t count, std::uint64_t seed) {
    if (mesh.empty()) throw std::invalid_argument("sample_surface: empty mesh");
    std::vector<double> cumulative(mesh.faces.size());
    double total = 0.0;
    for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
        total += mesh.face_area(f);
        cumulative[f] = total;
    }
    if (!(total > 0.0)) throw std::invalid_argument("sample_surface: mesh has zero area");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    PointCloud out;
    out.points.reserve(count);
    out.normals.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const double pick = unit(rng) * total;
        auto f = static_cast<std::size_t>(
            std::upper_bound(cumulative.begin(), cumulative.end(), pick) - cumulative.begin());
        f = std::min(f, mesh.faces.size() - 1);
        double s = unit(rng), t = unit(rng);
        if (s + t > 1.0) {
            s = 1.0 - s;
            t = 1.0 - t;
        }
        const auto& tri = mesh.faces[f];
        const Vec3& a = mesh.vertices[tri[0]];
        out.points.push_back(a + s * (mesh.vertices[tri[1]] - a) + t * (mesh.vertices[tri[2]] - a));
        out.normals.push_back(mesh.face_normal(f));
    }
    return out;
}

}  // namespace headscan
