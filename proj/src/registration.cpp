#include "headscan/registration.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "headscan/kdtree.h"

namespace headscan {

DepthFrame bilateral_filter(const DepthFrame& frame, double sigma_space, double sigma_range) {
    if (!(sigma_space > 0 && sigma_range > 0))
        throw std::invalid_argument("bilateral_filter: sigmas must be positive");
    const int w = frame.width();
    const int h = frame.height();
    const int radius = std::max(1, static_cast<int>(std::ceil(2.0 * sigma_space)));
    const int window_neighbors = (2 * radius + 1) * (2 * radius + 1) - 1;
    const double inv_2ss = 1.0 / (2.0 * sigma_space * sigma_space);
    const double inv_2sr = 1.0 / (2.0 * sigma_range * sigma_range);

    std::vector<double> out(frame.size(), 0.0);
    std::vector<std::uint8_t> out_valid(frame.size(), 0);

#pragma omp parallel for schedule(static)
    for (int v = 0; v < h; ++v) {
        std::vector<double> neighbors;
        neighbors.reserve(static_cast<std::size_t>(window_neighbors) + 1);
        for (int u = 0; u < w; ++u) {
            const auto i = frame.index(u, v);
            double center;
            if (frame.valid(i)) {
                center = frame.depth(i);
            } else {
                neighbors.clear();
                for (int dv = -radius; dv <= radius; ++dv)
                    for (int du = -radius; du <= radius; ++du) {
                        const int uu = u + du, vv = v + dv;
                        if (uu < 0 || vv < 0 || uu >= w || vv >= h || !frame.valid(uu, vv)) continue;
                        neighbors.push_back(frame.depth(uu, vv));
                    }
                const auto n = static_cast<int>(neighbors.size());
                if (n < 3 || 2 * n <= window_neighbors) continue;
                auto mid = neighbors.begin() + n / 2;
                std::nth_element(neighbors.begin(), mid, neighbors.end());
                center = *mid;
            }
            double sum = 0.0, wsum = 0.0;
            for (int dv = -radius; dv <= radius; ++dv)
                for (int du = -radius; du <= radius; ++du) {
                    const int uu = u + du, vv = v + dv;
                    if (uu < 0 || vv < 0 || uu >= w || vv >= h || !frame.valid(uu, vv)) continue;
                    const double z = frame.depth(uu, vv);
                    const double dz = z - center;
                    const double wt = std::exp(-(du * du + dv * dv) * inv_2ss - dz * dz * inv_2sr);
                    sum += wt * z;
                    wsum += wt;
                }
            if (wsum > 0) {
                out[i] = sum / wsum;
                out_valid[i] = 1;
            }
        }
    }

    DepthFrame result(w, h);
    for (std::size_t i = 0; i < out.size(); ++i)
        if (out_valid[i] && out[i] > 0) result.set(i, out[i]);
    return result;
}

void IcpParams::validate() const {
    if (max_iterations <= 0 || !(max_correspondence_distance > 0) || !(max_normal_angle > 0) ||
        !(convergence_threshold > 0) || !(degeneracy_condition > 0))
        throw std::invalid_argument("icp params: all parameters must be positive");
    if (outlier_median_factor < 0 || outlier_floor < 0)
        throw std::invalid_argument("icp params: outlier rejection settings must be non-negative");
    if (max_normal_angle > 90.0) throw std::invalid_argument("icp params: max_normal_angle exceeds 90");
}

PointToPlaneStep solve_point_to_plane(std::span<const Vec3> source, std::span<const Vec3> target,
                                      std::span<const Vec3> target_normals,
                                      double degeneracy_condition) {
    const auto n = source.size();
    if (n == 0 || target.size() != n || target_normals.size() != n)
        throw std::invalid_argument("solve_point_to_plane: mismatched or empty correspondences");

    // Rotation columns are expressed about the source centroid and scaled by the RMS
    // radius so the conditioning reflects geometry, not the choice of origin or units.
    Vec3 c = Vec3::Zero();
    for (const auto& p : source) c += p;
    c /= static_cast<double>(n);
    double scale = 0.0;
    for (const auto& p : source) scale += (p - c).squaredNorm();
    scale = std::sqrt(scale / static_cast<double>(n));
    if (!(scale > 0)) scale = 1.0;

    Mat6 ata = Mat6::Zero();
    Vec6 atb = Vec6::Zero();
    for (std::size_t i = 0; i < n; ++i) {
        const Vec3& nrm = target_normals[i];
        Vec6 row;
        row.head<3>() = ((source[i] - c) / scale).cross(nrm);
        row.tail<3>() = nrm;
        const double b = -nrm.dot(source[i] - target[i]);
        ata.selfadjointView<Eigen::Upper>().rankUpdate(row);
        atb += row * b;
    }
    ata = ata.selfadjointView<Eigen::Upper>();

    Eigen::SelfAdjointEigenSolver<Mat6> eig(ata);
    const Vec6 lambda = eig.eigenvalues();
    const double lmax = lambda.maxCoeff();
    const double lmin = lambda.minCoeff();
    PointToPlaneStep step;
    step.condition_number = lmin > 0 ? lmax / lmin : std::numeric_limits<double>::infinity();

    // Pseudo-inverse: directions weaker than lmax / degeneracy_condition are left at zero.
    Vec6 y = Vec6::Zero();
    const Vec6 proj = eig.eigenvectors().transpose() * atb;
    for (int k = 0; k < 6; ++k)
        if (lambda[k] > 0 && lambda[k] * degeneracy_condition >= lmax) y[k] = proj[k] / lambda[k];
    Vec6 scaled = eig.eigenvectors() * y;

    const Vec3 omega = scaled.head<3>() / scale;
    const Vec3 t_centered = scaled.tail<3>();
    step.x.head<3>() = omega;
    step.x.tail<3>() = t_centered - omega.cross(c);
    return step;
}

RigidTransform step_to_transform(const Vec6& x) {
    Mat3 r;
    r << 1.0, -x[2], x[1],
         x[2], 1.0, -x[0],
        -x[1], x[0], 1.0;
    return {orthonormalize(r), x.tail<3>()};
}

namespace {

struct Correspondences {
    std::vector<Vec3> source;  // transformed source points
    std::vector<Vec3> target;
    std::vector<Vec3> normals;
    double mean_sq = 0.0;

    std::size_t size() const { return source.size(); }
};

Correspondences associate(const PointCloud& source, const PointCloud& target, const KdTree& tree,
                          const RigidTransform& t, const IcpParams& params, double cos_max_angle) {
    struct Pair {
        Vec3 p;
        std::size_t j;
        double dist_sq;
    };
    std::vector<Pair> pairs;
    pairs.reserve(source.size());
    for (std::size_t i = 0; i < source.size(); ++i) {
        const Vec3 p = t.apply(source.points[i]);
        const auto hit = tree.nearest(p, params.max_correspondence_distance);
        if (!hit.found()) continue;
        if (source.has_normals() && t.rotate(source.normals[i]).dot(target.normals[hit.index]) < cos_max_angle)
            continue;
        pairs.push_back({p, hit.index, hit.distance_sq});
    }
    // Surfaces not yet in the model snap onto the nearest model boundary; those pairs sit
    // far out in the distance distribution.
    double cut_sq = std::numeric_limits<double>::infinity();
    if (params.outlier_median_factor > 0 && !pairs.empty()) {
        std::vector<double> d;
        d.reserve(pairs.size());
        for (const auto& pr : pairs) d.push_back(pr.dist_sq);
        auto mid = d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2);
        std::nth_element(d.begin(), mid, d.end());
        const double f = params.outlier_median_factor;
        cut_sq = std::max(f * f * *mid, params.outlier_floor * params.outlier_floor);
    }

    Correspondences c;
    c.source.reserve(pairs.size());
    c.target.reserve(pairs.size());
    c.normals.reserve(pairs.size());
    double sum = 0.0;
    for (const auto& pr : pairs) {
        if (pr.dist_sq > cut_sq) continue;
        const Vec3& nt = target.normals[pr.j];
        const double r = nt.dot(pr.p - target.points[pr.j]);
        sum += r * r;
        c.source.push_back(pr.p);
        c.target.push_back(target.points[pr.j]);
        c.normals.push_back(nt);
    }
    if (!c.source.empty()) c.mean_sq = sum / static_cast<double>(c.source.size());
    return c;
}

}  // namespace

IcpResult icp_point_to_plane(const PointCloud& source, const PointCloud& target,
                             const RigidTransform& init, const IcpParams& params) {
    params.validate();
    if (source.empty() || target.empty()) throw std::invalid_argument("icp: empty point cloud");
    if (!target.has_normals() || target.normals.size() != target.points.size())
        throw std::invalid_argument("icp: target cloud needs normals");

    const KdTree tree(target.points);
    const double cos_max = std::cos(params.max_normal_angle * M_PI / 180.0);

    IcpResult result;
    result.transform = init;
    auto corr = associate(source, target, tree, init, params, cos_max);
    if (corr.size() == 0) return result;  // tracking lost
    result.objective.push_back(corr.mean_sq);

    constexpr int kMaxHalvings = 6;
    for (int it = 0; it < params.max_iterations; ++it) {
        if (corr.mean_sq == 0.0) {
            result.converged = true;
            break;
        }
        const auto step = solve_point_to_plane(corr.source, corr.target, corr.normals,
                                               params.degeneracy_condition);
        result.condition_number = step.condition_number;
        result.degenerate = !(step.condition_number <= params.degeneracy_condition);

        Vec6 x = step.x;
        bool accepted = false;
        RigidTransform next;
        Correspondences next_corr;
        for (int h = 0; h <= kMaxHalvings; ++h, x *= 0.5) {
            next = compose(step_to_transform(x), result.transform);
            next_corr = associate(source, target, tree, next, params, cos_max);
            if (next_corr.size() > 0 && next_corr.mean_sq <= corr.mean_sq) {
                accepted = true;
                break;
            }
        }
        ++result.iterations;
        if (!accepted) {
            // No descent direction left at this resolution: a local minimum.
            result.converged = true;
            break;
        }
        const double prev = corr.mean_sq;
        result.transform = next;
        corr = std::move(next_corr);
        result.objective.push_back(corr.mean_sq);
        if ((prev - corr.mean_sq) <= params.convergence_threshold * prev) {
            result.converged = true;
            break;
        }
    }

    result.rms_error = std::sqrt(corr.mean_sq);
    result.inlier_fraction = static_cast<double>(corr.size()) / static_cast<double>(source.size());
    if (corr.size() >= 6) {
        // Report degeneracy of the system at the final alignment.
        const auto final_step = solve_point_to_plane(corr.source, corr.target, corr.normals,
                                                     params.degeneracy_condition);
        result.condition_number = final_step.condition_number;
        result.degenerate = !(final_step.condition_number <= params.degeneracy_condition);
    } else {
        result.degenerate = true;
    }
    return result;
}

RigidTransform fuse_pose(const RigidTransform& icp, const RigidTransform& sensor, double w_icp,
                         double w_sensor) {
    if (w_icp < 0 || w_sensor < 0 || std::abs(w_icp + w_sensor - 1.0) > 1e-9)
        throw std::invalid_argument("fuse_pose: weights must be non-negative and sum to 1");
    if (w_sensor == 0.0) return icp;
    if (w_icp == 0.0) return sensor;
    Eigen::Quaterniond qi(icp.rotation());
    Eigen::Quaterniond qs(sensor.rotation());
    if (qi.dot(qs) < 0) qs.coeffs() = -qs.coeffs();
    Eigen::Quaterniond q;
    q.coeffs() = w_icp * qi.coeffs() + w_sensor * qs.coeffs();
    q.normalize();
    return {q.toRotationMatrix(), w_icp * icp.translation() + w_sensor * sensor.translation()};
}

TrackResult track_frame(const DepthFrame& frame, const PointCloud& model_prediction,
                        const RigidTransform& sensor_pose, const RigidTransform& prev_pose,
                        const CameraIntrinsics& k, const TrackingOptions& options) {
    TrackResult out;
    if (model_prediction.empty()) {
        out.pose = sensor_pose;
        out.converged = true;
        out.bootstrap = true;
        return out;
    }
    const DepthFrame filtered =
        options.filter ? bilateral_filter(frame, options.sigma_space, options.sigma_range) : frame;
    const PointCloud source = estimate_normals(filtered, k, options.normals).to_cloud(options.source_stride);

    bool usable = false;
    if (!source.empty()) {
        out.icp = icp_point_to_plane(source, model_prediction, prev_pose, options.icp);
        usable = !out.icp.objective.empty() && !out.icp.degenerate &&
                 out.icp.inlier_fraction >= options.min_inlier_fraction;
    }
    if (!usable) {
        out.pose = sensor_pose;
        out.converged = false;
        out.fell_back = true;
        return out;
    }
    out.pose = fuse_pose(out.icp.transform, sensor_pose, options.w_icp, options.w_sensor);
    out.converged = true;
    return out;
}

}  // namespace headscan
