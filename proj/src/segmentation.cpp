#include "headscan/segmentation.h"

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>

#include "headscan/kdtree.h"

namespace headscan {

Plane Plane::from_normal_offset(const Vec3& normal, double d) {
    const double len = normal.norm();
    if (!(len > 0)) throw std::invalid_argument("plane: zero normal");
    return {normal.x() / len, normal.y() / len, normal.z() / len, d / len};
}

Plane Plane::through_point(const Vec3& normal, const Vec3& point) {
    const Vec3 n = normal.normalized();
    return {n.x(), n.y(), n.z(), -n.dot(point)};
}

void Plane::validate() const {
    if (std::abs(a * a + b * b + c * c - 1.0) > 1e-9) throw std::invalid_argument("plane: normal is not unit length");
}

bool Prism::contains(const Vec3& p) const {
    return p.z() > z_min && p.z() <= z_max && point_in_convex_polygon(base_polygon, p.head<2>());
}

void Prism::validate() const {
    if (base_polygon.size() < 3) throw std::invalid_argument("prism: polygon needs 3 vertices");
    if (!(z_min < z_max)) throw std::invalid_argument("prism: z_min must be below z_max");
    if (!(polygon_area(base_polygon) > 0)) throw std::invalid_argument("prism: polygon is not counter-clockwise");
}

Plane fit_plane(std::span<const Vec3> points) {
    if (points.size() < 3) throw std::invalid_argument("fit_plane: need at least 3 points");
    Vec3 c = Vec3::Zero();
    for (const auto& p : points) c += p;
    c /= static_cast<double>(points.size());
    Mat3 cov = Mat3::Zero();
    for (const auto& p : points) cov += (p - c) * (p - c).transpose();
    Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
    const Vec3 ev = eig.eigenvalues();
    if (!(ev[1] > 1e-18 * std::max(ev[2], 1e-300))) throw SelectionError("fit_plane: points are collinear");
    return Plane::through_point(eig.eigenvectors().col(0), c);
}

PlaneFit ransac_plane(const PointCloud& cloud, double dist_thresh, int max_iters, std::uint64_t seed) {
    const auto n = cloud.size();
    if (n < 3) throw std::invalid_argument("ransac_plane: need at least 3 points");
    if (!(dist_thresh > 0) || max_iters <= 0) throw std::invalid_argument("ransac_plane: bad parameters");

    auto count_inliers = [&](const Plane& pl) {
        std::size_t count = 0;
        for (const auto& p : cloud.points) count += std::abs(pl.signed_distance(p)) <= dist_thresh;
        return count;
    };

    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    bool found = false;
    Plane best;
    std::size_t best_count = 0;
    for (int it = 0; it < max_iters; ++it) {
        const auto i0 = pick(rng), i1 = pick(rng), i2 = pick(rng);
        if (i0 == i1 || i1 == i2 || i0 == i2) continue;
        const Vec3& a = cloud.points[i0];
        const Vec3 nrm = (cloud.points[i1] - a).cross(cloud.points[i2] - a);
        const double scale = (cloud.points[i1] - a).norm() * (cloud.points[i2] - a).norm();
        if (!(nrm.norm() > 1e-12 * scale) || scale == 0.0) continue;
        const Plane candidate = Plane::through_point(nrm, a);
        const auto count = count_inliers(candidate);
        if (!found || count > best_count) {
            best = candidate;
            best_count = count;
            found = true;
        }
    }
    if (!found) throw SelectionError("ransac_plane: every sample was degenerate");

    auto inliers_of = [&](const Plane& pl) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < n; ++i)
            if (std::abs(pl.signed_distance(cloud.points[i])) <= dist_thresh) idx.push_back(i);
        return idx;
    };
    PlaneFit fit;
    auto inliers = inliers_of(best);
    fit.plane = best;
    if (inliers.size() >= 3) {
        std::vector<Vec3> pts;
        pts.reserve(inliers.size());
        for (auto i : inliers) pts.push_back(cloud.points[i]);
        try {
            Plane refit = fit_plane(pts);
            if (refit.normal().dot(best.normal()) < 0) refit = refit.flipped();
            fit.plane = refit;
        } catch (const SelectionError&) {
        }
    }
    fit.inliers = inliers_of(fit.plane);
    return fit;
}

RigidTransform plane_align_transform(const Plane& plane) {
    plane.validate();
    const Vec3 n = plane.normal();
    const Mat3 r = Eigen::Quaterniond::FromTwoVectors(n, Vec3::UnitZ()).toRotationMatrix();
    return {r, Vec3::Zero()};
}

std::vector<Vec2> convex_hull_2d(std::vector<Vec2> pts) {
    if (pts.size() < 3) throw std::invalid_argument("convex_hull_2d: need at least 3 points");
    std::sort(pts.begin(), pts.end(), [](const Vec2& a, const Vec2& b) {
        return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
    });
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    auto cross = [](const Vec2& o, const Vec2& a, const Vec2& b) {
        return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
    };
    std::vector<Vec2> hull(2 * pts.size());
    std::size_t k = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        while (k >= 2 && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
        hull[k++] = pts[i];
    }
    for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
        while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
        hull[k++] = pts[i];
    }
    hull.resize(k > 1 ? k - 1 : k);
    if (hull.size() < 3) throw std::invalid_argument("convex_hull_2d: points are collinear");
    return hull;
}

double polygon_area(std::span<const Vec2> poly) {
    double a = 0.0;
    for (std::size_t i = 0; i < poly.size(); ++i) {
        const Vec2& p = poly[i];
        const Vec2& q = poly[(i + 1) % poly.size()];
        a += p.x() * q.y() - q.x() * p.y();
    }
    return 0.5 * a;
}

bool point_in_convex_polygon(std::span<const Vec2> poly, const Vec2& p) {
    for (std::size_t i = 0; i < poly.size(); ++i) {
        const Vec2& a = poly[i];
        const Vec2& b = poly[(i + 1) % poly.size()];
        if ((b.x() - a.x()) * (p.y() - a.y()) - (b.y() - a.y()) * (p.x() - a.x()) < 0) return false;
    }
    return true;
}

std::size_t default_neighbor_count(std::size_t cloud_size) {
    return std::max<std::size_t>(100, cloud_size / 200);
}

namespace {

Vec3 pose_centroid(const Trajectory& poses) {
    Vec3 c = Vec3::Zero();
    for (const auto& p : poses.poses) c += p.translation();
    return c / static_cast<double>(poses.size());
}

// Aligns cloud and poses, builds the prism from the pose-loop hull and extracts members.
Selection extract(const PointCloud& full, const Plane& plane, const Trajectory& poses,
                  double plane_z_aligned, double z_min, bool cap_at_poses) {
    Selection sel;
    sel.plane = plane;
    sel.alignment = plane_align_transform(plane);
    const Mat3& r = sel.alignment.rotation();

    std::vector<Vec2> loop;
    double pose_z_max = -std::numeric_limits<double>::infinity();
    for (const auto& p : poses.poses) {
        const Vec3 c = r * p.translation();
        loop.push_back(c.head<2>());
        pose_z_max = std::max(pose_z_max, c.z());
    }
    sel.prism.base_polygon = convex_hull_2d(loop);
    sel.prism.z_min = z_min;
    double z_max = pose_z_max;
    if (!cap_at_poses)
        for (const auto& p : full.points) z_max = std::max(z_max, (r * p).z());
    sel.prism.z_max = z_max;
    if (!(sel.prism.z_min < sel.prism.z_max))
        throw SelectionError("selection: sensor poses are not above the plane at height " +
                             std::to_string(plane_z_aligned));

    for (std::size_t i = 0; i < full.size(); ++i)
        if (sel.prism.contains(r * full.points[i])) sel.indices.push_back(i);
    if (sel.indices.empty()) throw SelectionError("selection: no points inside the prism");
    sel.points = full.subset(sel.indices);
    return sel;
}

}  // namespace

Selection select_head_on_table(const PointCloud& full, const Plane& plane,
                               const PointCloud& plane_inliers, const Trajectory& poses,
                               double dist_thresh) {
    if (full.empty()) throw SelectionError("select_head_on_table: empty cloud");
    if (poses.size() < 3) throw SelectionError("select_head_on_table: need a loop of at least 3 poses");
    Plane oriented = plane;
    if (oriented.signed_distance(pose_centroid(poses)) < 0) oriented = oriented.flipped();

    // Table height in the aligned frame, from the transformed plane points.
    const Mat3 r = plane_align_transform(oriented).rotation();
    double table_z = -oriented.d;
    if (!plane_inliers.empty()) {
        double sum = 0.0;
        for (const auto& p : plane_inliers.points) sum += (r * p).z();
        table_z = sum / static_cast<double>(plane_inliers.size());
    }
    return extract(full, oriented, poses, table_z, table_z + dist_thresh, true);
}

Selection select_human_head(const PointCloud& full, const Trajectory& poses, std::size_t k,
                            double offset_head) {
    if (full.empty()) throw SelectionError("select_human_head: empty cloud");
    if (k < 3) throw std::invalid_argument("select_human_head: k must be at least 3");
    if (poses.size() < 3) throw SelectionError("select_human_head: need a loop of at least 3 poses");
    if (!(offset_head >= 0)) throw std::invalid_argument("select_human_head: negative offset");

    const Vec3 centroid = pose_centroid(poses);
    const KdTree tree(full.points);
    std::vector<Vec3> head_top;
    for (const auto& hit : tree.knn(centroid, std::min(k, full.size())))
        head_top.push_back(full.points[hit.index]);

    Plane virtual_plane;
    try {
        virtual_plane = fit_plane(head_top);
    } catch (const std::exception& e) {
        throw SelectionError(std::string("select_human_head: degenerate head-top patch: ") + e.what());
    }
    if (virtual_plane.signed_distance(centroid) < 0) virtual_plane = virtual_plane.flipped();

    const Mat3 r = plane_align_transform(virtual_plane).rotation();
    double plane_z = 0.0;
    for (const auto& p : head_top) plane_z += (r * p).z();
    plane_z /= static_cast<double>(head_top.size());
    return extract(full, virtual_plane, poses, plane_z, plane_z - offset_head, false);
}

}  // namespace headscan
