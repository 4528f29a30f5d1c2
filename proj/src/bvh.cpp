#include "headscan/bvh.h"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace headscan {

namespace {

constexpr std::uint32_t kLeafFaces = 4;

// Slab test; returns the entry distance or +inf on a miss.
double ray_box(const Eigen::AlignedBox3d& box, const Vec3& origin, const Vec3& inv_dir,
               double t_min, double t_max) {
    for (int a = 0; a < 3; ++a) {
        double t0 = (box.min()[a] - origin[a]) * inv_dir[a];
        double t1 = (box.max()[a] - origin[a]) * inv_dir[a];
        if (std::isnan(t0) || std::isnan(t1)) {
            // Ray parallel to the slab and lying exactly on a bounding plane.
            if (origin[a] < box.min()[a] || origin[a] > box.max()[a])
                return std::numeric_limits<double>::infinity();
            continue;
        }
        if (t0 > t1) std::swap(t0, t1);
        t_min = std::max(t_min, t0);
        t_max = std::min(t_max, t1);
        if (t_min > t_max) return std::numeric_limits<double>::infinity();
    }
    return t_min;
}

double box_distance_sq(const Eigen::AlignedBox3d& box, const Vec3& p) {
    Vec3 d = (box.min() - p).cwiseMax(p - box.max()).cwiseMax(Vec3::Zero());
    return d.squaredNorm();
}

}  // namespace

std::optional<double> intersect_triangle(const Vec3& origin, const Vec3& dir, const Vec3& a,
                                         const Vec3& b, const Vec3& c, double t_min,
                                         double t_max) {
    // Woop, Benthin & Wald style: shear into a ray-aligned frame and evaluate edge
    // functions so that shared edges are classified identically by both triangles.
    int kz = 0;
    dir.cwiseAbs().maxCoeff(&kz);
    int kx = (kz + 1) % 3;
    int ky = (kx + 1) % 3;
    if (dir[kz] < 0) std::swap(kx, ky);
    const double sx = dir[kx] / dir[kz];
    const double sy = dir[ky] / dir[kz];
    const double sz = 1.0 / dir[kz];

    const Vec3 pa = a - origin, pb = b - origin, pc = c - origin;
    const double ax = pa[kx] - sx * pa[kz], ay = pa[ky] - sy * pa[kz];
    const double bx = pb[kx] - sx * pb[kz], by = pb[ky] - sy * pb[kz];
    const double cx = pc[kx] - sx * pc[kz], cy = pc[ky] - sy * pc[kz];

    const double u = cx * by - cy * bx;
    const double v = ax * cy - ay * cx;
    const double w = bx * ay - by * ax;
    if ((u < 0 || v < 0 || w < 0) && (u > 0 || v > 0 || w > 0)) return std::nullopt;
    const double det = u + v + w;
    if (det == 0.0) return std::nullopt;

    const double az = sz * pa[kz], bz = sz * pb[kz], cz = sz * pc[kz];
    const double t = (u * az + v * bz + w * cz) / det;
    if (!(t > t_min && t < t_max)) return std::nullopt;
    return t;
}

Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
    // Voronoi-region walk (Ericson, Real-Time Collision Detection 5.1.5).
    const Vec3 ab = b - a, ac = c - a, ap = p - a;
    const double d1 = ab.dot(ap), d2 = ac.dot(ap);
    if (d1 <= 0 && d2 <= 0) return a;

    const Vec3 bp = p - b;
    const double d3 = ab.dot(bp), d4 = ac.dot(bp);
    if (d3 >= 0 && d4 <= d3) return b;

    const double vc = d1 * d4 - d3 * d2;
    if (vc <= 0 && d1 >= 0 && d3 <= 0) return a + (d1 / (d1 - d3)) * ab;

    const Vec3 cp = p - c;
    const double d5 = ab.dot(cp), d6 = ac.dot(cp);
    if (d6 >= 0 && d5 <= d6) return c;

    const double vb = d5 * d2 - d1 * d6;
    if (vb <= 0 && d2 >= 0 && d6 <= 0) return a + (d2 / (d2 - d6)) * ac;

    const double va = d3 * d6 - d5 * d4;
    if (va <= 0 && (d4 - d3) >= 0 && (d5 - d6) >= 0)
        return b + ((d4 - d3) / ((d4 - d3) + (d5 - d6))) * (c - b);

    const double denom = 1.0 / (va + vb + vc);
    return a + ab * (vb * denom) + ac * (vc * denom);
}

TriangleBvh::TriangleBvh(const TriangleMesh& mesh)
    : vertices_(mesh.vertices), faces_(mesh.faces) {
    order_.resize(faces_.size());
    std::iota(order_.begin(), order_.end(), 0u);
    if (!faces_.empty()) {
        nodes_.reserve(2 * faces_.size() / kLeafFaces + 2);
        build(0, static_cast<std::uint32_t>(faces_.size()));
    }
}

std::int32_t TriangleBvh::build(std::uint32_t begin, std::uint32_t end) {
    const auto id = static_cast<std::int32_t>(nodes_.size());
    nodes_.emplace_back();
    Eigen::AlignedBox3d box, centroids;
    for (auto i = begin; i < end; ++i) {
        const auto& f = faces_[order_[i]];
        Vec3 c = Vec3::Zero();
        for (auto v : f) {
            box.extend(vertices_[v]);
            c += vertices_[v];
        }
        centroids.extend(c / 3.0);
    }
    nodes_[id].box = box;
    nodes_[id].begin = begin;
    nodes_[id].end = end;
    if (end - begin <= kLeafFaces) return id;

    int axis = 0;
    centroids.sizes().maxCoeff(&axis);
    if (centroids.sizes()[axis] <= 0.0) return id;

    auto centroid = [&](std::uint32_t f) {
        const auto& t = faces_[f];
        return vertices_[t[0]][axis] + vertices_[t[1]][axis] + vertices_[t[2]][axis];
    };
    const auto mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](std::uint32_t a, std::uint32_t b) {
                         double ca = centroid(a), cb = centroid(b);
                         return ca < cb || (ca == cb && a < b);
                     });
    const auto left = build(begin, mid);
    const auto right = build(mid, end);
    nodes_[id].left = left;
    nodes_[id].right = right;
    return id;
}

RayHit TriangleBvh::intersect(const Vec3& origin, const Vec3& dir, double t_min) const {
    RayHit best;
    if (nodes_.empty()) return best;
    const Vec3 inv_dir = dir.cwiseInverse();
    std::vector<std::int32_t> stack;
    stack.reserve(64);
    stack.push_back(0);
    while (!stack.empty()) {
        const Node& n = nodes_[stack.back()];
        stack.pop_back();
        if (ray_box(n.box, origin, inv_dir, t_min, best.t) ==
            std::numeric_limits<double>::infinity())
            continue;
        if (n.left < 0) {
            for (auto i = n.begin; i < n.end; ++i) {
                const auto f = order_[i];
                const auto& t = faces_[f];
                auto hit = intersect_triangle(origin, dir, vertices_[t[0]], vertices_[t[1]],
                                              vertices_[t[2]], t_min, best.t);
                if (hit && (*hit < best.t || (*hit == best.t && f < best.face))) {
                    best.t = *hit;
                    best.face = f;
                }
            }
            continue;
        }
        stack.push_back(n.right);
        stack.push_back(n.left);
    }
    return best;
}

TriangleBvh::Closest TriangleBvh::closest_point(const Vec3& p) const {
    Closest best;
    if (nodes_.empty()) return best;
    std::vector<std::pair<double, std::int32_t>> stack;
    stack.reserve(64);
    stack.emplace_back(box_distance_sq(nodes_[0].box, p), 0);
    while (!stack.empty()) {
        auto [d, id] = stack.back();
        stack.pop_back();
        if (d > best.distance_sq) continue;
        const Node& n = nodes_[id];
        if (n.left < 0) {
            for (auto i = n.begin; i < n.end; ++i) {
                const auto f = order_[i];
                const auto& t = faces_[f];
                Vec3 q = closest_point_on_triangle(p, vertices_[t[0]], vertices_[t[1]],
                                                   vertices_[t[2]]);
                double dq = (q - p).squaredNorm();
                if (dq < best.distance_sq) {
                    best.distance_sq = dq;
                    best.point = q;
                    best.face = f;
                }
            }
            continue;
        }
        double dl = box_distance_sq(nodes_[n.left].box, p);
        double dr = box_distance_sq(nodes_[n.right].box, p);
        // Visit the nearer child first.
        if (dl <= dr) {
            stack.emplace_back(dr, n.right);
            stack.emplace_back(dl, n.left);
        } else {
            stack.emplace_back(dl, n.left);
            stack.emplace_back(dr, n.right);
        }
    }
    return best;
}

}  // namespace headscan
