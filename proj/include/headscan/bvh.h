#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "headscan/geometry.h"

namespace headscan {

struct RayHit {
    double t = std::numeric_limits<double>::infinity();
    std::uint32_t face = 0;
    bool found() const { return t < std::numeric_limits<double>::infinity(); }
};

// Watertight ray/triangle test (front and back faces). Returns the ray parameter of the
// hit when it lies in (t_min, t_max), nullopt otherwise.
std::optional<double> intersect_triangle(const Vec3& origin, const Vec3& dir, const Vec3& a,
                                         const Vec3& b, const Vec3& c, double t_min = 0.0,
                                         double t_max = std::numeric_limits<double>::infinity());

// Closest point on triangle abc to p (vertex, edge and interior regions).
Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c);

// Bounding volume hierarchy over the faces of a mesh. Holds a copy of the geometry.
class TriangleBvh {
public:
    TriangleBvh() = default;
    explicit TriangleBvh(const TriangleMesh& mesh);

    bool empty() const { return faces_.empty(); }

    // Nearest hit with t > t_min along origin + t * dir.
    RayHit intersect(const Vec3& origin, const Vec3& dir, double t_min = 0.0) const;

    struct Closest {
        double distance_sq = std::numeric_limits<double>::infinity();
        Vec3 point = Vec3::Zero();
        std::uint32_t face = 0;
    };
    Closest closest_point(const Vec3& p) const;

private:
    struct Node {
        Eigen::AlignedBox3d box;
        std::uint32_t begin = 0, end = 0;
        std::int32_t left = -1, right = -1;
    };
    std::int32_t build(std::uint32_t begin, std::uint32_t end);

    std::vector<Vec3> vertices_;
    std::vector<std::array<std::uint32_t, 3>> faces_;
    std::vector<std::uint32_t> order_;
    std::vector<Node> nodes_;
};

}  // namespace headscan
