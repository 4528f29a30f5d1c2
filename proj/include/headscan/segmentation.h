#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "headscan/geometry.h"
#include "headscan/scanner.h"

namespace headscan {

// Hessian normal form a x + b y + c z + d = 0 with (a, b, c) unit length.
struct Plane {
    double a = 0, b = 0, c = 1, d = 0;

    static Plane from_normal_offset(const Vec3& normal, double d);
    static Plane through_point(const Vec3& normal, const Vec3& point);

    Vec3 normal() const { return {a, b, c}; }
    double signed_distance(const Vec3& p) const { return a * p.x() + b * p.y() + c * p.z() + d; }
    Plane flipped() const { return {-a, -b, -c, -d}; }
    void validate() const;
};

// Convex polygon (counter-clockwise, in the aligned frame's x-y plane) extruded over
// z in (z_min, z_max].
struct Prism {
    std::vector<Vec2> base_polygon;
    double z_min = 0.0;
    double z_max = 0.0;

    bool contains(const Vec3& p) const;
    void validate() const;
};

class SelectionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct PlaneFit {
    Plane plane;
    std::vector<std::size_t> inliers;
};

// Largest-consensus plane over max_iters random 3-point samples, refit by least squares on
// its inliers; deterministic given seed.
PlaneFit ransac_plane(const PointCloud& cloud, double dist_thresh, int max_iters, std::uint64_t seed);

// Total least squares plane through the centroid.
Plane fit_plane(std::span<const Vec3> points);

// Rotation taking the plane normal to +z, zero translation.
RigidTransform plane_align_transform(const Plane& plane);

// Counter-clockwise hull without collinear boundary points.
std::vector<Vec2> convex_hull_2d(std::vector<Vec2> points);
double polygon_area(std::span<const Vec2> polygon);
// Inclusive of the boundary; polygon must be convex and counter-clockwise.
bool point_in_convex_polygon(std::span<const Vec2> polygon, const Vec2& p);

struct Selection {
    std::vector<std::size_t> indices;  // into the input cloud, ascending
    PointCloud points;                 // the selected points in the input frame
    Plane plane;                       // support or virtual plane, oriented toward the poses
    RigidTransform alignment;          // world -> aligned frame
    Prism prism;                       // in the aligned frame
};

// Object resting on a support plane: points inside the prism spanned by the hull of the
// sensor-pose loop, strictly more than dist_thresh above the plane and no higher than the
// highest pose.
Selection select_head_on_table(const PointCloud& full, const Plane& plane,
                               const PointCloud& plane_inliers, const Trajectory& poses,
                               double dist_thresh);

// Upright person without a support plane: a virtual plane is fit to the k points nearest
// the pose centroid (the top of the head) and the prism reaches offset_head below it.
Selection select_human_head(const PointCloud& full, const Trajectory& poses, std::size_t k,
                            double offset_head);

// max(100, 0.5% of the cloud).
std::size_t default_neighbor_count(std::size_t cloud_size);

}  // namespace headscan
