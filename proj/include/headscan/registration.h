#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "headscan/geometry.h"

namespace headscan {

using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;

// Edge-preserving smoothing. Valid pixels become the bilateral-weighted mean of their
// window; an invalid pixel is filled when at least 3 window pixels are valid and they form
// a majority of the window (isolated holes fill, silhouettes do not grow).
DepthFrame bilateral_filter(const DepthFrame& frame, double sigma_space, double sigma_range);

struct IcpParams {
    int max_iterations = 30;
    double max_correspondence_distance = 0.10;  // meters
    double max_normal_angle = 30.0;             // degrees
    double convergence_threshold = 1e-6;        // relative change of the objective
    double degeneracy_condition = 1e6;          // condition number of the 6x6 system
    // Pairs farther apart than factor * median pair distance are dropped (0 disables), but
    // never those within outlier_floor meters.
    double outlier_median_factor = 3.0;
    double outlier_floor = 0.002;

    void validate() const;
};

struct IcpResult {
    RigidTransform transform;
    double rms_error = 0.0;        // point-to-plane, meters
    double inlier_fraction = 0.0;  // accepted correspondences / source points
    bool converged = false;
    bool degenerate = false;
    int iterations = 0;
    double condition_number = 0.0;
    // Mean squared point-to-plane residual after each accepted iteration (first entry is
    // the initial alignment).
    std::vector<double> objective;
};

// Linearized point-to-plane step. Minimizes sum_i (n_i . (p_i + w x p_i + t - q_i))^2 over
// x = (w, t) with w the small-angle rotation vector.
struct PointToPlaneStep {
    Vec6 x = Vec6::Zero();
    double condition_number = 0.0;
};
PointToPlaneStep solve_point_to_plane(std::span<const Vec3> source, std::span<const Vec3> target,
                                      std::span<const Vec3> target_normals,
                                      double degeneracy_condition = 1e6);

// Rigid transform for a small-angle step, rotation re-orthonormalized.
RigidTransform step_to_transform(const Vec6& x);

// Registers source onto target (which must carry normals). The returned transform maps
// source coordinates into the target frame.
IcpResult icp_point_to_plane(const PointCloud& source, const PointCloud& target,
                             const RigidTransform& init, const IcpParams& params = {});

// Weighted blend of two absolute poses: linear in translation, normalized quaternion blend
// (hemisphere aligned) in rotation.
RigidTransform fuse_pose(const RigidTransform& icp, const RigidTransform& sensor, double w_icp,
                         double w_sensor);

struct TrackingOptions {
    IcpParams icp;
    double w_icp = 0.8;
    double w_sensor = 0.2;
    bool filter = true;
    double sigma_space = 1.0;   // pixels
    double sigma_range = 0.01;  // meters
    int source_stride = 2;      // use every n-th pixel as an ICP source point
    double min_inlier_fraction = 0.2;
    NormalOptions normals;
};

struct TrackResult {
    RigidTransform pose;  // camera-to-world estimate for this frame
    IcpResult icp;        // raw registration, before fusion
    bool converged = false;
    bool bootstrap = false;  // first frame: no model to track against
    bool fell_back = false;  // registration unusable; pose is the sensor pose
};

// Frame-to-model tracking: filter, back-project, register against the ray-cast model
// prediction starting from prev_pose, then fuse with the motion-sensor pose.
TrackResult track_frame(const DepthFrame& frame, const PointCloud& model_prediction,
                        const RigidTransform& sensor_pose, const RigidTransform& prev_pose,
                        const CameraIntrinsics& k, const TrackingOptions& options = {});

}  // namespace headscan
