#pragma once

#include <cstdint>
#include <vector>

#include "headscan/bvh.h"
#include "headscan/geometry.h"

namespace headscan {

struct Trajectory {
    std::vector<RigidTransform> poses;  // camera-to-world
    double radius = 0.0;
    Vec3 center = Vec3::Zero();

    std::size_t size() const { return poses.size(); }
    std::vector<Vec3> positions() const;
};

// Defaults approximate a time-of-flight depth camera at about 1 m plus a fused
// gyroscope/compass/accelerometer pose estimate.
struct SensorNoiseModel {
    double depth_sigma = 0.002;        // meters
    double depth_dropout = 0.005;      // probability per pixel
    double angle_sigma = 0.01;         // degrees
    double translation_sigma = 0.002;  // meters
    std::uint64_t seed = 0;

    static SensorNoiseModel none() { return {0.0, 0.0, 0.0, 0.0, 0}; }
    void validate() const;
};

// n_frames cameras evenly spaced in azimuth on a horizontal circle at z = height,
// all looking at center.
Trajectory circular_trajectory(const Vec3& center, double radius, double height, int n_frames);

// Ray casts a mesh into depth images; keeps the acceleration structure between frames.
class DepthRenderer {
public:
    explicit DepthRenderer(const TriangleMesh& mesh);

    // `stream` decorrelates the noise of different frames rendered with one seed.
    DepthFrame render(const RigidTransform& pose, const CameraIntrinsics& k,
                      const SensorNoiseModel& noise, std::uint64_t stream = 0) const;

private:
    TriangleBvh bvh_;
};

DepthFrame render_depth(const TriangleMesh& mesh, const RigidTransform& pose,
                        const CameraIntrinsics& k, const SensorNoiseModel& noise,
                        std::uint64_t stream = 0);

// Simulated motion-sensor reading: each pose rotated by N(0, angle_sigma) about a uniformly
// random axis and shifted by N(0, translation_sigma) per component.
Trajectory perturb_poses(const Trajectory& t, const SensorNoiseModel& noise);

// Mixes a seed with a stream id (splitmix64), for per-frame random streams.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace headscan
