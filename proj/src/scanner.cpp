#include "headscan/scanner.h"

#include <cmath>
#include <random>
#include <stdexcept>

namespace headscan {

std::vector<Vec3> Trajectory::positions() const {
    std::vector<Vec3> out;
    out.reserve(poses.size());
    for (const auto& p : poses) out.push_back(p.translation());
    return out;
}

void SensorNoiseModel::validate() const {
    if (depth_sigma < 0 || angle_sigma < 0 || translation_sigma < 0)
        throw std::invalid_argument("noise model: sigmas must be non-negative");
    if (!(depth_dropout >= 0 && depth_dropout <= 1))
        throw std::invalid_argument("noise model: dropout must lie in [0, 1]");
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

Trajectory circular_trajectory(const Vec3& center, double radius, double height, int n_frames) {
    if (!(radius > 0)) throw std::invalid_argument("circular_trajectory: radius must be positive");
    if (n_frames < 2) throw std::invalid_argument("circular_trajectory: need at least 2 frames");
    Trajectory t;
    t.radius = radius;
    t.center = center;
    t.poses.reserve(n_frames);
    for (int i = 0; i < n_frames; ++i) {
        const double phi = 2.0 * M_PI * i / n_frames;
        Vec3 eye(center.x() + radius * std::cos(phi), center.y() + radius * std::sin(phi), height);
        t.poses.push_back(look_at(eye, center));
    }
    return t;
}

DepthRenderer::DepthRenderer(const TriangleMesh& mesh) {
    if (mesh.empty()) throw std::invalid_argument("render_depth: empty mesh");
    bvh_ = TriangleBvh(mesh);
}

DepthFrame DepthRenderer::render(const RigidTransform& pose, const CameraIntrinsics& k,
                                 const SensorNoiseModel& noise, std::uint64_t stream) const {
    k.validate();
    noise.validate();
    DepthFrame frame(k.width, k.height);
    const Vec3 origin = pose.translation();
    const int n = k.width * k.height;

    std::vector<double> depth(static_cast<std::size_t>(n), 0.0);
#pragma omp parallel for schedule(dynamic, 64)
    for (int i = 0; i < n; ++i) {
        const int u = i % k.width;
        const int v = i / k.width;
        // Direction scaled so that the ray parameter equals camera-frame depth.
        const Vec3 dir = pose.rotate(Vec3((u - k.cx) / k.fx, (v - k.cy) / k.fy, 1.0));
        const auto hit = bvh_.intersect(origin, dir);
        if (hit.found()) depth[static_cast<std::size_t>(i)] = hit.t;
    }

    std::mt19937_64 rng(mix_seed(noise.seed, stream));
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const bool noisy = noise.depth_sigma > 0 || noise.depth_dropout > 0;
    for (std::size_t i = 0; i < depth.size(); ++i) {
        double z = depth[i];
        if (!(z > 0)) continue;
        if (noisy) {
            z += noise.depth_sigma * gauss(rng);
            if (unit(rng) < noise.depth_dropout || !(z > 0)) continue;
        }
        frame.set(i, z);
    }
    return frame;
}

DepthFrame render_depth(const TriangleMesh& mesh, const RigidTransform& pose,
                        const CameraIntrinsics& k, const SensorNoiseModel& noise,
                        std::uint64_t stream) {
    return DepthRenderer(mesh).render(pose, k, noise, stream);
}

Trajectory perturb_poses(const Trajectory& t, const SensorNoiseModel& noise) {
    noise.validate();
    Trajectory out = t;
    std::mt19937_64 rng(mix_seed(noise.seed, 0x706f736573ull));
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (auto& pose : out.poses) {
        Vec3 axis(gauss(rng), gauss(rng), gauss(rng));
        const double angle = noise.angle_sigma * gauss(rng) * M_PI / 180.0;
        Vec3 shift(gauss(rng), gauss(rng), gauss(rng));
        shift *= noise.translation_sigma;
        Mat3 r = pose.rotation();
        if (angle != 0.0 && axis.norm() > 0)
            r = Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix() * r;
        pose = RigidTransform(r, pose.translation() + shift);
    }
    return out;
}

}  // namespace headscan
