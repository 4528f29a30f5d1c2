#pragma once

#include <filesystem>
#include <optional>
#include <utility>
#include <vector>

#include "headscan/geometry.h"

namespace headscan {

using Vec3i = Eigen::Vector3i;

// Dense voxel grid of truncated signed distances stored in units of the truncation
// distance (so values lie in [-1, 1]) and accumulated weights in [0, w_alpha].
// Voxel (i, j, k) is centered at origin + voxel_size * (i, j, k); x varies fastest.
class TsdfVolume {
public:
    TsdfVolume() = default;
    TsdfVolume(const Vec3i& resolution, double voxel_size, const Vec3& origin, double trunc_dist,
               double w_alpha = 64.0);

    // Cubic grid of `resolution` voxels per axis spanning `extent` meters around center,
    // with trunc_dist = trunc_multiple * voxel_size.
    static TsdfVolume cube(const Vec3& center, double extent, int resolution,
                           double trunc_multiple = 4.0, double w_alpha = 64.0);

    const Vec3i& resolution() const { return resolution_; }
    double voxel_size() const { return voxel_size_; }
    const Vec3& origin() const { return origin_; }
    double trunc_dist() const { return trunc_dist_; }
    double w_alpha() const { return w_alpha_; }
    std::size_t voxel_count() const { return tsdf_.size(); }

    std::size_t index(int i, int j, int k) const {
        return static_cast<std::size_t>(i) +
               static_cast<std::size_t>(resolution_.x()) *
                   (static_cast<std::size_t>(j) + static_cast<std::size_t>(resolution_.y()) * k);
    }
    Vec3 voxel_center(int i, int j, int k) const {
        return origin_ + voxel_size_ * Vec3(i, j, k);
    }
    bool contains_index(int i, int j, int k) const {
        return i >= 0 && j >= 0 && k >= 0 && i < resolution_.x() && j < resolution_.y() &&
               k < resolution_.z();
    }

    double tsdf(int i, int j, int k) const { return tsdf_[index(i, j, k)]; }
    double weight(int i, int j, int k) const { return weight_[index(i, j, k)]; }
    double tsdf(std::size_t idx) const { return tsdf_[idx]; }
    double weight(std::size_t idx) const { return weight_[idx]; }
    // Overwrites one voxel; the value is clamped to [-1, 1], weight to [0, w_alpha].
    void set(int i, int j, int k, double tsdf, double weight);

    // Trilinear value at a world point; nullopt outside the grid or when any of the 8
    // surrounding voxels is unobserved.
    std::optional<double> sample(const Vec3& p) const;
    // Normalized gradient of the field (points toward positive, i.e. free space).
    std::optional<Vec3> normal(const Vec3& p) const;

    Eigen::AlignedBox3d bounds() const;  // spans the voxel centers

    void save(const std::filesystem::path& path) const;
    static TsdfVolume load(const std::filesystem::path& path);

    bool operator==(const TsdfVolume&) const = default;

private:
    friend void integrate(TsdfVolume&, const DepthFrame&, const RigidTransform&,
                          const CameraIntrinsics&, double);

    Vec3i resolution_ = Vec3i::Zero();
    double voxel_size_ = 0.0;
    Vec3 origin_ = Vec3::Zero();
    double trunc_dist_ = 0.0;
    double w_alpha_ = 64.0;
    std::vector<double> tsdf_;
    std::vector<double> weight_;
};

// Running weighted average with the accumulated weight capped at w_alpha.
std::pair<double, double> tsdf_update(double D, double W, double d, double w, double w_alpha);

// Projective truncated signed distance of a camera-frame point against a depth frame:
// nullopt when the point does not project onto a valid pixel or lies more than trunc_dist
// behind the measured surface; otherwise (depth - z) / trunc_dist clamped to at most 1.
// depth is bilinear in the four surrounding pixels when all are valid and span less than
// trunc_dist, else the nearest pixel's.
std::optional<double> projective_tsdf(const DepthFrame& frame, const CameraIntrinsics& k,
                                      const Vec3& p_camera, double trunc_dist);

// Fuses one depth frame taken from camera-to-world `pose`.
void integrate(TsdfVolume& volume, const DepthFrame& frame, const RigidTransform& pose,
               const CameraIntrinsics& k, double w_frame = 1.0);

// Predicted surface seen from `pose`: per pixel, the first positive-to-negative zero
// crossing along the ray, with the normalized field gradient as normal. World frame.
PointCloud raycast(const TsdfVolume& volume, const RigidTransform& pose, const CameraIntrinsics& k);

}  // namespace headscan
