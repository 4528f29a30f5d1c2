#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace headscan {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// Camera-to-world (or any frame-to-frame) rigid motion: x' = R x + t.
class RigidTransform {
public:
    RigidTransform() = default;
    RigidTransform(const Mat3& rotation, const Vec3& translation);

    static RigidTransform identity() { return {}; }
    static RigidTransform from_axis_angle(const Vec3& axis, double angle_rad,
                                          const Vec3& translation = Vec3::Zero());
    // Rows of [R | t], row-major, 12 values.
    static RigidTransform from_row_major(const std::array<double, 12>& rt);

    const Mat3& rotation() const { return rotation_; }
    const Vec3& translation() const { return translation_; }

    Vec3 apply(const Vec3& p) const { return rotation_ * p + translation_; }
    Vec3 rotate(const Vec3& v) const { return rotation_ * v; }
    RigidTransform inverse() const;

    Eigen::Matrix4d matrix() const;
    std::array<double, 12> row_major() const;

    // Angle of the relative rotation between two transforms, radians.
    static double rotation_angle_between(const RigidTransform& a, const RigidTransform& b);

private:
    Mat3 rotation_ = Mat3::Identity();
    Vec3 translation_ = Vec3::Zero();
};

// Result applies b first, then a.
RigidTransform compose(const RigidTransform& a, const RigidTransform& b);
RigidTransform inverse(const RigidTransform& t);

// Projects an arbitrary 3x3 matrix onto SO(3) (closest rotation in Frobenius norm).
Mat3 orthonormalize(const Mat3& m);

struct CameraIntrinsics {
    double fx = 0, fy = 0, cx = 0, cy = 0;
    int width = 0, height = 0;

    void validate() const;
    // Pinhole with the horizontal field of view given in degrees; principal point at the center.
    static CameraIntrinsics from_fov(int width, int height, double hfov_deg);
};

class DepthFrame {
public:
    DepthFrame() = default;
    DepthFrame(int width, int height);

    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t size() const { return depth_.size(); }

    bool valid(int u, int v) const { return valid_[index(u, v)] != 0; }
    double depth(int u, int v) const { return depth_[index(u, v)]; }
    bool valid(std::size_t i) const { return valid_[i] != 0; }
    double depth(std::size_t i) const { return depth_[i]; }

    // Throws if z is not finite and positive.
    void set(int u, int v, double z);
    void invalidate(int u, int v);
    void set(std::size_t i, double z);
    void invalidate(std::size_t i);

    std::size_t index(int u, int v) const {
        return static_cast<std::size_t>(v) * static_cast<std::size_t>(width_) +
               static_cast<std::size_t>(u);
    }
    std::size_t valid_count() const;
    bool matches(const CameraIntrinsics& k) const {
        return width_ == k.width && height_ == k.height;
    }

    bool operator==(const DepthFrame&) const = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<double> depth_;
    std::vector<std::uint8_t> valid_;
};

struct PointCloud {
    std::vector<Vec3> points;
    std::vector<Vec3> normals;  // empty or same size as points

    bool has_normals() const { return !normals.empty(); }
    std::size_t size() const { return points.size(); }
    bool empty() const { return points.empty(); }

    PointCloud transformed(const RigidTransform& t) const;
    PointCloud subset(const std::vector<std::size_t>& indices) const;
    void validate() const;
};

struct Rgb {
    std::uint8_t r = 0, g = 0, b = 0;
    bool operator==(const Rgb&) const = default;
};

struct TriangleMesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<std::uint32_t, 3>> faces;
    std::vector<Rgb> colors;  // empty or one per vertex

    bool empty() const { return faces.empty(); }
    bool has_colors() const { return !colors.empty(); }
    void validate() const;

    TriangleMesh transformed(const RigidTransform& t) const;
    Vec3 face_normal(std::size_t f) const;  // unit, from winding; zero for degenerate faces
    double face_area(std::size_t f) const;
    double signed_volume() const;
    double surface_area() const;
    Eigen::AlignedBox3d bounds() const;

    // Keeps faces whose three vertices are all selected; drops unreferenced vertices.
    TriangleMesh submesh(const std::vector<bool>& keep_vertex) const;
    void append(const TriangleMesh& other);
};

// Organized camera-frame cloud: one slot per pixel.
struct NormalMap {
    int width = 0;
    int height = 0;
    std::vector<Vec3> points;
    std::vector<Vec3> normals;
    std::vector<std::uint8_t> point_valid;
    std::vector<std::uint8_t> normal_valid;

    // Points with valid normals, optionally taking every `stride`-th pixel in both directions.
    PointCloud to_cloud(int stride = 1) const;
};

struct NormalOptions {
    int window = 1;                // neighbor offset in pixels
    double max_depth_jump = 0.05;  // meters; larger neighbor gaps make the normal invalid
};

PointCloud backproject(const DepthFrame& frame, const CameraIntrinsics& k,
                       const RigidTransform& pose = RigidTransform::identity());
// Camera-frame point for pixel (u, v) at depth z.
Vec3 unproject(const CameraIntrinsics& k, double u, double v, double z);
// Pixel coordinates and depth of a camera-frame point; nullopt when z <= 0.
std::optional<Vec3> project(const CameraIntrinsics& k, const Vec3& p);

NormalMap estimate_normals(const DepthFrame& frame, const CameraIntrinsics& k,
                           const NormalOptions& options = {});

// Camera looking from `eye` at `target`; camera y axis points away from `up`.
RigidTransform look_at(const Vec3& eye, const Vec3& target, const Vec3& up = Vec3::UnitZ());

// Area-uniform random surface samples with face normals; deterministic given seed.
PointCloud sample_surface(const TriangleMesh& mesh, std::size_t count, std::uint64_t seed);

}  // namespace headscan
