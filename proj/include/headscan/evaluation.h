#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "headscan/geometry.h"

namespace headscan {

// Exact distance from p to the closest triangle of mesh (BVH accelerated).
double point_to_mesh_distance(const Vec3& p, const TriangleMesh& mesh);

// Distances from every point to the surface of mesh.
std::vector<double> distances_to_mesh(std::span<const Vec3> points, const TriangleMesh& mesh);

struct DistanceStats {
    double mean = 0.0;  // cm
    double max = 0.0;
    double rms = 0.0;
    std::size_t samples = 0;
};

struct DistanceReport {
    DistanceStats forward;    // m1 -> m2
    DistanceStats backward;   // m2 -> m1
    DistanceStats two_sided;  // per-statistic max of the two directions
    double bbox_diagonal = 0.0;  // cm, of m1
    double bbox_pct_mean = 0.0;
    double bbox_pct_max = 0.0;
    double bbox_pct_rms = 0.0;

    std::string to_json() const;
    std::string to_text() const;
    void save_json(const std::filesystem::path& path) const;
    void save_text(const std::filesystem::path& path) const;
};

struct Sampling {
    enum class Kind { Vertices, AreaUniform } kind = Kind::Vertices;
    std::size_t count = 0;  // area-uniform only
    std::uint64_t seed = 0;

    static Sampling vertices() { return {}; }
    static Sampling area_uniform(std::size_t n, std::uint64_t seed = 0) { return {Kind::AreaUniform, n, seed}; }
};

DistanceStats directed_distance(const TriangleMesh& from, const TriangleMesh& to, const Sampling& sampling);

// m1 is the reference: its bounding-box diagonal normalizes the percentages.
DistanceReport hausdorff_report(const TriangleMesh& m1, const TriangleMesh& m2,
                                const Sampling& sampling = Sampling::vertices());

// Red at range_min (meters), green midway, blue at range_max; clamped outside.
Rgb distance_color(double distance, double range_min, double range_max);

// Copy of mesh with per-vertex colors from the distance to reference.
TriangleMesh colorize_by_distance(const TriangleMesh& mesh, const TriangleMesh& reference,
                                  double range_min, double range_max);

}  // namespace headscan
