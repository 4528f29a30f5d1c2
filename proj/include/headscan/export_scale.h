#pragma once

#include <filesystem>

#include "headscan/geometry.h"
#include "headscan/scanner.h"

namespace headscan {

// Printer build envelope in meters. Default is a 254 x 254 x 305 mm desktop printer.
struct PrinterVolume {
    double x = 0.254;
    double y = 0.254;
    double z = 0.305;

    double base_length() const;  // min(x, y)
    void validate() const;
};

// Larger of the x and y extents of the pose positions.
double compute_loop_diameter(const Trajectory& poses);
double scale_factor(double l_vol, double d_loop);

// Scales about the vertex centroid, then centers the model over the build plate with its
// lowest point on z = 0. Throws std::invalid_argument if it does not fit.
TriangleMesh scale_mesh(const TriangleMesh& mesh, double sf, const PrinterVolume& volume);

// Binary little-endian STL; normals recomputed from the winding.
void export_stl(const TriangleMesh& mesh, const std::filesystem::path& path);
// ASCII PLY, with uchar red/green/blue when the mesh has colors.
void export_ply(const TriangleMesh& mesh, const std::filesystem::path& path);

Rgb clamp_rgb(double r, double g, double b);

}  // namespace headscan
