#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "headscan/geometry.h"
#include "headscan/tsdf.h"

namespace headscan {

// Zero-level isosurface of the observed part of the volume. Cubes with any unobserved
// corner (weight 0) are skipped. Shared edge vertices are merged; faces are wound so that
// normals point from negative (inside) to positive values.
TriangleMesh marching_cubes(const TsdfVolume& volume, double iso = 0.0);

namespace mc {

// Cube corner c sits at offset (c & 1, (c >> 1) & 1, (c >> 2) & 1).
struct CubeEdge {
    int corner = 0;  // lower corner
    int axis = 0;    // 0 = x, 1 = y, 2 = z
};
const std::array<CubeEdge, 12>& cube_edges();

// Triangles (as cube-edge ids) for each of the 256 sign configurations; bit c is set when
// corner c is below the iso level.
const std::array<std::vector<std::array<int, 3>>, 256>& triangle_table();

}  // namespace mc

}  // namespace headscan
