#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include "headscan/geometry.h"

namespace headscan {

// Parse failure; the message carries the file and a line number (text formats) or byte
// offset (binary formats).
class MeshFormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

TriangleMesh read_obj(const std::filesystem::path& path);
// Binary or ASCII STL. Vertices with bitwise-identical coordinates are merged.
TriangleMesh read_stl(const std::filesystem::path& path);
// ASCII PLY with vertex x/y/z, optional red/green/blue, and polygon faces.
TriangleMesh read_ply(const std::filesystem::path& path);
// Dispatches on the (case-insensitive) extension.
TriangleMesh read_mesh(const std::filesystem::path& path);

void write_obj(const TriangleMesh& mesh, const std::filesystem::path& path);

}  // namespace headscan
