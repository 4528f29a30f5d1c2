#pragma once

#include <filesystem>
#include <vector>

#include "headscan/geometry.h"

namespace headscan {

// Depth frame file: a text header
//
//   HSDEPTH1
//   width <w>
//   height <h>
//   intrinsics <fx> <fy> <cx> <cy>
//   end
//
// followed by w * h little-endian uint16 depths in millimeters, row-major, 0 = no reading.
void write_depth_frame(const DepthFrame& frame, const CameraIntrinsics& k, const std::filesystem::path& path);

struct LoadedFrame {
    DepthFrame frame;
    CameraIntrinsics intrinsics;
};
LoadedFrame read_depth_frame(const std::filesystem::path& path);

// Depth rounded to the nearest millimeter, as stored on disk.
DepthFrame quantize_depth(const DepthFrame& frame);

// One camera-to-world pose per line: the 12 entries of [R | t], row-major.
void write_poses(const std::vector<RigidTransform>& poses, const std::filesystem::path& path);
std::vector<RigidTransform> read_poses(const std::filesystem::path& path);

// Recorded-scan directory: depth_0000.hsd, depth_0001.hsd, ... plus sensor_poses.txt.
std::filesystem::path frame_path(const std::filesystem::path& dir, std::size_t index);
std::size_t count_frames(const std::filesystem::path& dir);

}  // namespace headscan
