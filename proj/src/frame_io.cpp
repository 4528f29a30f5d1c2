#include "headscan/frame_io.h"

#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "headscan/mesh_io.h"

namespace headscan {

static_assert(std::endian::native == std::endian::little, "little-endian host expected");

namespace {

std::uint16_t to_mm(double depth) {
    const double mm = std::round(depth * 1000.0);
    if (mm < 1.0 || mm > 65535.0) return 0;
    return static_cast<std::uint16_t>(mm);
}

}  // namespace

DepthFrame quantize_depth(const DepthFrame& frame) {
    DepthFrame out(frame.width(), frame.height());
    for (std::size_t i = 0; i < frame.size(); ++i) {
        if (!frame.valid(i)) continue;
        const auto mm = to_mm(frame.depth(i));
        if (mm) out.set(i, mm / 1000.0);
    }
    return out;
}

void write_depth_frame(const DepthFrame& frame, const CameraIntrinsics& k, const std::filesystem::path& path) {
    if (!frame.matches(k)) throw std::invalid_argument("write_depth_frame: frame size does not match intrinsics");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    char buf[256];
    std::snprintf(buf, sizeof buf, "HSDEPTH1\nwidth %d\nheight %d\nintrinsics %.17g %.17g %.17g %.17g\nend\n",
                  frame.width(), frame.height(), k.fx, k.fy, k.cx, k.cy);
    out << buf;
    std::vector<std::uint16_t> raw(frame.size(), 0);
    for (std::size_t i = 0; i < frame.size(); ++i)
        if (frame.valid(i)) raw[i] = to_mm(frame.depth(i));
    out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size() * 2));
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

LoadedFrame read_depth_frame(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    auto fail = [&](int line, const std::string& what) {
        return MeshFormatError(path.string() + ":" + std::to_string(line) + ": " + what);
    };
    std::string line;
    if (!std::getline(in, line) || line != "HSDEPTH1") throw fail(1, "not a depth frame (missing HSDEPTH1)");
    int width = -1, height = -1, lineno = 1;
    CameraIntrinsics k;
    bool have_k = false;
    while (true) {
        ++lineno;
        if (!std::getline(in, line)) throw fail(lineno, "header ended without 'end'");
        std::istringstream ss(line);
        std::string key;
        ss >> key;
        if (key == "end") break;
        if (key == "width") ss >> width;
        else if (key == "height") ss >> height;
        else if (key == "intrinsics") have_k = static_cast<bool>(ss >> k.fx >> k.fy >> k.cx >> k.cy);
        else throw fail(lineno, "unknown header key '" + key + "'");
        if (ss.fail()) throw fail(lineno, "malformed value");
    }
    if (width <= 0 || height <= 0 || !have_k) throw fail(lineno, "header lacks width, height or intrinsics");
    k.width = width;
    k.height = height;

    const auto offset = static_cast<long long>(in.tellg());
    std::vector<std::uint16_t> raw(static_cast<std::size_t>(width) * height);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size() * 2));
    if (in.gcount() != static_cast<std::streamsize>(raw.size() * 2))
        throw MeshFormatError(path.string() + ": byte " + std::to_string(offset + in.gcount()) +
                              ": truncated depth grid");
    LoadedFrame out{DepthFrame(width, height), k};
    for (std::size_t i = 0; i < raw.size(); ++i)
        if (raw[i]) out.frame.set(i, raw[i] / 1000.0);
    return out;
}

void write_poses(const std::vector<RigidTransform>& poses, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    char buf[32];
    for (const auto& p : poses) {
        const auto v = p.row_major();
        for (std::size_t i = 0; i < v.size(); ++i) {
            std::snprintf(buf, sizeof buf, "%.17g", v[i]);
            out << (i ? " " : "") << buf;
        }
        out << '\n';
    }
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::vector<RigidTransform> read_poses(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::vector<RigidTransform> poses;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos || line[0] == '#') continue;
        std::istringstream ss(line);
        std::array<double, 12> v{};
        for (auto& x : v)
            if (!(ss >> x)) throw MeshFormatError(path.string() + ":" + std::to_string(lineno) + ": expected 12 numbers");
        const auto pose = RigidTransform::from_row_major(v);
        if ((pose.rotation().transpose() * pose.rotation() - Mat3::Identity()).norm() > 1e-6)
            throw MeshFormatError(path.string() + ":" + std::to_string(lineno) + ": rotation is not orthonormal");
        poses.push_back(pose);
    }
    return poses;
}

std::filesystem::path frame_path(const std::filesystem::path& dir, std::size_t index) {
    char name[32];
    std::snprintf(name, sizeof name, "depth_%04zu.hsd", index);
    return dir / name;
}

std::size_t count_frames(const std::filesystem::path& dir) {
    std::size_t n = 0;
    while (std::filesystem::exists(frame_path(dir, n))) ++n;
    return n;
}

}  // namespace headscan
