#include "headscan/export_scale.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <stdexcept>

namespace headscan {

double PrinterVolume::base_length() const { return std::min(x, y); }

void PrinterVolume::validate() const {
    if (!(x > 0 && y > 0 && z > 0)) throw std::invalid_argument("printer volume: dimensions must be positive");
}

double compute_loop_diameter(const Trajectory& poses) {
    if (poses.size() < 2) throw std::invalid_argument("compute_loop_diameter: need at least 2 poses");
    Eigen::AlignedBox3d box;
    for (const auto& p : poses.poses) box.extend(p.translation());
    const Vec3 ext = box.sizes();
    return std::max(ext.x(), ext.y());
}

double scale_factor(double l_vol, double d_loop) {
    if (!(l_vol > 0) || !(d_loop > 0)) throw std::invalid_argument("scale_factor: lengths must be positive");
    return l_vol / d_loop;
}

TriangleMesh scale_mesh(const TriangleMesh& mesh, double sf, const PrinterVolume& volume) {
    if (!(sf > 0)) throw std::invalid_argument("scale_mesh: scale factor must be positive");
    volume.validate();
    if (mesh.vertices.empty()) throw std::invalid_argument("scale_mesh: empty mesh");
    Vec3 c = Vec3::Zero();
    for (const auto& v : mesh.vertices) c += v;
    c /= static_cast<double>(mesh.vertices.size());

    TriangleMesh out = mesh;
    for (auto& v : out.vertices) v = c + sf * (v - c);
    const auto box = out.bounds();
    const Vec3 size = box.sizes();
    if (size.x() > volume.x || size.y() > volume.y || size.z() > volume.z) {
        char msg[160];
        std::snprintf(msg, sizeof msg, "scale_mesh: scaled model %.4f x %.4f x %.4f m exceeds the build volume",
                      size.x(), size.y(), size.z());
        throw std::invalid_argument(msg);
    }
    const Vec3 shift(0.5 * volume.x - box.center().x(), 0.5 * volume.y - box.center().y(), -box.min().z());
    for (auto& v : out.vertices) v += shift;
    return out;
}

namespace {

static_assert(std::endian::native == std::endian::little, "little-endian host expected");

template <typename T>
void put(std::ostream& out, T value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

}  // namespace

void export_stl(const TriangleMesh& mesh, const std::filesystem::path& path) {
    if (mesh.empty()) throw std::invalid_argument("export_stl: empty mesh");
    mesh.validate();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    char header[80] = {};
    std::strncpy(header, "headscan binary STL", sizeof header);
    out.write(header, sizeof header);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(mesh.faces.size()));
    for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
        const Vec3 n = mesh.face_normal(f);
        for (int a = 0; a < 3; ++a) put<float>(out, static_cast<float>(n[a]));
        for (auto vi : mesh.faces[f])
            for (int a = 0; a < 3; ++a) put<float>(out, static_cast<float>(mesh.vertices[vi][a]));
        put<std::uint16_t>(out, 0);
    }
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

void export_ply(const TriangleMesh& mesh, const std::filesystem::path& path) {
    mesh.validate();
    std::unique_ptr<std::FILE, int (*)(std::FILE*)> f(std::fopen(path.c_str(), "w"), &std::fclose);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    const bool color = mesh.has_colors();
    std::fprintf(f.get(), "ply\nformat ascii 1.0\ncomment headscan\nelement vertex %zu\n", mesh.vertices.size());
    std::fprintf(f.get(), "property double x\nproperty double y\nproperty double z\n");
    if (color) std::fprintf(f.get(), "property uchar red\nproperty uchar green\nproperty uchar blue\n");
    std::fprintf(f.get(), "element face %zu\nproperty list uchar uint vertex_indices\nend_header\n",
                 mesh.faces.size());
    for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
        const Vec3& v = mesh.vertices[i];
        std::fprintf(f.get(), "%.17g %.17g %.17g", v.x(), v.y(), v.z());
        if (color) std::fprintf(f.get(), " %u %u %u", mesh.colors[i].r, mesh.colors[i].g, mesh.colors[i].b);
        std::fputc('\n', f.get());
    }
    for (const auto& t : mesh.faces) std::fprintf(f.get(), "3 %u %u %u\n", t[0], t[1], t[2]);
    if (std::ferror(f.get())) throw std::runtime_error("write failed: " + path.string());
}

Rgb clamp_rgb(double r, double g, double b) {
    auto c = [](double x) {
        if (!(x > 0)) return std::uint8_t{0};
        return static_cast<std::uint8_t>(std::lround(std::min(x, 255.0)));
    };
    return {c(r), c(g), c(b)};
}

}  // namespace headscan
