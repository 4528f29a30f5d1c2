#include "headscan/mesh_io.h"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

namespace headscan {

namespace {

std::string describe(const std::filesystem::path& path, std::size_t line) {
    return path.string() + ":" + std::to_string(line) + ": ";
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

std::vector<char> slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void add_polygon(TriangleMesh& mesh, const std::vector<std::int64_t>& poly,
                 const std::filesystem::path& path, std::size_t line) {
    if (poly.size() < 3) throw MeshFormatError(describe(path, line) + "face with fewer than 3 vertices");
    for (auto i : poly)
        if (i < 0 || static_cast<std::size_t>(i) >= mesh.vertices.size())
            throw MeshFormatError(describe(path, line) + "face index out of range");
    for (std::size_t k = 1; k + 1 < poly.size(); ++k) {
        std::array<std::uint32_t, 3> f{static_cast<std::uint32_t>(poly[0]),
                                       static_cast<std::uint32_t>(poly[k]),
                                       static_cast<std::uint32_t>(poly[k + 1])};
        if (f[0] == f[1] || f[1] == f[2] || f[0] == f[2]) continue;
        mesh.faces.push_back(f);
    }
}

float read_f32_le(const char* p) {
    std::uint32_t bits;
    std::memcpy(&bits, p, 4);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
    return std::bit_cast<float>(bits);
}

std::uint32_t read_u32_le(const char* p) {
    std::uint32_t v;
    std::memcpy(&v, p, 4);
    if constexpr (std::endian::native == std::endian::big) v = __builtin_bswap32(v);
    return v;
}

struct StlVertexKey {
    std::uint32_t x, y, z;
    auto operator<=>(const StlVertexKey&) const = default;
};

class StlBuilder {
public:
    void add(const std::array<Vec3, 3>& tri) {
        std::array<std::uint32_t, 3> f{};
        for (int k = 0; k < 3; ++k) f[k] = vertex(tri[k]);
        if (f[0] == f[1] || f[1] == f[2] || f[0] == f[2]) return;
        mesh.faces.push_back(f);
    }
    TriangleMesh mesh;

private:
    std::uint32_t vertex(const Vec3& v) {
        const auto fx = static_cast<float>(v.x()), fy = static_cast<float>(v.y()),
                   fz = static_cast<float>(v.z());
        StlVertexKey key{std::bit_cast<std::uint32_t>(fx), std::bit_cast<std::uint32_t>(fy),
                         std::bit_cast<std::uint32_t>(fz)};
        auto [it, inserted] = index_.try_emplace(key, static_cast<std::uint32_t>(mesh.vertices.size()));
        if (inserted) mesh.vertices.emplace_back(fx, fy, fz);
        return it->second;
    }
    std::map<StlVertexKey, std::uint32_t> index_;
};

}  // namespace

TriangleMesh read_obj(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    TriangleMesh mesh;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream ss(line);
        std::string tag;
        if (!(ss >> tag) || tag[0] == '#') continue;
        if (tag == "v") {
            Vec3 v;
            if (!(ss >> v.x() >> v.y() >> v.z()))
                throw MeshFormatError(describe(path, lineno) + "malformed vertex");
            mesh.vertices.push_back(v);
        } else if (tag == "f") {
            std::vector<std::int64_t> poly;
            std::string tok;
            while (ss >> tok) {
                std::int64_t idx = 0;
                try {
                    idx = std::stoll(tok.substr(0, tok.find('/')));
                } catch (const std::exception&) {
                    throw MeshFormatError(describe(path, lineno) + "malformed face index '" + tok + "'");
                }
                if (idx < 0) idx += static_cast<std::int64_t>(mesh.vertices.size());
                else idx -= 1;
                poly.push_back(idx);
            }
            add_polygon(mesh, poly, path, lineno);
        }
    }
    return mesh;
}

TriangleMesh read_stl(const std::filesystem::path& path) {
    const auto data = slurp(path);
    StlBuilder builder;
    if (data.size() >= 84) {
        const auto count = read_u32_le(data.data() + 80);
        if (data.size() == 84 + 50ull * count) {
            for (std::uint32_t i = 0; i < count; ++i) {
                const char* p = data.data() + 84 + 50ull * i + 12;
                std::array<Vec3, 3> tri;
                for (int k = 0; k < 3; ++k)
                    tri[k] = Vec3(read_f32_le(p + 12 * k), read_f32_le(p + 12 * k + 4),
                                  read_f32_le(p + 12 * k + 8));
                builder.add(tri);
            }
            return std::move(builder.mesh);
        }
    }
    std::string text(data.begin(), data.end());
    if (lower(text.substr(0, 5)) != "solid")
        throw MeshFormatError(path.string() + ": byte 80: triangle count does not match file size");
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    std::vector<Vec3> pending;
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream ss(line);
        std::string tag;
        if (!(ss >> tag)) continue;
        tag = lower(tag);
        if (tag == "vertex") {
            Vec3 v;
            if (!(ss >> v.x() >> v.y() >> v.z()))
                throw MeshFormatError(describe(path, lineno) + "malformed vertex");
            pending.push_back(v);
        } else if (tag == "endloop") {
            if (pending.size() != 3)
                throw MeshFormatError(describe(path, lineno) + "facet without exactly 3 vertices");
            builder.add({pending[0], pending[1], pending[2]});
            pending.clear();
        }
    }
    return std::move(builder.mesh);
}

TriangleMesh read_ply(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::string line;
    std::size_t lineno = 0;
    auto next_line = [&]() {
        if (!std::getline(in, line)) throw MeshFormatError(describe(path, lineno) + "unexpected end of file");
        ++lineno;
    };

    next_line();
    if (line.rfind("ply", 0) != 0) throw MeshFormatError(describe(path, lineno) + "missing 'ply' magic");

    struct Element {
        std::string name;
        std::size_t count = 0;
        std::vector<std::string> props;
        std::vector<bool> is_list;
    };
    std::vector<Element> elements;
    for (;;) {
        next_line();
        std::istringstream ss(line);
        std::string tag;
        ss >> tag;
        if (tag == "format") {
            std::string fmt;
            ss >> fmt;
            if (fmt != "ascii") throw MeshFormatError(describe(path, lineno) + "only ASCII PLY is supported");
        } else if (tag == "element") {
            Element e;
            if (!(ss >> e.name >> e.count)) throw MeshFormatError(describe(path, lineno) + "malformed element");
            elements.push_back(e);
        } else if (tag == "property") {
            if (elements.empty()) throw MeshFormatError(describe(path, lineno) + "property before element");
            std::string type, name;
            ss >> type;
            bool list = type == "list";
            if (list) {
                std::string ct, it;
                ss >> ct >> it;
            }
            ss >> name;
            elements.back().props.push_back(name);
            elements.back().is_list.push_back(list);
        } else if (tag == "end_header") {
            break;
        }
    }

    TriangleMesh mesh;
    bool any_color = false;
    std::vector<Rgb> colors;
    for (const auto& e : elements) {
        for (std::size_t i = 0; i < e.count; ++i) {
            next_line();
            std::istringstream ss(line);
            if (e.name == "vertex") {
                Vec3 v = Vec3::Zero();
                Rgb c;
                bool has_c = false;
                for (std::size_t p = 0; p < e.props.size(); ++p) {
                    double val;
                    if (!(ss >> val)) throw MeshFormatError(describe(path, lineno) + "malformed vertex");
                    const auto& n = e.props[p];
                    if (n == "x") v.x() = val;
                    else if (n == "y") v.y() = val;
                    else if (n == "z") v.z() = val;
                    else if (n == "red" || n == "green" || n == "blue") {
                        auto b = static_cast<std::uint8_t>(std::clamp(val, 0.0, 255.0));
                        (n == "red" ? c.r : n == "green" ? c.g : c.b) = b;
                        has_c = true;
                    }
                }
                mesh.vertices.push_back(v);
                colors.push_back(c);
                any_color = any_color || has_c;
            } else if (e.name == "face") {
                for (std::size_t p = 0; p < e.props.size(); ++p) {
                    if (!e.is_list[p]) {
                        double skip;
                        ss >> skip;
                        continue;
                    }
                    std::size_t n = 0;
                    if (!(ss >> n)) throw MeshFormatError(describe(path, lineno) + "malformed face");
                    std::vector<std::int64_t> poly(n);
                    for (auto& idx : poly)
                        if (!(ss >> idx)) throw MeshFormatError(describe(path, lineno) + "malformed face");
                    if (e.props[p] == "vertex_indices" || e.props[p] == "vertex_index")
                        add_polygon(mesh, poly, path, lineno);
                }
            }
        }
    }
    if (any_color) mesh.colors = std::move(colors);
    return mesh;
}

TriangleMesh read_mesh(const std::filesystem::path& path) {
    const auto ext = lower(path.extension().string());
    if (ext == ".obj") return read_obj(path);
    if (ext == ".stl") return read_stl(path);
    if (ext == ".ply") return read_ply(path);
    throw MeshFormatError(path.string() + ": unknown mesh extension '" + ext + "'");
}

void write_obj(const TriangleMesh& mesh, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    char buf[128];
    for (const auto& v : mesh.vertices) {
        std::snprintf(buf, sizeof buf, "v %.17g %.17g %.17g\n", v.x(), v.y(), v.z());
        out << buf;
    }
    for (const auto& f : mesh.faces) out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace headscan
