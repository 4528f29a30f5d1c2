#include "headscan/meshing.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <unordered_map>

namespace headscan {

namespace mc {

const std::array<CubeEdge, 12>& cube_edges() {
    static const std::array<CubeEdge, 12> edges = [] {
        std::array<CubeEdge, 12> e{};
        int n = 0;
        for (int axis = 0; axis < 3; ++axis)
            for (int c = 0; c < 8; ++c)
                if (!(c & (1 << axis))) e[n++] = {c, axis};
        return e;
    }();
    return edges;
}

namespace {

int edge_between(int a, int b) {
    const int lo = std::min(a, b);
    const int axis = std::countr_zero(static_cast<unsigned>(a ^ b));
    const auto& edges = cube_edges();
    for (int i = 0; i < 12; ++i)
        if (edges[i].corner == lo && edges[i].axis == axis) return i;
    return -1;
}

bool share_face(int e1, int e2) {
    const auto& a = cube_edges()[e1];
    const auto& b = cube_edges()[e2];
    for (int axis = 0; axis < 3; ++axis) {
        if (axis == a.axis || axis == b.axis) continue;
        if (((a.corner >> axis) & 1) == ((b.corner >> axis) & 1)) return true;
    }
    return false;
}

// Corners of each face in counter-clockwise order seen from outside the cube.
std::array<std::array<int, 4>, 6> face_loops() {
    std::array<std::array<int, 4>, 6> loops{};
    int f = 0;
    for (int axis = 0; axis < 3; ++axis) {
        const int ua = (axis + 1) % 3, va = (axis + 2) % 3;
        for (int side = 0; side < 2; ++side) {
            // (u, v) winds counter-clockwise around +axis.
            std::array<int, 4> loop{};
            const int uv[4][2] = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
            for (int q = 0; q < 4; ++q)
                loop[q] = (side << axis) | (uv[q][0] << ua) | (uv[q][1] << va);
            if (side == 0) std::reverse(loop.begin(), loop.end());
            loops[f++] = loop;
        }
    }
    return loops;
}

std::vector<std::array<int, 3>> triangulate(int config) {
    const auto loops = face_loops();
    auto negative = [config](int c) { return (config >> c) & 1; };
    std::array<int, 12> next;
    next.fill(-1);
    for (const auto& loop : loops) {
        // Each run of negative corners is cut off by one segment from its entry edge to
        // its exit edge; on faces with two separate runs the negative corners stay apart.
        for (int q = 0; q < 4; ++q) {
            const int a = loop[q], b = loop[(q + 1) % 4];
            if (negative(a) || !negative(b)) continue;
            int r = (q + 1) % 4;
            while (negative(loop[(r + 1) % 4])) r = (r + 1) % 4;
            const int entry = edge_between(a, b);
            const int exit = edge_between(loop[r], loop[(r + 1) % 4]);
            next[entry] = exit;
        }
    }
    std::vector<std::array<int, 3>> tris;
    std::array<bool, 12> used{};
    for (int start = 0; start < 12; ++start) {
        if (next[start] < 0 || used[start]) continue;
        std::vector<int> poly;
        for (int e = start; !used[e]; e = next[e]) {
            used[e] = true;
            poly.push_back(e);
        }
        // A fan diagonal between two vertices on one cube face could be repeated by the
        // neighbouring cube, giving an edge with four faces; start the fan where none occurs.
        const std::size_t n = poly.size();
        std::size_t s0 = 0;
        for (std::size_t s = 0; s < n; ++s) {
            bool clean = true;
            for (std::size_t i = 2; i + 1 < n && clean; ++i) clean = !share_face(poly[s], poly[(s + i) % n]);
            if (clean) {
                s0 = s;
                break;
            }
        }
        for (std::size_t i = 1; i + 1 < n; ++i)
            tris.push_back({poly[s0], poly[(s0 + i) % n], poly[(s0 + i + 1) % n]});
    }
    return tris;
}

}  // namespace

const std::array<std::vector<std::array<int, 3>>, 256>& triangle_table() {
    static const auto table = [] {
        std::array<std::vector<std::array<int, 3>>, 256> t;
        for (int c = 0; c < 256; ++c) t[c] = triangulate(c);
        return t;
    }();
    return table;
}

}  // namespace mc

TriangleMesh marching_cubes(const TsdfVolume& volume, double iso) {
    constexpr double kSeparation = 1e-6;
    const auto& edges = mc::cube_edges();
    const auto& table = mc::triangle_table();
    const Vec3i res = volume.resolution();

    TriangleMesh mesh;
    std::unordered_map<std::uint64_t, std::uint32_t> edge_vertex;

    // Keeps corner values at least kSeparation from the iso level so edge vertices never
    // collapse onto a shared corner.
    auto separated = [&](double v) {
        if (v >= iso) return std::max(v, iso + kSeparation);
        return std::min(v, iso - kSeparation);
    };

    for (int k = 0; k + 1 < res.z(); ++k) {
        for (int j = 0; j + 1 < res.y(); ++j) {
            for (int i = 0; i + 1 < res.x(); ++i) {
                std::array<double, 8> val;
                int config = 0;
                bool observed = true;
                for (int c = 0; c < 8 && observed; ++c) {
                    const int ci = i + (c & 1), cj = j + ((c >> 1) & 1), ck = k + ((c >> 2) & 1);
                    const auto idx = volume.index(ci, cj, ck);
                    observed = volume.weight(idx) > 0.0;
                    val[c] = volume.tsdf(idx);
                    if (val[c] < iso) config |= 1 << c;
                }
                if (!observed || config == 0 || config == 255) continue;

                std::array<std::uint32_t, 12> vid{};
                for (const auto& tri : table[config]) {
                    for (int e : tri) {
                        const auto& ce = edges[e];
                        const int ci = i + (ce.corner & 1), cj = j + ((ce.corner >> 1) & 1),
                                  ck = k + ((ce.corner >> 2) & 1);
                        const std::uint64_t key = volume.index(ci, cj, ck) * 3ull + ce.axis;
                        auto [it, inserted] = edge_vertex.try_emplace(key, 0u);
                        if (inserted) {
                            const double v0 = separated(val[ce.corner]);
                            const double v1 = separated(val[ce.corner | (1 << ce.axis)]);
                            const double t = (iso - v0) / (v1 - v0);
                            Vec3 p = volume.voxel_center(ci, cj, ck);
                            p[ce.axis] += t * volume.voxel_size();
                            it->second = static_cast<std::uint32_t>(mesh.vertices.size());
                            mesh.vertices.push_back(p);
                        }
                        vid[e] = it->second;
                    }
                    mesh.faces.push_back({vid[tri[0]], vid[tri[1]], vid[tri[2]]});
                }
            }
        }
    }
    return mesh;
}

}  // namespace headscan
