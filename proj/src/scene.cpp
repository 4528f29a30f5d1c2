#include "headscan/scene.h"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace headscan::scene {

namespace {

// Lat-long closed surface; radius_of(dir) gives the distance from center along unit dir.
template <typename RadiusFn>
TriangleMesh star_surface(const Vec3& center, int rings, int segments, RadiusFn radius_of) {
    if (rings < 2 || segments < 3) throw std::invalid_argument("star_surface: too coarse");
    TriangleMesh m;
    m.vertices.push_back(center + radius_of(Vec3(0, 0, 1)) * Vec3(0, 0, 1));
    for (int i = 1; i < rings; ++i) {
        const double theta = M_PI * i / rings;
        for (int j = 0; j < segments; ++j) {
            const double phi = 2.0 * M_PI * j / segments;
            Vec3 dir(std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta));
            m.vertices.push_back(center + radius_of(dir) * dir);
        }
    }
    m.vertices.push_back(center + radius_of(Vec3(0, 0, -1)) * Vec3(0, 0, -1));
    const auto south = static_cast<std::uint32_t>(m.vertices.size() - 1);
    auto ring = [&](int i, int j) {
        return static_cast<std::uint32_t>(1 + (i - 1) * segments + (j % segments));
    };
    for (int j = 0; j < segments; ++j) m.faces.push_back({0, ring(1, j), ring(1, j + 1)});
    for (int i = 1; i + 1 < rings; ++i) {
        for (int j = 0; j < segments; ++j) {
            m.faces.push_back({ring(i, j), ring(i + 1, j), ring(i + 1, j + 1)});
            m.faces.push_back({ring(i, j), ring(i + 1, j + 1), ring(i, j + 1)});
        }
    }
    for (int j = 0; j < segments; ++j) m.faces.push_back({south, ring(rings - 1, j + 1), ring(rings - 1, j)});
    return m;
}

struct Bump {
    Vec3 dir;
    double amplitude;  // meters, negative for dents
    double width;      // angular sigma, radians
};

}  // namespace

TriangleMesh make_uv_sphere(const Vec3& center, double radius, int rings, int segments) {
    return star_surface(center, rings, segments, [radius](const Vec3&) { return radius; });
}

TriangleMesh make_box(const Vec3& lo, const Vec3& hi) {
    TriangleMesh m;
    for (int i = 0; i < 8; ++i)
        m.vertices.emplace_back(i & 1 ? hi.x() : lo.x(), i & 2 ? hi.y() : lo.y(), i & 4 ? hi.z() : lo.z());
    // Outward winding.
    const std::array<std::array<std::uint32_t, 4>, 6> quads{{
        {0, 2, 3, 1}, {4, 5, 7, 6}, {0, 1, 5, 4}, {2, 6, 7, 3}, {0, 4, 6, 2}, {1, 3, 7, 5},
    }};
    for (const auto& q : quads) {
        m.faces.push_back({q[0], q[1], q[2]});
        m.faces.push_back({q[0], q[2], q[3]});
    }
    return m;
}

TriangleMesh make_cylinder(const Vec3& base_center, double radius, double height, int segments) {
    TriangleMesh m;
    m.vertices.push_back(base_center);
    m.vertices.push_back(base_center + Vec3(0, 0, height));
    for (int j = 0; j < segments; ++j) {
        const double phi = 2.0 * M_PI * j / segments;
        Vec3 off(radius * std::cos(phi), radius * std::sin(phi), 0.0);
        m.vertices.push_back(base_center + off);
        m.vertices.push_back(base_center + off + Vec3(0, 0, height));
    }
    auto lo = [&](int j) { return static_cast<std::uint32_t>(2 + 2 * (j % segments)); };
    auto hi = [&](int j) { return static_cast<std::uint32_t>(3 + 2 * (j % segments)); };
    for (int j = 0; j < segments; ++j) {
        m.faces.push_back({0, lo(j + 1), lo(j)});
        m.faces.push_back({1, hi(j), hi(j + 1)});
        m.faces.push_back({lo(j), lo(j + 1), hi(j + 1)});
        m.faces.push_back({lo(j), hi(j + 1), hi(j)});
    }
    return m;
}

TriangleMesh make_head(const HeadShape& shape) {
    const std::array<Bump, 9> bumps{{
        {Vec3(0, 1, -0.12).normalized(), 0.022, 0.16},     // nose
        {Vec3(1, -0.05, 0).normalized(), 0.014, 0.17},     // right ear
        {Vec3(-1, -0.05, 0).normalized(), 0.014, 0.17},    // left ear
        {Vec3(0, 0.75, -0.65).normalized(), 0.012, 0.28},  // chin
        {Vec3(0, 0.85, 0.35).normalized(), 0.007, 0.30},   // brow
        {Vec3(0.38, 0.9, 0.12).normalized(), -0.008, 0.11},  // eye sockets
        {Vec3(-0.38, 0.9, 0.12).normalized(), -0.008, 0.11},
        {Vec3(0, -0.8, 0.35).normalized(), 0.012, 0.45},   // occiput
        {Vec3(0.2, 0.3, 1).normalized(), 0.006, 0.35},     // asymmetric crown
    }};
    const Vec3 ax = shape.semi_axes;
    const Vec3 c = shape.center;
    const double base_z = shape.base_z;
    return star_surface(c, shape.rings, shape.segments, [&](const Vec3& d) {
        // Ellipsoid radius along d.
        double r = 1.0 / std::sqrt(std::pow(d.x() / ax.x(), 2) + std::pow(d.y() / ax.y(), 2) +
                                   std::pow(d.z() / ax.z(), 2));
        for (const auto& b : bumps) {
            double ang = std::acos(std::clamp(d.dot(b.dir), -1.0, 1.0));
            r += b.amplitude * std::exp(-0.5 * ang * ang / (b.width * b.width));
        }
        if (d.z() < 0 && std::isfinite(base_z)) r = std::min(r, (c.z() - base_z) / -d.z());
        return r;
    });
}

Scene head_on_table() {
    Scene s;
    HeadShape shape;
    TriangleMesh head = make_head(shape);
    std::vector<bool> keep(head.vertices.size(), true);
    // Drop the base: faces lying in the table plane.
    TriangleMesh visible;
    visible.vertices = head.vertices;
    for (const auto& f : head.faces) {
        bool on_base = true;
        for (auto v : f) on_base = on_base && head.vertices[v].z() <= shape.base_z + 1e-9;
        if (!on_base) visible.faces.push_back(f);
    }
    s.ground_truth = visible.submesh(keep);
    s.mesh = make_box(Vec3(-0.6, -0.6, -0.03), Vec3(0.6, 0.6, 0.0));
    s.mesh.append(head);
    s.focus = Vec3(0, 0, 0.1);
    return s;
}

Scene human_bust() {
    Scene s;
    HeadShape shape;
    shape.center = Vec3(0, 0, 1.6);
    shape.base_z = -std::numeric_limits<double>::infinity();
    TriangleMesh head = make_head(shape);
    s.ground_truth = head;
    s.mesh = make_cylinder(Vec3(0, 0, 0.9), 0.18, 0.48, 96);   // torso
    s.mesh.append(make_cylinder(Vec3(0, -0.01, 1.38), 0.05, 0.14, 48));  // neck
    s.mesh.append(head);
    s.focus = Vec3(0, 0, 1.55);
    return s;
}

Scene sphere_and_box() {
    Scene s;
    s.mesh = make_box(Vec3(-0.6, -0.6, -0.03), Vec3(0.6, 0.6, 0.0));
    // Set apart so that neither hides the other for long along an orbit.
    TriangleMesh sphere = make_uv_sphere(Vec3(0.09, 0.08, 0.07), 0.07);
    TriangleMesh box = make_box(Vec3(-0.16, -0.14, 0.0), Vec3(0.02, -0.02, 0.15));
    s.ground_truth = sphere;
    s.ground_truth.append(box);
    s.mesh.append(s.ground_truth);
    s.focus = Vec3(0, 0, 0.06);
    return s;
}

}  // namespace headscan::scene
