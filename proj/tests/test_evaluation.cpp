#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include <nlohmann/json.hpp>

#include "headscan/evaluation.h"
#include "headscan/scene.h"
#include "oracles.h"

using namespace headscan;

namespace {

TriangleMesh random_soup(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    TriangleMesh m;
    for (std::size_t i = 0; i < n; ++i) {
        const Vec3 c(u(rng), u(rng), u(rng));
        const auto base = static_cast<std::uint32_t>(m.vertices.size());
        for (int k = 0; k < 3; ++k) m.vertices.push_back(c + 0.3 * Vec3(u(rng), u(rng), u(rng)));
        m.faces.push_back({base, base + 1, base + 2});
    }
    return m;
}

// Unit square in the plane z = h, split into a grid of n x n quads.
TriangleMesh square(double h, int n) {
    TriangleMesh m;
    for (int j = 0; j <= n; ++j)
        for (int i = 0; i <= n; ++i) m.vertices.emplace_back(double(i) / n, double(j) / n, h);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            const auto a = static_cast<std::uint32_t>(j * (n + 1) + i);
            m.faces.push_back({a, a + 1, a + n + 2});
            m.faces.push_back({a, a + n + 2, a + n + 1});
        }
    return m;
}

void expect_stats_near(const DistanceStats& a, const DistanceStats& b, double tol) {
    EXPECT_NEAR(a.mean, b.mean, tol);
    EXPECT_NEAR(a.max, b.max, tol);
    EXPECT_NEAR(a.rms, b.rms, tol);
}

}  // namespace

TEST(PointToMesh, Examples) {
    TriangleMesh tri;
    tri.vertices = {{-1, -1, 0}, {1, -1, 0}, {0, 1, 0}};
    tri.faces = {{0, 1, 2}};
    EXPECT_DOUBLE_EQ(point_to_mesh_distance(Vec3(0, 0, 1), tri), 1.0);
    EXPECT_DOUBLE_EQ(point_to_mesh_distance(Vec3(1, -1, 0), tri), 0.0);
    EXPECT_NEAR(point_to_mesh_distance(Vec3(0, -3, 0), tri), 2.0, 1e-15);  // edge region
    EXPECT_NEAR(point_to_mesh_distance(Vec3(0, 2, 0), tri), 1.0, 1e-15);   // vertex region
    EXPECT_THROW(point_to_mesh_distance(Vec3::Zero(), TriangleMesh{}), std::invalid_argument);
}

TEST(PointToMesh, MatchesExhaustiveOracle) {
    const auto mesh = random_soup(100, 1);
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    std::vector<Vec3> pts;
    for (int i = 0; i < 1000; ++i) pts.emplace_back(u(rng), u(rng), u(rng));
    const auto d = distances_to_mesh(pts, mesh);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        EXPECT_NEAR(d[i], oracle::point_mesh(pts[i], mesh), 1e-12);
        EXPECT_EQ(d[i], point_to_mesh_distance(pts[i], mesh));
    }
}

TEST(Hausdorff, IdenticalMeshesAreZero) {
    const auto head = scene::make_head();
    const auto r = hausdorff_report(head, head);
    EXPECT_EQ(r.two_sided.max, 0.0);
    EXPECT_EQ(r.two_sided.mean, 0.0);
    EXPECT_EQ(r.two_sided.rms, 0.0);
    EXPECT_EQ(r.bbox_pct_rms, 0.0);
    EXPECT_EQ(r.forward.samples, head.vertices.size());
}

TEST(Hausdorff, ParallelSquaresTenCentimetersApart) {
    const auto a = square(0.0, 4), b = square(0.1, 7);
    const auto r = hausdorff_report(a, b);
    for (const auto* s : {&r.forward, &r.backward, &r.two_sided}) {
        EXPECT_NEAR(s->mean, 10.0, 1e-12);
        EXPECT_NEAR(s->max, 10.0, 1e-12);
        EXPECT_NEAR(s->rms, 10.0, 1e-12);
    }
    EXPECT_NEAR(r.bbox_diagonal, 100 * std::sqrt(2.0), 1e-12);
    const auto area = hausdorff_report(a, b, Sampling::area_uniform(500, 3));
    EXPECT_NEAR(area.two_sided.rms, 10.0, 1e-12);
    EXPECT_EQ(area.forward.samples, 500u);
}

TEST(Hausdorff, DirectedMaxMatchesOracle) {
    const auto a = random_soup(120, 5), b = random_soup(150, 6);
    const auto s = directed_distance(a, b, Sampling::vertices());
    double mx = 0, sum = 0, sq = 0;
    for (const auto& v : a.vertices) {
        const double d = oracle::point_mesh(v, b);
        mx = std::max(mx, d);
        sum += d;
        sq += d * d;
    }
    const double n = static_cast<double>(a.vertices.size());
    EXPECT_NEAR(s.max, 100 * mx, 1e-10);
    EXPECT_NEAR(s.mean, 100 * sum / n, 1e-10);
    EXPECT_NEAR(s.rms, 100 * std::sqrt(sq / n), 1e-10);
    EXPECT_GE(s.max, s.mean);
    EXPECT_GE(s.max, s.rms);
}

TEST(Hausdorff, TwoSidedIsSymmetric) {
    const auto a = scene::make_uv_sphere(Vec3::Zero(), 0.1, 16, 32);
    const auto b = scene::make_box(Vec3(-0.08, -0.09, -0.1), Vec3(0.09, 0.07, 0.11));
    const auto ab = hausdorff_report(a, b), ba = hausdorff_report(b, a);
    expect_stats_near(ab.two_sided, ba.two_sided, 1e-12);
    expect_stats_near(ab.forward, ba.backward, 1e-12);
    expect_stats_near(ab.backward, ba.forward, 1e-12);
    EXPECT_GE(ab.two_sided.max, std::max(ab.forward.max, ab.backward.max));
}

TEST(Hausdorff, TranslationEquivariant) {
    const auto a = scene::make_uv_sphere(Vec3::Zero(), 0.1, 16, 32);
    const auto b = scene::make_box(Vec3(-0.08, -0.09, -0.1), Vec3(0.09, 0.07, 0.11));
    const RigidTransform t(Mat3::Identity(), Vec3(0.25, -0.5, 0.125));
    const auto r0 = hausdorff_report(a, b), r1 = hausdorff_report(a.transformed(t), b.transformed(t));
    expect_stats_near(r0.forward, r1.forward, 1e-12);
    expect_stats_near(r0.backward, r1.backward, 1e-12);
    expect_stats_near(r0.two_sided, r1.two_sided, 1e-12);
    EXPECT_NEAR(r0.bbox_pct_rms, r1.bbox_pct_rms, 1e-12);
}

TEST(Hausdorff, PercentagesUseReferenceDiagonal) {
    const auto a = scene::make_head();
    const auto b = a.transformed(RigidTransform(Mat3::Identity(), Vec3(0.003, 0, 0)));
    const auto r = hausdorff_report(a, b);
    const double diag_cm = 100 * a.bounds().diagonal().norm();
    EXPECT_NEAR(r.bbox_diagonal, diag_cm, 1e-12);
    EXPECT_NEAR(r.bbox_pct_mean, 100 * r.two_sided.mean / diag_cm, 1e-12);
    EXPECT_NEAR(r.bbox_pct_max, 100 * r.two_sided.max / diag_cm, 1e-12);
    EXPECT_NEAR(r.bbox_pct_rms, 100 * r.two_sided.rms / diag_cm, 1e-12);
}

TEST(Hausdorff, TableConventionIsInternallyConsistent) {
    // a reference scanner row: each metric over its percentage gives the same diagonal
    const double d_mean = 0.1868 / 0.4283 * 100, d_max = 0.6177 / 1.4168 * 100, d_rms = 0.2257 / 0.5177 * 100;
    EXPECT_NEAR(d_mean, 43.6, 0.05);
    EXPECT_NEAR(d_max, 43.6, 0.05);
    EXPECT_NEAR(d_rms, 43.6, 0.05);
    // and a report satisfies the same identity exactly
    const auto a = scene::make_head();
    const auto b = scene::make_uv_sphere(Vec3(0, 0, 0.11), 0.1, 24, 48);
    const auto r = hausdorff_report(a, b);
    EXPECT_NEAR(r.two_sided.mean / r.bbox_pct_mean * 100, r.bbox_diagonal, 1e-9);
    EXPECT_NEAR(r.two_sided.max / r.bbox_pct_max * 100, r.bbox_diagonal, 1e-9);
    EXPECT_NEAR(r.two_sided.rms / r.bbox_pct_rms * 100, r.bbox_diagonal, 1e-9);
}

TEST(Hausdorff, EmptyMeshIsAnError) {
    EXPECT_THROW(hausdorff_report(TriangleMesh{}, scene::make_head()), std::invalid_argument);
    EXPECT_THROW(hausdorff_report(scene::make_head(), TriangleMesh{}), std::invalid_argument);
}

TEST(Report, JsonAndTextCarryTheNumbers) {
    const auto r = hausdorff_report(square(0.0, 2), square(0.1, 3));
    const auto j = nlohmann::json::parse(r.to_json());
    EXPECT_NEAR(j["two_sided"]["rms_cm"].get<double>(), 10.0, 1e-12);
    EXPECT_NEAR(j["bbox_diagonal_cm"].get<double>(), r.bbox_diagonal, 1e-12);
    EXPECT_NE(r.to_text().find("two_sided.rms_cm = 10.000000"), std::string::npos);
}

TEST(Color, RampEndsAndClamping) {
    EXPECT_EQ(distance_color(0.0, 0.0, 0.01), (Rgb{255, 0, 0}));
    EXPECT_EQ(distance_color(0.005, 0.0, 0.01), (Rgb{0, 255, 0}));
    EXPECT_EQ(distance_color(0.01, 0.0, 0.01), (Rgb{0, 0, 255}));
    EXPECT_EQ(distance_color(5.0, 0.0, 0.01), (Rgb{0, 0, 255}));
    EXPECT_EQ(distance_color(-1.0, 0.0, 0.01), (Rgb{255, 0, 0}));
}

TEST(Color, NeverRedderForLargerDistance) {
    Rgb prev = distance_color(0.0, 0.0, 0.02);
    for (int i = 1; i <= 2000; ++i) {
        const Rgb c = distance_color(0.03 * i / 2000, 0.0, 0.02);
        EXPECT_LE(c.r, prev.r);
        EXPECT_GE(c.b, prev.b);
        prev = c;
    }
}

TEST(Color, SelfComparisonIsRed) {
    const auto head = scene::make_head();
    const auto c = colorize_by_distance(head, head, 0.0, 0.01);
    ASSERT_EQ(c.colors.size(), head.vertices.size());
    for (const auto& rgb : c.colors) EXPECT_EQ(rgb, (Rgb{255, 0, 0}));
}
