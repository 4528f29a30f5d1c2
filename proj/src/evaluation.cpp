#include "headscan/evaluation.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "headscan/bvh.h"
#include "headscan/export_scale.h"

namespace headscan {

double point_to_mesh_distance(const Vec3& p, const TriangleMesh& mesh) {
    if (mesh.empty()) throw std::invalid_argument("point_to_mesh_distance: empty mesh");
    const TriangleBvh bvh(mesh);
    return std::sqrt(bvh.closest_point(p).distance_sq);
}

std::vector<double> distances_to_mesh(std::span<const Vec3> points, const TriangleMesh& mesh) {
    if (mesh.empty()) throw std::invalid_argument("distances_to_mesh: empty mesh");
    const TriangleBvh bvh(mesh);
    std::vector<double> d(points.size());
    const auto n = static_cast<std::int64_t>(points.size());
#pragma omp parallel for schedule(dynamic, 256)
    for (std::int64_t i = 0; i < n; ++i)
        d[static_cast<std::size_t>(i)] = std::sqrt(bvh.closest_point(points[static_cast<std::size_t>(i)]).distance_sq);
    return d;
}

DistanceStats directed_distance(const TriangleMesh& from, const TriangleMesh& to, const Sampling& sampling) {
    if (from.empty() || to.empty()) throw std::invalid_argument("hausdorff: empty mesh");
    std::vector<Vec3> samples;
    if (sampling.kind == Sampling::Kind::Vertices) {
        samples = from.vertices;
    } else {
        if (sampling.count == 0) throw std::invalid_argument("hausdorff: sample count must be positive");
        samples = sample_surface(from, sampling.count, sampling.seed).points;
    }
    const auto d = distances_to_mesh(samples, to);
    DistanceStats s;
    s.samples = d.size();
    double sum = 0.0, sum_sq = 0.0;
    for (double x : d) {
        sum += x;
        sum_sq += x * x;
        s.max = std::max(s.max, x);
    }
    const double n = static_cast<double>(d.size());
    s.mean = 100.0 * sum / n;
    s.rms = 100.0 * std::sqrt(sum_sq / n);
    s.max *= 100.0;
    return s;
}

DistanceReport hausdorff_report(const TriangleMesh& m1, const TriangleMesh& m2, const Sampling& sampling) {
    DistanceReport r;
    r.forward = directed_distance(m1, m2, sampling);
    r.backward = directed_distance(m2, m1, sampling);
    r.two_sided.mean = std::max(r.forward.mean, r.backward.mean);
    r.two_sided.max = std::max(r.forward.max, r.backward.max);
    r.two_sided.rms = std::max(r.forward.rms, r.backward.rms);
    r.two_sided.samples = r.forward.samples + r.backward.samples;
    r.bbox_diagonal = 100.0 * m1.bounds().diagonal().norm();
    if (r.bbox_diagonal > 0) {
        r.bbox_pct_mean = 100.0 * r.two_sided.mean / r.bbox_diagonal;
        r.bbox_pct_max = 100.0 * r.two_sided.max / r.bbox_diagonal;
        r.bbox_pct_rms = 100.0 * r.two_sided.rms / r.bbox_diagonal;
    }
    return r;
}

namespace {

nlohmann::ordered_json stats_json(const DistanceStats& s) {
    return {{"mean_cm", s.mean}, {"max_cm", s.max}, {"rms_cm", s.rms}, {"samples", s.samples}};
}

}  // namespace

std::string DistanceReport::to_json() const {
    nlohmann::ordered_json j;
    j["forward"] = stats_json(forward);
    j["backward"] = stats_json(backward);
    j["two_sided"] = stats_json(two_sided);
    j["bbox_diagonal_cm"] = bbox_diagonal;
    j["bbox_pct"] = {{"mean", bbox_pct_mean}, {"max", bbox_pct_max}, {"rms", bbox_pct_rms}};
    return j.dump(2) + "\n";
}

std::string DistanceReport::to_text() const {
    std::string out;
    char buf[128];
    auto line = [&](const char* key, double v) {
        std::snprintf(buf, sizeof buf, "%s = %.6f\n", key, v);
        out += buf;
    };
    auto block = [&](const char* prefix, const DistanceStats& s) {
        std::string p(prefix);
        line((p + ".mean_cm").c_str(), s.mean);
        line((p + ".max_cm").c_str(), s.max);
        line((p + ".rms_cm").c_str(), s.rms);
        out += p + ".samples = " + std::to_string(s.samples) + "\n";
    };
    block("forward", forward);
    block("backward", backward);
    block("two_sided", two_sided);
    line("bbox_diagonal_cm", bbox_diagonal);
    line("bbox_pct.mean", bbox_pct_mean);
    line("bbox_pct.max", bbox_pct_max);
    line("bbox_pct.rms", bbox_pct_rms);
    return out;
}

static void write_text_file(const std::filesystem::path& path, const std::string& s) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << s;
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

void DistanceReport::save_json(const std::filesystem::path& path) const { write_text_file(path, to_json()); }
void DistanceReport::save_text(const std::filesystem::path& path) const { write_text_file(path, to_text()); }

Rgb distance_color(double distance, double range_min, double range_max) {
    if (!(range_max > range_min)) throw std::invalid_argument("distance_color: empty range");
    double s = (distance - range_min) / (range_max - range_min);
    s = std::clamp(std::isnan(s) ? 1.0 : s, 0.0, 1.0);
    // red -> green over [0, 0.5], green -> blue over [0.5, 1]
    if (s <= 0.5) return clamp_rgb(255.0 * (1.0 - 2.0 * s), 255.0 * 2.0 * s, 0.0);
    return clamp_rgb(0.0, 255.0 * (2.0 - 2.0 * s), 255.0 * (2.0 * s - 1.0));
}

TriangleMesh colorize_by_distance(const TriangleMesh& mesh, const TriangleMesh& reference,
                                  double range_min, double range_max) {
    if (mesh.empty() || reference.empty()) throw std::invalid_argument("colorize_by_distance: empty mesh");
    const auto d = distances_to_mesh(mesh.vertices, reference);
    TriangleMesh out = mesh;
    out.colors.resize(mesh.vertices.size());
    for (std::size_t i = 0; i < d.size(); ++i) out.colors[i] = distance_color(d[i], range_min, range_max);
    return out;
}

}  // namespace headscan
