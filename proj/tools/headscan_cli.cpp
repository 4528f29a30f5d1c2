// headscan: scan, reconstruct, select, scale, export and evaluate a head model.
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "headscan/evaluation.h"
#include "headscan/mesh_io.h"
#include "headscan/pipeline.h"

using namespace headscan;

namespace {

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string mode;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("-c,--config", c.config, "JSON configuration file (comments allowed)");
    cmd->add_option("--seed", c.seed, "override the random seed");
    cmd->add_option("-o,--out", c.out, "output directory");
    cmd->add_option("--mode", c.mode, "selection mode")->check(CLI::IsMember({"table", "human"}));
}

PipelineConfig make_config(const Common& c) {
    PipelineConfig cfg = c.config.empty() ? PipelineConfig{} : PipelineConfig::load(c.config);
    if (c.seed) cfg.seed = *c.seed;
    if (!c.out.empty()) cfg.output = c.out;
    if (c.mode == "table") cfg.selection.mode = SelectionMode::Table;
    if (c.mode == "human") cfg.selection.mode = SelectionMode::Human;
    cfg.validate();
    return cfg;
}

void note_timing(const PipelineConfig& cfg, const char* stage, double seconds) {
    std::filesystem::create_directories(cfg.output);
    std::ofstream out(cfg.output / artifacts::manifest, std::ios::app);
    char buf[96];
    std::snprintf(buf, sizeof buf, "%s_seconds = %.3f\n", stage, seconds);
    out << buf;
    std::fprintf(stderr, "%s: %.2f s\n", stage, seconds);
}

template <typename F>
void timed_stage(const PipelineConfig& cfg, const char* name, F&& f) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    note_timing(cfg, name, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"headscan - orbiting depth-scanner head reconstruction for 3D printing"};
    app.require_subcommand(1);

    Common common;
    bool quick = false;
    std::string template_out;
    auto* tmpl = app.add_subcommand("template", "print a commented configuration template");
    tmpl->add_flag("--quick", quick, "128x128 frames, 0.6 m loop, 128^3 volume");
    tmpl->add_option("-o,--out", template_out, "write to a file instead of stdout");

    auto* sim = app.add_subcommand("scan-sim", "render depth frames and sensor poses");
    sim->alias("simulate");
    auto* rec = app.add_subcommand("reconstruct", "track and fuse the frames, extract the surface");
    auto* sel = app.add_subcommand("select", "cut the head out of the reconstruction");
    auto* scl = app.add_subcommand("scale", "scale the head into the printer volume");
    auto* exp = app.add_subcommand("export", "write the print STL and PLY");
    auto* run = app.add_subcommand("run", "all stages in sequence");
    for (auto* cmd : {sim, rec, sel, scl, exp, run}) add_common(cmd, common);

    auto* eval = app.add_subcommand("evaluate", "two-sided Hausdorff report (reference first)");
    add_common(eval, common);
    std::vector<std::string> meshes;
    std::size_t area_samples = 0;
    eval->add_option("meshes", meshes, "reference and compared mesh (.obj/.stl/.ply)")->expected(0, 2);
    eval->add_option("--area-samples", area_samples, "area-uniform samples instead of vertices");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (tmpl->parsed()) {
            const std::string text = config_template(quick);
            if (template_out.empty()) {
                std::cout << text;
            } else {
                std::ofstream(template_out) << text;
            }
            return 0;
        }
        if (eval->parsed() && !meshes.empty()) {
            if (meshes.size() != 2) throw PipelineError("evaluate", "expected two mesh files");
            try {
                const TriangleMesh a = read_mesh(meshes[0]);
                const TriangleMesh b = read_mesh(meshes[1]);
                const Sampling s = area_samples ? Sampling::area_uniform(area_samples, common.seed.value_or(0))
                                                : Sampling::vertices();
                const auto report = hausdorff_report(a, b, s);
                std::cout << report.to_text();
                if (!common.out.empty()) {
                    std::filesystem::create_directories(common.out);
                    report.save_json(std::filesystem::path(common.out) / artifacts::report_json);
                    report.save_text(std::filesystem::path(common.out) / artifacts::report_txt);
                }
            } catch (const std::exception& e) {
                throw PipelineError("evaluate", e.what());
            }
            return 0;
        }

        const PipelineConfig cfg = make_config(common);
        if (run->parsed()) {
            const auto result = run_pipeline(cfg);
            for (const auto& t : result.timings) std::fprintf(stderr, "%s: %.2f s\n", t.stage.c_str(), t.seconds);
            std::fprintf(stderr, "reconstruction: %zu frames, %zu fell back, %.2f frames/s\n",
                         result.reconstruction.frames, result.reconstruction.fell_back,
                         result.reconstruction.frames_per_second);
            if (result.evaluated) {
                std::ifstream in(cfg.output / artifacts::report_txt);
                std::cout << in.rdbuf();
            }
        } else if (sim->parsed()) {
            timed_stage(cfg, "simulate", [&] { stage_simulate(cfg); });
        } else if (rec->parsed()) {
            timed_stage(cfg, "reconstruct", [&] {
                const auto s = stage_reconstruct(cfg);
                std::fprintf(stderr, "%zu frames, %zu fell back, %.2f frames/s\n", s.frames, s.fell_back,
                             s.frames_per_second);
            });
        } else if (sel->parsed()) {
            timed_stage(cfg, "select", [&] { stage_select(cfg); });
        } else if (scl->parsed()) {
            timed_stage(cfg, "scale", [&] { stage_scale(cfg); });
        } else if (exp->parsed()) {
            timed_stage(cfg, "export", [&] { stage_export(cfg); });
        } else if (eval->parsed()) {
            timed_stage(cfg, "evaluate", [&] {
                if (!stage_evaluate(cfg)) throw PipelineError("evaluate", "no reference mesh to compare against");
                std::ifstream in(cfg.output / artifacts::report_txt);
                std::cout << in.rdbuf();
            });
        }
    } catch (const PipelineError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return e.exit_code();
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
