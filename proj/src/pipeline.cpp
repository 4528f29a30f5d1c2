#include "headscan/pipeline.h"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include <nlohmann/json.hpp>

#include "headscan/evaluation.h"
#include "headscan/frame_io.h"
#include "headscan/mesh_io.h"
#include "headscan/meshing.h"
#include "headscan/scene.h"
#include "headscan/segmentation.h"
#include "headscan/tsdf.h"

namespace headscan {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

// ---- errors

PipelineError::PipelineError(std::string stage, const std::string& message)
    : std::runtime_error(stage + ": " + message), stage_(std::move(stage)) {}

int PipelineError::exit_code_for(const std::string& stage) {
    static const char* order[] = {"config", "simulate", "reconstruct", "select", "scale", "export", "evaluate"};
    for (int i = 0; i < 7; ++i)
        if (stage == order[i]) return 2 + i;
    return 1;
}

int PipelineError::exit_code() const { return exit_code_for(stage_); }

// ---- config

namespace {

void check_keys(const json& j, const std::string& section, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw std::invalid_argument(section + ": expected an object");
    for (const auto& [key, value] : j.items()) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || key == a;
        if (!ok) throw std::invalid_argument(section + ": unknown key '" + key + "'");
    }
}

template <typename T>
void opt(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

void opt_vec3(const json& j, const char* key, Vec3& out) {
    if (!j.contains(key)) return;
    const auto v = j.at(key).get<std::vector<double>>();
    if (v.size() != 3) throw std::invalid_argument(std::string(key) + ": expected 3 numbers");
    out = Vec3(v[0], v[1], v[2]);
}

json vec3_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

}  // namespace

PipelineConfig PipelineConfig::from_json_text(const std::string& text) {
    PipelineConfig c;
    try {
        const json j = json::parse(text, nullptr, true, true);
        check_keys(j, "config", {"input", "output", "seed", "trajectory", "noise", "intrinsics", "tsdf", "icp",
                                 "fusion", "filter", "tracking", "selection", "printer", "evaluation"});
        opt(j, "input", c.input);
        if (j.contains("output")) c.output = j.at("output").get<std::string>();
        opt(j, "seed", c.seed);
        if (j.contains("trajectory")) {
            const auto& t = j["trajectory"];
            check_keys(t, "trajectory", {"radius", "height", "frames", "center"});
            opt(t, "radius", c.trajectory.radius);
            opt(t, "height", c.trajectory.height);
            opt(t, "frames", c.trajectory.frames);
            opt_vec3(t, "center", c.trajectory.center);
        }
        if (j.contains("noise")) {
            const auto& n = j["noise"];
            check_keys(n, "noise", {"enabled", "depth_sigma", "depth_dropout", "angle_sigma_deg", "translation_sigma"});
            opt(n, "enabled", c.noise_enabled);
            opt(n, "depth_sigma", c.noise.depth_sigma);
            opt(n, "depth_dropout", c.noise.depth_dropout);
            opt(n, "angle_sigma_deg", c.noise.angle_sigma);
            opt(n, "translation_sigma", c.noise.translation_sigma);
        }
        if (j.contains("intrinsics")) {
            const auto& k = j["intrinsics"];
            check_keys(k, "intrinsics", {"width", "height", "fx", "fy", "cx", "cy"});
            opt(k, "width", c.intrinsics.width);
            opt(k, "height", c.intrinsics.height);
            c.intrinsics.cx = 0.5 * (c.intrinsics.width - 1);
            c.intrinsics.cy = 0.5 * (c.intrinsics.height - 1);
            opt(k, "fx", c.intrinsics.fx);
            c.intrinsics.fy = c.intrinsics.fx;
            opt(k, "fy", c.intrinsics.fy);
            opt(k, "cx", c.intrinsics.cx);
            opt(k, "cy", c.intrinsics.cy);
        }
        if (j.contains("tsdf")) {
            const auto& t = j["tsdf"];
            check_keys(t, "tsdf", {"resolution", "extent", "center", "trunc_multiple", "w_alpha"});
            opt(t, "resolution", c.tsdf.resolution);
            opt(t, "extent", c.tsdf.extent);
            opt_vec3(t, "center", c.tsdf.center);
            opt(t, "trunc_multiple", c.tsdf.trunc_multiple);
            opt(t, "w_alpha", c.tsdf.w_alpha);
        }
        auto& tr = c.tracking;
        if (j.contains("icp")) {
            const auto& i = j["icp"];
            check_keys(i, "icp", {"max_iterations", "max_correspondence_distance", "max_normal_angle_deg",
                                  "convergence_threshold", "degeneracy_condition", "outlier_median_factor",
                                  "outlier_floor", "source_stride", "min_inlier_fraction"});
            opt(i, "max_iterations", tr.icp.max_iterations);
            opt(i, "max_correspondence_distance", tr.icp.max_correspondence_distance);
            opt(i, "max_normal_angle_deg", tr.icp.max_normal_angle);
            opt(i, "convergence_threshold", tr.icp.convergence_threshold);
            opt(i, "degeneracy_condition", tr.icp.degeneracy_condition);
            opt(i, "outlier_median_factor", tr.icp.outlier_median_factor);
            opt(i, "outlier_floor", tr.icp.outlier_floor);
            opt(i, "source_stride", tr.source_stride);
            opt(i, "min_inlier_fraction", tr.min_inlier_fraction);
        }
        if (j.contains("fusion")) {
            const auto& f = j["fusion"];
            check_keys(f, "fusion", {"w_icp", "w_sensor"});
            opt(f, "w_icp", tr.w_icp);
            opt(f, "w_sensor", tr.w_sensor);
        }
        if (j.contains("filter")) {
            const auto& f = j["filter"];
            check_keys(f, "filter", {"enabled", "sigma_space", "sigma_range"});
            opt(f, "enabled", tr.filter);
            opt(f, "sigma_space", tr.sigma_space);
            opt(f, "sigma_range", tr.sigma_range);
        }
        if (j.contains("tracking")) {
            const auto& t = j["tracking"];
            check_keys(t, "tracking", {"max_loss_fraction"});
            opt(t, "max_loss_fraction", c.max_tracking_loss);
        }
        if (j.contains("selection")) {
            const auto& s = j["selection"];
            check_keys(s, "selection", {"mode", "plane_threshold", "ransac_iterations", "k", "offset_head"});
            if (s.contains("mode")) {
                const auto m = s["mode"].get<std::string>();
                if (m == "table") c.selection.mode = SelectionMode::Table;
                else if (m == "human") c.selection.mode = SelectionMode::Human;
                else throw std::invalid_argument("selection.mode must be 'table' or 'human', got '" + m + "'");
            }
            opt(s, "plane_threshold", c.selection.plane_threshold);
            opt(s, "ransac_iterations", c.selection.ransac_iterations);
            opt(s, "k", c.selection.k);
            opt(s, "offset_head", c.selection.offset_head);
        }
        if (j.contains("printer")) {
            const auto& p = j["printer"];
            check_keys(p, "printer", {"x", "y", "z"});
            opt(p, "x", c.printer.x);
            opt(p, "y", c.printer.y);
            opt(p, "z", c.printer.z);
        }
        if (j.contains("evaluation")) {
            const auto& e = j["evaluation"];
            check_keys(e, "evaluation", {"reference", "area_sampling", "samples", "color_max_cm"});
            opt(e, "reference", c.evaluation.reference);
            opt(e, "area_sampling", c.evaluation.area_sampling);
            opt(e, "samples", c.evaluation.samples);
            opt(e, "color_max_cm", c.evaluation.color_max_cm);
        }
    } catch (const json::exception& e) {
        throw PipelineError("config", e.what());
    } catch (const std::invalid_argument& e) {
        throw PipelineError("config", e.what());
    }
    c.validate();
    return c;
}

PipelineConfig PipelineConfig::load(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw PipelineError("config", "cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return from_json_text(ss.str());
    } catch (const PipelineError& e) {
        throw PipelineError("config", path.string() + ": " + std::string(e.what()).substr(8));
    }
}

void PipelineConfig::validate() const {
    auto fail = [](const std::string& m) { throw PipelineError("config", m); };
    const auto& tr = tracking;
    if (tr.w_icp < 0 || tr.w_sensor < 0 || std::abs(tr.w_icp + tr.w_sensor - 1.0) > 1e-9)
        fail("fusion: w_icp + w_sensor must equal 1 (got " + std::to_string(tr.w_icp + tr.w_sensor) + ")");
    if (!(trajectory.radius > 0)) fail("trajectory.radius must be positive");
    if (trajectory.frames < 3) fail("trajectory.frames must be at least 3");
    if (!(tsdf.extent > 0) || tsdf.resolution < 2 || !(tsdf.trunc_multiple > 0) || !(tsdf.w_alpha > 0))
        fail("tsdf: extent, trunc_multiple and w_alpha must be positive and resolution >= 2");
    if (!(max_tracking_loss >= 0 && max_tracking_loss <= 1)) fail("tracking.max_loss_fraction must be in [0, 1]");
    if (!(selection.plane_threshold > 0) || selection.ransac_iterations <= 0)
        fail("selection: plane_threshold and ransac_iterations must be positive");
    if (selection.k != 0 && selection.k < 3) fail("selection.k must be 0 (automatic) or at least 3");
    if (!(selection.offset_head >= 0)) fail("selection.offset_head must be non-negative");
    if (!(tr.sigma_space > 0 && tr.sigma_range > 0)) fail("filter: sigmas must be positive");
    if (tr.source_stride < 1) fail("icp.source_stride must be at least 1");
    if (!(evaluation.color_max_cm > 0)) fail("evaluation.color_max_cm must be positive");
    if (evaluation.area_sampling && evaluation.samples == 0) fail("evaluation.samples must be positive");
    try {
        intrinsics.validate();
        tr.icp.validate();
        printer.validate();
        noise.validate();
    } catch (const std::invalid_argument& e) {
        fail(e.what());
    }
    if (!is_synthetic() && !fs::exists(input)) fail("input does not exist: " + input);
    if (!evaluation.reference.empty() && !fs::exists(evaluation.reference))
        fail("evaluation.reference does not exist: " + evaluation.reference);
}

bool PipelineConfig::is_synthetic() const { return input.rfind("synthetic:", 0) == 0; }

bool PipelineConfig::is_frame_directory() const { return !is_synthetic() && fs::is_directory(input); }

fs::path PipelineConfig::frames_dir() const {
    return is_frame_directory() ? fs::path(input) : output / artifacts::frames_dir;
}

std::string PipelineConfig::to_json() const {
    ordered_json j;
    j["input"] = input;
    j["output"] = output.string();
    j["seed"] = seed;
    j["trajectory"] = {{"radius", trajectory.radius}, {"height", trajectory.height},
                       {"frames", trajectory.frames}, {"center", vec3_json(trajectory.center)}};
    j["noise"] = {{"enabled", noise_enabled}, {"depth_sigma", noise.depth_sigma},
                  {"depth_dropout", noise.depth_dropout}, {"angle_sigma_deg", noise.angle_sigma},
                  {"translation_sigma", noise.translation_sigma}};
    j["intrinsics"] = {{"width", intrinsics.width}, {"height", intrinsics.height}, {"fx", intrinsics.fx},
                       {"fy", intrinsics.fy}, {"cx", intrinsics.cx}, {"cy", intrinsics.cy}};
    j["tsdf"] = {{"resolution", tsdf.resolution}, {"extent", tsdf.extent}, {"center", vec3_json(tsdf.center)},
                 {"trunc_multiple", tsdf.trunc_multiple}, {"w_alpha", tsdf.w_alpha}};
    const auto& tr = tracking;
    j["icp"] = {{"max_iterations", tr.icp.max_iterations},
                {"max_correspondence_distance", tr.icp.max_correspondence_distance},
                {"max_normal_angle_deg", tr.icp.max_normal_angle},
                {"convergence_threshold", tr.icp.convergence_threshold},
                {"degeneracy_condition", tr.icp.degeneracy_condition},
                {"outlier_median_factor", tr.icp.outlier_median_factor},
                {"outlier_floor", tr.icp.outlier_floor},
                {"source_stride", tr.source_stride},
                {"min_inlier_fraction", tr.min_inlier_fraction}};
    j["fusion"] = {{"w_icp", tr.w_icp}, {"w_sensor", tr.w_sensor}};
    j["filter"] = {{"enabled", tr.filter}, {"sigma_space", tr.sigma_space}, {"sigma_range", tr.sigma_range}};
    j["tracking"] = {{"max_loss_fraction", max_tracking_loss}};
    j["selection"] = {{"mode", selection.mode == SelectionMode::Table ? "table" : "human"},
                      {"plane_threshold", selection.plane_threshold},
                      {"ransac_iterations", selection.ransac_iterations},
                      {"k", selection.k},
                      {"offset_head", selection.offset_head}};
    j["printer"] = {{"x", printer.x}, {"y", printer.y}, {"z", printer.z}};
    j["evaluation"] = {{"reference", evaluation.reference}, {"area_sampling", evaluation.area_sampling},
                       {"samples", evaluation.samples}, {"color_max_cm", evaluation.color_max_cm}};
    return j.dump(2) + "\n";
}

std::string config_template(bool quick) {
    std::string s = R"({
  // synthetic:head_on_table | synthetic:bust | synthetic:sphere_and_box,
  // a mesh file to scan (.obj/.stl/.ply), or a recorded frame directory
  "input": "synthetic:head_on_table",
  "output": "headscan_out",
  "seed": 1,

  // Sensor loop: cameras evenly spaced on a horizontal circle at absolute height z,
  // all looking at center.
  "trajectory": {
    "radius": @RADIUS@,          // meters; the reference rig orbits at about 1 m
    "height": 0.35,         // meters
    "frames": 120,
    "center": [0.0, 0.0, 0.1]
  },

  // Depth and motion-sensor noise. The sensor pose error is a random-axis rotation plus
  // a per-axis translation offset.
  "noise": {
    "enabled": true,
    "depth_sigma": 0.002,        // meters
    "depth_dropout": 0.005,      // per-pixel probability
    "angle_sigma_deg": 0.01,
    "translation_sigma": 0.002   // meters
  },

  // Pinhole depth camera. cx/cy default to the image center.
  "intrinsics": {@INTRINSICS@},

  // Cubic volume; voxel size = extent / resolution, truncation = trunc_multiple voxels.
  "tsdf": {
    "resolution": @RES@,
    "extent": @EXTENT@,
    "center": [0.0, 0.0, 0.1],
    "trunc_multiple": 4,
    "w_alpha": 64            // weight cap of the running average
  },

  "icp": {
    "max_iterations": 30,
    "max_correspondence_distance": 0.10,
    "max_normal_angle_deg": 30,
    "convergence_threshold": 1e-6,
    "degeneracy_condition": 1e6,
    // pairs farther apart than this many times the median pair distance are dropped,
    // unless closer than outlier_floor (m)
    "outlier_median_factor": 3,
    "outlier_floor": 0.002,
    "source_stride": 2,
    "min_inlier_fraction": 0.2
  },

  // Registration and motion-sensor poses are blended; the weights must sum to 1.
  "fusion": { "w_icp": 0.8, "w_sensor": 0.2 },

  "filter": { "enabled": true, "sigma_space": 1.0, "sigma_range": 0.01 },

  // Abort when more than this fraction of frames falls back to the sensor pose.
  "tracking": { "max_loss_fraction": 0.2 },

  "selection": {
    "mode": "table",          // table | human
    "plane_threshold": 0.005, // meters, RANSAC inlier band and table clearance
    "ransac_iterations": 1000,
    "k": 0,                   // head-top neighbors for human mode; 0 = max(100, 0.5% of points)
    "offset_head": 0.45       // meters kept below the virtual head-top plane
  },

  // Build envelope in meters; the shorter base edge sets the scale factor.
  "printer": { "x": 0.254, "y": 0.254, "z": 0.305 },

  "evaluation": {
    "reference": "",          // ground-truth mesh; empty = the simulated scene's
    "area_sampling": false,   // false = sample every vertex
    "samples": 100000,
    "color_max_cm": 1.0       // distance mapped to blue in comparison.ply
  }
}
)";
    auto replace = [&](const std::string& key, const std::string& value) {
        s.replace(s.find(key), key.size(), value);
    };
    if (quick) {
        replace("@RADIUS@", "0.6");
        replace("@INTRINSICS@", " \"width\": 128, \"height\": 128, \"fx\": 160, \"fy\": 160 ");
        replace("@RES@", "128");
        replace("@EXTENT@", "0.8");
    } else {
        replace("@RADIUS@", "1.0");
        replace("@INTRINSICS@", " \"width\": 512, \"height\": 424, \"fx\": 365, \"fy\": 365 ");
        replace("@RES@", "192");
        replace("@EXTENT@", "1.2");
    }
    return s;
}

// ---- stages

namespace {

template <typename F>
auto in_stage(const char* stage, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const PipelineError&) {
        throw;
    } catch (const std::exception& e) {
        throw PipelineError(stage, e.what());
    }
}

scene::Scene load_scene(const PipelineConfig& cfg) {
    if (cfg.input == "synthetic:head_on_table") return scene::head_on_table();
    if (cfg.input == "synthetic:bust") return scene::human_bust();
    if (cfg.input == "synthetic:sphere_and_box") return scene::sphere_and_box();
    if (cfg.is_synthetic()) throw std::invalid_argument("unknown synthetic scene '" + cfg.input + "'");
    scene::Scene s;
    s.mesh = read_mesh(cfg.input);
    s.ground_truth = s.mesh;
    s.focus = cfg.trajectory.center;
    return s;
}

Trajectory trajectory_from(const std::vector<RigidTransform>& poses) {
    Trajectory t;
    t.poses = poses;
    return t;
}

fs::path out_file(const PipelineConfig& cfg, const char* name) { return cfg.output / name; }

void require(const fs::path& p) {
    if (!fs::exists(p)) throw std::runtime_error("missing input " + p.string() + " (run the previous stage first)");
}

}  // namespace

void stage_simulate(const PipelineConfig& cfg) {
    in_stage("simulate", [&] {
        if (cfg.is_frame_directory()) return;  // recorded scan: nothing to simulate
        fs::create_directories(cfg.frames_dir());
        const auto scene = load_scene(cfg);
        const auto truth = circular_trajectory(cfg.trajectory.center, cfg.trajectory.radius,
                                               cfg.trajectory.height, cfg.trajectory.frames);
        SensorNoiseModel noise = cfg.noise_enabled ? cfg.noise : SensorNoiseModel::none();
        noise.seed = cfg.seed;
        const auto sensor = perturb_poses(truth, noise);
        const DepthRenderer renderer(scene.mesh);
        for (std::size_t i = 0; i < truth.size(); ++i) {
            const auto frame = renderer.render(truth.poses[i], cfg.intrinsics, noise, i);
            write_depth_frame(frame, cfg.intrinsics, frame_path(cfg.frames_dir(), i));
        }
        write_poses(sensor.poses, cfg.frames_dir() / artifacts::sensor_poses);
        write_poses(truth.poses, cfg.frames_dir() / artifacts::gt_poses);
        write_obj(scene.ground_truth, out_file(cfg, artifacts::ground_truth));
    });
}

ReconstructStats stage_reconstruct(const PipelineConfig& cfg) {
    return in_stage("reconstruct", [&] {
        const auto t0 = std::chrono::steady_clock::now();
        const fs::path dir = cfg.frames_dir();
        require(dir / artifacts::sensor_poses);
        const auto sensor = read_poses(dir / artifacts::sensor_poses);
        const std::size_t n = count_frames(dir);
        if (n == 0) throw std::runtime_error("no depth frames in " + dir.string());
        if (sensor.size() != n)
            throw std::runtime_error(std::to_string(n) + " frames but " + std::to_string(sensor.size()) +
                                     " sensor poses in " + dir.string());
        std::vector<RigidTransform> truth;
        if (fs::exists(dir / artifacts::gt_poses)) truth = read_poses(dir / artifacts::gt_poses);
        if (!truth.empty() && truth.size() != n) truth.clear();
        fs::create_directories(cfg.output);

        auto volume = TsdfVolume::cube(cfg.tsdf.center, cfg.tsdf.extent, cfg.tsdf.resolution,
                                       cfg.tsdf.trunc_multiple, cfg.tsdf.w_alpha);
        TrackingOptions opts = cfg.tracking;
        opts.filter = false;  // frames are filtered once, below

        std::vector<RigidTransform> estimated;
        estimated.reserve(n);
        ReconstructStats stats;
        stats.frames = n;
        std::string log = "frame,converged,fell_back,icp_iterations,icp_rms_m,inlier_fraction";
        for (int i = 0; i < 12; ++i) log += ",est" + std::to_string(i);
        if (!truth.empty()) log += ",rot_err_deg,trans_err_m";
        log += "\n";

        for (std::size_t i = 0; i < n; ++i) {
            const auto loaded = read_depth_frame(frame_path(dir, i));
            const CameraIntrinsics& k = loaded.intrinsics;
            const DepthFrame frame = cfg.tracking.filter
                                         ? bilateral_filter(loaded.frame, cfg.tracking.sigma_space,
                                                            cfg.tracking.sigma_range)
                                         : loaded.frame;
            TrackResult tr;
            if (i == 0) {
                tr = track_frame(frame, PointCloud{}, sensor[0], sensor[0], k, opts);
            } else {
                // Motion-sensor increment applied to the previous estimate seeds registration.
                const RigidTransform init = compose(estimated.back(), compose(inverse(sensor[i - 1]), sensor[i]));
                const PointCloud prediction = raycast(volume, init, k);
                tr = track_frame(frame, prediction, sensor[i], init, k, opts);
            }
            if (tr.fell_back) ++stats.fell_back;
            if (static_cast<double>(stats.fell_back) > cfg.max_tracking_loss * static_cast<double>(n))
                throw std::runtime_error("tracking lost on " + std::to_string(stats.fell_back) + " of " +
                                         std::to_string(n) + " frames (limit " +
                                         std::to_string(cfg.max_tracking_loss * 100.0) + "%), last at frame " +
                                         std::to_string(i));
            integrate(volume, frame, tr.pose, k);
            estimated.push_back(tr.pose);

            char buf[96];
            std::snprintf(buf, sizeof buf, "%zu,%d,%d,%d,%.9g,%.6f", i, tr.converged ? 1 : 0, tr.fell_back ? 1 : 0,
                          tr.icp.iterations, tr.icp.rms_error, tr.icp.inlier_fraction);
            log += buf;
            for (double v : tr.pose.row_major()) {
                std::snprintf(buf, sizeof buf, ",%.17g", v);
                log += buf;
            }
            if (!truth.empty()) {
                std::snprintf(buf, sizeof buf, ",%.9g,%.9g",
                              RigidTransform::rotation_angle_between(tr.pose, truth[i]) * 180.0 / M_PI,
                              (tr.pose.translation() - truth[i].translation()).norm());
                log += buf;
            }
            log += "\n";
        }

        const TriangleMesh mesh = marching_cubes(volume);
        if (mesh.empty()) throw std::runtime_error("the fused volume has no surface");
        write_obj(mesh, out_file(cfg, artifacts::reconstruction));
        write_poses(estimated, out_file(cfg, artifacts::estimated_poses));
        std::ofstream(out_file(cfg, artifacts::pose_log), std::ios::binary) << log;

        stats.vertices = mesh.vertices.size();
        stats.faces = mesh.faces.size();
        stats.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        stats.frames_per_second = stats.seconds > 0 ? n / stats.seconds : 0.0;
        return stats;
    });
}

void stage_select(const PipelineConfig& cfg) {
    in_stage("select", [&] {
        require(out_file(cfg, artifacts::reconstruction));
        require(out_file(cfg, artifacts::estimated_poses));
        const TriangleMesh mesh = read_obj(out_file(cfg, artifacts::reconstruction));
        const Trajectory poses = trajectory_from(read_poses(out_file(cfg, artifacts::estimated_poses)));
        PointCloud cloud;
        cloud.points = mesh.vertices;

        Selection sel;
        if (cfg.selection.mode == SelectionMode::Table) {
            const auto fit = ransac_plane(cloud, cfg.selection.plane_threshold, cfg.selection.ransac_iterations,
                                          mix_seed(cfg.seed, 0x7ab1e));
            sel = select_head_on_table(cloud, fit.plane, cloud.subset(fit.inliers), poses,
                                       cfg.selection.plane_threshold);
        } else {
            const std::size_t k = cfg.selection.k ? cfg.selection.k : default_neighbor_count(cloud.size());
            sel = select_human_head(cloud, poses, k, cfg.selection.offset_head);
        }
        std::vector<bool> keep(mesh.vertices.size(), false);
        for (auto i : sel.indices) keep[i] = true;
        const TriangleMesh head = mesh.submesh(keep);
        if (head.empty()) throw SelectionError("selected points span no complete triangle");
        write_obj(head, out_file(cfg, artifacts::selected));
    });
}

void stage_scale(const PipelineConfig& cfg) {
    in_stage("scale", [&] {
        require(out_file(cfg, artifacts::selected));
        require(out_file(cfg, artifacts::estimated_poses));
        const TriangleMesh head = read_obj(out_file(cfg, artifacts::selected));
        const Trajectory poses = trajectory_from(read_poses(out_file(cfg, artifacts::estimated_poses)));
        const double sf = scale_factor(cfg.printer.base_length(), compute_loop_diameter(poses));
        write_obj(scale_mesh(head, sf, cfg.printer), out_file(cfg, artifacts::scaled));
    });
}

void stage_export(const PipelineConfig& cfg) {
    in_stage("export", [&] {
        require(out_file(cfg, artifacts::scaled));
        const TriangleMesh scaled = read_obj(out_file(cfg, artifacts::scaled));
        export_stl(scaled, out_file(cfg, artifacts::print_stl));
        export_ply(scaled, out_file(cfg, artifacts::print_ply));
    });
}

bool stage_evaluate(const PipelineConfig& cfg) {
    return in_stage("evaluate", [&] {
        fs::path reference = cfg.evaluation.reference;
        if (reference.empty()) reference = out_file(cfg, artifacts::ground_truth);
        if (!fs::exists(reference)) return false;
        require(out_file(cfg, artifacts::selected));
        const TriangleMesh truth = read_mesh(reference);
        const TriangleMesh head = read_obj(out_file(cfg, artifacts::selected));
        const Sampling sampling = cfg.evaluation.area_sampling
                                      ? Sampling::area_uniform(cfg.evaluation.samples, mix_seed(cfg.seed, 0xe7a1))
                                      : Sampling::vertices();
        const auto report = hausdorff_report(truth, head, sampling);
        report.save_json(out_file(cfg, artifacts::report_json));
        report.save_text(out_file(cfg, artifacts::report_txt));
        export_ply(colorize_by_distance(head, truth, 0.0, cfg.evaluation.color_max_cm / 100.0),
                   out_file(cfg, artifacts::comparison_ply));
        return true;
    });
}

void write_manifest(const PipelineConfig& cfg, const std::vector<StageTiming>& timings,
                    const ReconstructStats* stats) {
    fs::create_directories(cfg.output);
    std::ofstream out(out_file(cfg, artifacts::manifest));
    if (!out) throw std::runtime_error("cannot write manifest in " + cfg.output.string());
    out << "# headscan run manifest\n[config]\n" << cfg.to_json() << "[timings]\n";
    char buf[128];
    double total = 0.0;
    for (const auto& t : timings) {
        std::snprintf(buf, sizeof buf, "%s_seconds = %.3f\n", t.stage.c_str(), t.seconds);
        out << buf;
        total += t.seconds;
    }
    std::snprintf(buf, sizeof buf, "total_seconds = %.3f\n", total);
    out << buf;
    if (stats) {
        std::snprintf(buf, sizeof buf, "[reconstruction]\nframes = %zu\nfell_back = %zu\nframes_per_second = %.3f\n",
                      stats->frames, stats->fell_back, stats->frames_per_second);
        out << buf;
        std::snprintf(buf, sizeof buf, "vertices = %zu\nfaces = %zu\n", stats->vertices, stats->faces);
        out << buf;
    }
}

PipelineResult run_pipeline(const PipelineConfig& cfg) {
    cfg.validate();
    in_stage("simulate", [&] { fs::create_directories(cfg.output); });
    PipelineResult result;
    auto timed = [&](const char* name, auto&& f) {
        const auto t0 = std::chrono::steady_clock::now();
        f();
        result.timings.push_back({name, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()});
    };
    timed("simulate", [&] { stage_simulate(cfg); });
    timed("reconstruct", [&] { result.reconstruction = stage_reconstruct(cfg); });
    timed("select", [&] { stage_select(cfg); });
    timed("scale", [&] { stage_scale(cfg); });
    timed("export", [&] { stage_export(cfg); });
    timed("evaluate", [&] { result.evaluated = stage_evaluate(cfg); });
    write_manifest(cfg, result.timings, &result.reconstruction);
    return result;
}

}  // namespace headscan
