#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "headscan/export_scale.h"
#include "headscan/geometry.h"
#include "headscan/registration.h"
#include "headscan/scanner.h"

namespace headscan {

enum class SelectionMode { Table, Human };

struct PipelineConfig {
    // "synthetic:head_on_table", "synthetic:bust", "synthetic:sphere_and_box", a mesh file
    // (.obj/.stl/.ply) to scan, or a recorded frame directory.
    std::string input = "synthetic:head_on_table";
    std::filesystem::path output = "headscan_out";
    std::uint64_t seed = 1;

    struct {
        double radius = 1.0;
        double height = 0.35;  // absolute z of the sensor loop
        int frames = 120;
        Vec3 center{0.0, 0.0, 0.1};
    } trajectory;

    bool noise_enabled = true;
    SensorNoiseModel noise;  // seed is taken from `seed`

    CameraIntrinsics intrinsics{365.0, 365.0, 255.5, 211.5, 512, 424};

    struct {
        int resolution = 192;
        double extent = 1.2;   // edge length of the cubic volume, meters
        Vec3 center{0.0, 0.0, 0.1};
        double trunc_multiple = 4.0;
        double w_alpha = 64.0;
    } tsdf;

    TrackingOptions tracking;  // ICP, fusion weights and bilateral filter
    double max_tracking_loss = 0.2;  // fraction of frames allowed to fall back

    struct {
        SelectionMode mode = SelectionMode::Table;
        double plane_threshold = 0.005;
        int ransac_iterations = 1000;
        std::size_t k = 0;  // 0 = max(100, 0.5% of the cloud)
        double offset_head = 0.45;
    } selection;

    PrinterVolume printer;

    struct {
        std::string reference;  // ground-truth mesh; empty = the simulated scene's
        bool area_sampling = false;
        std::size_t samples = 100000;
        double color_max_cm = 1.0;
    } evaluation;

    static PipelineConfig from_json_text(const std::string& text);
    static PipelineConfig load(const std::filesystem::path& path);
    std::string to_json() const;
    void validate() const;

    bool is_synthetic() const;
    bool is_frame_directory() const;
    std::filesystem::path frames_dir() const;
};

// Commented configuration template; `quick` selects 128x128 frames, a 0.6 m loop and a
// 128^3 volume instead of the full-size defaults.
std::string config_template(bool quick);

// A stage failure; the exit code identifies the stage.
class PipelineError : public std::runtime_error {
public:
    PipelineError(std::string stage, const std::string& message);
    const std::string& stage() const { return stage_; }
    int exit_code() const;
    static int exit_code_for(const std::string& stage);

private:
    std::string stage_;
};

struct StageTiming {
    std::string stage;
    double seconds = 0.0;
};

struct ReconstructStats {
    std::size_t frames = 0;
    std::size_t fell_back = 0;
    double seconds = 0.0;
    double frames_per_second = 0.0;
    std::size_t vertices = 0;
    std::size_t faces = 0;
};

// Fixed file names inside the output directory.
namespace artifacts {
inline constexpr const char* frames_dir = "frames";
inline constexpr const char* sensor_poses = "sensor_poses.txt";
inline constexpr const char* gt_poses = "gt_poses.txt";
inline constexpr const char* ground_truth = "ground_truth.obj";
inline constexpr const char* reconstruction = "reconstruction.obj";
inline constexpr const char* estimated_poses = "estimated_poses.txt";
inline constexpr const char* pose_log = "pose_log.csv";
inline constexpr const char* selected = "selected.obj";
inline constexpr const char* scaled = "scaled.obj";
inline constexpr const char* print_stl = "head_print.stl";
inline constexpr const char* print_ply = "head_print.ply";
inline constexpr const char* comparison_ply = "comparison.ply";
inline constexpr const char* report_json = "report.json";
inline constexpr const char* report_txt = "report.txt";
inline constexpr const char* manifest = "manifest.txt";
}  // namespace artifacts

// Each stage reads the previous stage's files from cfg.output and writes its own.
void stage_simulate(const PipelineConfig& cfg);
ReconstructStats stage_reconstruct(const PipelineConfig& cfg);
void stage_select(const PipelineConfig& cfg);
void stage_scale(const PipelineConfig& cfg);
void stage_export(const PipelineConfig& cfg);
// Returns false when there is no reference mesh to compare against.
bool stage_evaluate(const PipelineConfig& cfg);

struct PipelineResult {
    ReconstructStats reconstruction;
    std::vector<StageTiming> timings;
    bool evaluated = false;
};

PipelineResult run_pipeline(const PipelineConfig& cfg);

void write_manifest(const PipelineConfig& cfg, const std::vector<StageTiming>& timings,
                    const ReconstructStats* stats);

}  // namespace headscan
