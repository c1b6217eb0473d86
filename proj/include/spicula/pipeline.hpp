#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "spicula/features.hpp"
#include "spicula/mesh_io.hpp"
#include "spicula/scores.hpp"
#include "spicula/spherical_param.hpp"
#include "spicula/spikes.hpp"

namespace spicula {

std::string version();

struct PipelineOptions {
    DetectParams detect;
    ParamOptions param;
    // Applied to meshes extracted from voxel masks only.
    int smooth_iterations = 100;
    double smooth_lambda = 0.5;
    double smooth_mu = -0.53;
    std::optional<MeshFormat> format;
    bool largest_component = false;
    std::optional<int> radiologist_score; // 1..5, echoed verbatim
    bool record_timing = true;            // false writes wall_time_ms = 0
};

struct MeshStats {
    std::int64_t vertices = 0;
    std::int64_t edges = 0;
    std::int64_t faces = 0;
    double area_mm2 = 0.0;
    double volume_mm3 = 0.0;
};

struct SpikeSummary {
    int id = 0;
    int apex_vertex = 0;
    double apex_eps = 0.0;
    double height_mm = 0.0;
    double width_mm = 0.0;
    double mean_eps = 0.0;
    double solid_angle_sr = 0.0;
};

struct SpiculationReport {
    std::string input_path;
    MeshStats mesh_stats;
    ParamQuality param_quality;
    int n_spikes = 0;
    double s1 = 0.0;
    double s_a = 0.0;
    double s_b = 0.0;
    bool scores_defined = false;
    std::vector<SpikeSummary> spikes;
    FeatureVector features;
    std::optional<int> radiologist_score;
    DetectParams params;
    std::string tool_version;
    double wall_time_ms = 0.0;
};

struct Analysis {
    SpiculationReport report;
    TriangleMesh mesh; // input millimeters
    ScalarField eps;   // normalized
    std::vector<Spike> spikes;
};

bool is_mask_path(const std::filesystem::path& path);

// Meshes load through load_mesh; .nrrd/.nhdr masks go through
// marching_cubes and taubin_smooth.
TriangleMesh load_input(const std::filesystem::path& path, const PipelineOptions& options);

// Rescale, parameterize, measure distortion, detect, score, describe.
Analysis analyze_mesh(const TriangleMesh& mesh, const std::string& input_path, const PipelineOptions& options);
Analysis analyze_file(const std::filesystem::path& path, const PipelineOptions& options);

// Per-vertex channels for PLY export: eps as quality and spike ids (-1 off spikes).
VertexChannels export_channels(const Analysis& analysis);

// Canonical JSON: sorted keys, numbers rounded to 9 significant digits, no
// trailing newline.
std::string to_json(const SpiculationReport& report, int indent = 2);
SpiculationReport report_from_json(const std::string& text);

// One-line error record {"error": kind, "input": path, "message": text}.
std::string error_json(const std::string& kind, const std::string& input, const std::string& message);

// 2 for input, topology and degenerate-geometry errors, 3 for
// parameterization failures, 1 otherwise.
int exit_code_for(const std::exception& error);

struct BatchEntry {
    std::string input_path;
    std::optional<SpiculationReport> report;
    std::string error_kind;
    std::string error_message;
};

// Runs analyze_file over inputs with up to `jobs` workers. Results come back
// in input order whatever the completion order.
std::vector<BatchEntry> run_batch(const std::vector<std::filesystem::path>& inputs, const PipelineOptions& options,
                                  int jobs);

// Header plus one row per entry with every scalar report field.
std::string summary_csv(const std::vector<BatchEntry>& entries);

} // namespace spicula
