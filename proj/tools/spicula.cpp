#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>

#include <CLI11.hpp>
#include <json.hpp>

#include "spicula/errors.hpp"
#include "spicula/mesh_io.hpp"
#include "spicula/pipeline.hpp"
#include "spicula/synthetic.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct AnalysisFlags {
    spicula::PipelineOptions options;
    std::string format;
    int radiologist_score = 0;
    bool no_timing = false;

    void attach(CLI::App* app)
    {
        app->add_option("--format", format, "Input mesh format (off, obj, ply); default from extension");
        app->add_option("--levels", options.detect.levels_per_spike, "Level loops sampled per spike")
            ->check(CLI::PositiveNumber);
        app->add_option("--min-height", options.detect.min_height, "Minimum spike height in mm")
            ->check(CLI::PositiveNumber);
        app->add_option("--min-depth", options.detect.min_depth, "Minimum |apex eps| of a spike")
            ->check(CLI::PositiveNumber);
        app->add_option("--min-members", options.detect.min_member_vertices, "Minimum vertices per spike")
            ->check(CLI::PositiveNumber);
        app->add_option("--smooth-iters", options.smooth_iterations, "Taubin iterations for mask input")
            ->check(CLI::NonNegativeNumber);
        app->add_option("--smooth-lambda", options.smooth_lambda, "Taubin shrink factor");
        app->add_option("--smooth-mu", options.smooth_mu, "Taubin inflate factor");
        app->add_option("--eig-tol", options.param.eigen.tolerance, "Eigen-solver residual tolerance")
            ->check(CLI::PositiveNumber);
        app->add_option("--flip-cap", options.param.flip_cap, "Flipped triangles tolerated after repair")
            ->check(CLI::NonNegativeNumber);
        app->add_option("--radiologist-score", radiologist_score, "Radiologist spiculation score echoed in the report")
            ->check(CLI::Range(1, 5));
        app->add_flag("--largest-component", options.largest_component,
                      "Keep only the largest connected component of the input mesh");
        app->add_flag("--no-timing", no_timing, "Write wall_time_ms as 0 for byte-reproducible reports");
    }

    spicula::PipelineOptions resolve() const
    {
        spicula::PipelineOptions o = options;
        if (!format.empty()) o.format = spicula::parse_mesh_format(format);
        if (radiologist_score > 0) o.radiologist_score = radiologist_score;
        o.record_timing = !no_timing;
        if (!(o.smooth_lambda > 0.0 && o.smooth_lambda < -o.smooth_mu && -o.smooth_mu < 1.0))
            throw CLI::ValidationError("--smooth-lambda/--smooth-mu", "need 0 < lambda < -mu < 1");
        return o;
    }
};

void write_text(const fs::path& path, const std::string& text)
{
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw spicula::ParseError("cannot write " + path.string());
    out << text;
}

spicula::MeshFormat output_format(const fs::path& path, const std::string& flag)
{
    if (!flag.empty()) return spicula::parse_mesh_format(flag);
    if (auto f = spicula::format_from_extension(path)) return *f;
    throw spicula::ParseError("cannot infer mesh format of " + path.string());
}

bool is_input_file(const fs::path& p)
{
    return spicula::format_from_extension(p).has_value() || spicula::is_mask_path(p);
}

std::vector<fs::path> expand_inputs(const std::vector<std::string>& args)
{
    std::vector<fs::path> out;
    for (const std::string& a : args) {
        const fs::path p(a);
        if (fs::is_directory(p)) {
            std::vector<fs::path> found;
            for (const auto& entry : fs::directory_iterator(p))
                if (entry.is_regular_file() && is_input_file(entry.path())) found.push_back(entry.path());
            std::sort(found.begin(), found.end());
            out.insert(out.end(), found.begin(), found.end());
        } else {
            out.push_back(p);
        }
    }
    return out;
}

json truth_json(const spicula::GroundTruth& truth)
{
    json spikes = json::array();
    for (const auto& s : truth.spikes)
        spikes.push_back({{"direction", {s.direction.x(), s.direction.y(), s.direction.z()}},
                          {"height_mm", s.height},
                          {"base_radius_mm", s.base_radius},
                          {"profile", s.profile == spicula::SpikeProfile::Cone ? "cone" : "gaussian"}});
    return {{"sphere_radius_mm", truth.base_radius_mm}, {"seed", truth.seed}, {"spikes", spikes}};
}

int report_error(const std::exception& e, const std::string& input)
{
    const auto* err = dynamic_cast<const spicula::Error*>(&e);
    std::cerr << spicula::error_json(err ? err->kind() : "Error", input, e.what()) << '\n';
    return spicula::exit_code_for(e);
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Spiculation quantification for closed nodule surface meshes"};
    app.set_version_flag("--version", spicula::version());
    app.require_subcommand(1);

    // analyze
    CLI::App* analyze = app.add_subcommand("analyze", "Analyze one mesh or NRRD mask and write a JSON report");
    std::string analyze_input, analyze_out, analyze_ply;
    AnalysisFlags analyze_flags;
    analyze->add_option("input", analyze_input, "Mesh (.off/.obj/.ply) or mask (.nrrd/.nhdr)")->required();
    analyze->add_option("--out", analyze_out, "Report path (default: stdout)");
    analyze->add_option("--ply", analyze_ply, "Write the mesh with eps and spike_id vertex channels");
    analyze_flags.attach(analyze);

    // batch
    CLI::App* batch = app.add_subcommand("batch", "Analyze many inputs concurrently");
    std::vector<std::string> batch_inputs;
    std::string batch_out;
    int jobs = 1;
    AnalysisFlags batch_flags;
    batch->add_option("inputs", batch_inputs, "Input files or directories")->required();
    batch->add_option("--out", batch_out, "Directory for reports and summary.csv")->required();
    batch->add_option("--jobs", jobs, "Concurrent workers")->check(CLI::PositiveNumber);
    batch_flags.attach(batch);

    // synth
    CLI::App* synth = app.add_subcommand("synth", "Generate a synthetic spiculated nodule");
    std::string synth_out, synth_format, profile = "cone";
    spicula::NoduleRecipe recipe;
    synth->add_option("--out", synth_out, "Mesh path; ground truth goes to <stem>.truth.json")->required();
    synth->add_option("--format", synth_format, "Output format (off, obj, ply); default from extension");
    synth->add_option("--count", recipe.spike_count, "Number of spikes")->check(CLI::NonNegativeNumber);
    synth->add_option("--height", recipe.spike_height, "Spike height in mm")->check(CLI::PositiveNumber);
    synth->add_option("--base-radius", recipe.spike_base_radius, "Spike footprint radius in mm")
        ->check(CLI::PositiveNumber);
    synth->add_option("--sphere-radius", recipe.sphere_radius, "Base sphere radius in mm")->check(CLI::PositiveNumber);
    synth->add_option("--subdivisions", recipe.subdivisions, "Icosphere subdivisions")->check(CLI::Range(0, 7));
    synth->add_option("--profile", profile, "Spike profile")->check(CLI::IsMember({"cone", "gaussian"}));
    synth->add_option("--seed", recipe.seed, "Seed for direction jitter");
    synth->add_option("--jitter", recipe.jitter_rad, "Direction jitter in radians")->check(CLI::NonNegativeNumber);

    // validate
    CLI::App* validate = app.add_subcommand("validate", "Print mesh diagnostics");
    std::string validate_input, validate_format;
    bool validate_largest = false;
    validate->add_option("input", validate_input, "Mesh or mask")->required();
    validate->add_option("--format", validate_format, "Input mesh format");
    validate->add_flag("--largest-component", validate_largest, "Keep only the largest component");

    CLI11_PARSE(app, argc, argv);

    if (*analyze) {
        try {
            const spicula::PipelineOptions options = analyze_flags.resolve();
            const spicula::Analysis a = spicula::analyze_file(analyze_input, options);
            const std::string text = spicula::to_json(a.report) + "\n";
            if (analyze_out.empty()) std::cout << text;
            else write_text(analyze_out, text);
            if (!analyze_ply.empty())
                spicula::save_mesh(analyze_ply, a.mesh, spicula::MeshFormat::PLY, spicula::export_channels(a));
            return 0;
        } catch (const CLI::Error& e) {
            return app.exit(e);
        } catch (const std::exception& e) {
            return report_error(e, analyze_input);
        }
    }

    if (*batch) {
        spicula::PipelineOptions options;
        try {
            options = batch_flags.resolve();
        } catch (const CLI::Error& e) {
            return app.exit(e);
        } catch (const std::exception& e) {
            return report_error(e, "");
        }
        const std::vector<fs::path> inputs = expand_inputs(batch_inputs);
        if (inputs.empty()) {
            std::cerr << spicula::error_json("ParseError", "", "no inputs found") << '\n';
            return 1;
        }
        const std::vector<spicula::BatchEntry> entries = spicula::run_batch(inputs, options, jobs);

        std::map<std::string, int> used;
        int failures = 0;
        try {
            fs::create_directories(batch_out);
            for (const auto& e : entries) {
                if (!e.report) {
                    ++failures;
                    std::cerr << spicula::error_json(e.error_kind, e.input_path, e.error_message) << '\n';
                    continue;
                }
                std::string stem = fs::path(e.input_path).stem().string();
                const int seen = used[stem]++;
                if (seen > 0) stem += "-" + std::to_string(seen);
                write_text(fs::path(batch_out) / (stem + ".json"), spicula::to_json(*e.report) + "\n");
            }
            write_text(fs::path(batch_out) / "summary.csv", spicula::summary_csv(entries));
        } catch (const std::exception& e) {
            return report_error(e, batch_out);
        }
        std::cerr << json{{"inputs", entries.size()}, {"failed", failures}}.dump() << '\n';
        return failures == static_cast<int>(entries.size()) ? 1 : 0;
    }

    if (*synth) {
        try {
            recipe.profile = profile == "gaussian" ? spicula::SpikeProfile::Gaussian : spicula::SpikeProfile::Cone;
            const spicula::SyntheticNodule nodule = spicula::make_nodule(recipe);
            const fs::path out(synth_out);
            spicula::save_mesh(out, nodule.mesh, output_format(out, synth_format));
            fs::path truth = out;
            truth.replace_extension(".truth.json");
            write_text(truth, truth_json(nodule.truth).dump(2) + "\n");
            return 0;
        } catch (const std::exception& e) {
            return report_error(e, synth_out);
        }
    }

    if (*validate) {
        try {
            spicula::TriangleMesh mesh;
            if (spicula::is_mask_path(validate_input)) {
                spicula::PipelineOptions o;
                mesh = spicula::load_input(validate_input, o);
            } else {
                spicula::LoadOptions load;
                load.validate = false;
                if (!validate_format.empty()) load.format = spicula::parse_mesh_format(validate_format);
                load.largest_component = validate_largest;
                mesh = spicula::load_mesh(validate_input, load);
            }
            const spicula::MeshDiagnostics d = spicula::validate(mesh);
            bool ok = true;
            std::string problem;
            try {
                spicula::require_genus_zero(mesh);
            } catch (const spicula::Error& e) {
                ok = false;
                problem = e.what();
            }
            json out{{"input", validate_input},
                     {"vertex_count", d.vertex_count},
                     {"edge_count", d.edge_count},
                     {"face_count", d.face_count},
                     {"euler_characteristic", d.euler_characteristic},
                     {"is_closed", d.is_closed},
                     {"is_oriented", d.is_oriented},
                     {"min_face_area", d.min_face_area},
                     {"connected_components", d.connected_components},
                     {"genus_zero", ok}};
            if (!ok) out["problem"] = problem;
            std::cout << out.dump(2) << '\n';
            return ok ? 0 : 2;
        } catch (const std::exception& e) {
            return report_error(e, validate_input);
        }
    }
    return 0;
}
