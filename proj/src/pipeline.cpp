#include "spicula/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "spicula/distortion.hpp"
#include "spicula/errors.hpp"
#include "spicula/mask.hpp"

namespace spicula {

using nlohmann::json;

namespace {

double round9(double v)
{
    if (!std::isfinite(v)) throw DegenerateError("non-finite value in report");
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    const double r = std::strtod(buf, nullptr);
    return r == 0.0 ? 0.0 : r; // no negative zero
}

std::string format9(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", round9(v));
    return buf;
}

std::string csv_field(const std::string& s)
{
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::vector<std::pair<std::string, std::string>> scalar_fields(const SpiculationReport& r)
{
    std::vector<std::pair<std::string, std::string>> f{
        {"vertices", std::to_string(r.mesh_stats.vertices)},
        {"edges", std::to_string(r.mesh_stats.edges)},
        {"faces", std::to_string(r.mesh_stats.faces)},
        {"area_mm2", format9(r.mesh_stats.area_mm2)},
        {"volume_mm3", format9(r.mesh_stats.volume_mm3)},
        {"median_angle_distortion", format9(r.param_quality.median_angle_distortion)},
        {"max_angle_distortion", format9(r.param_quality.max_angle_distortion)},
        {"flipped_triangles", std::to_string(r.param_quality.flipped_triangles)},
        {"eigen_residual", format9(r.param_quality.eigen_residual)},
        {"n_spikes", std::to_string(r.n_spikes)},
        {"s1", format9(r.s1)},
        {"s_a", format9(r.s_a)},
        {"s_b", format9(r.s_b)},
        {"scores_defined", r.scores_defined ? "true" : "false"},
    };
    for (const auto& [name, value] : r.features.named())
        if (name != "n_spikes" && name != "s1" && name != "s_a" && name != "s_b" && name != "volume_mm3")
            f.emplace_back(name, format9(value));
    f.emplace_back("radiologist_score", r.radiologist_score ? std::to_string(*r.radiologist_score) : "");
    f.emplace_back("wall_time_ms", format9(r.wall_time_ms));
    return f;
}

} // namespace

std::string version()
{
#ifdef SPICULA_VERSION
    return SPICULA_VERSION;
#else
    return "unknown";
#endif
}

bool is_mask_path(const std::filesystem::path& path)
{
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return ext == ".nrrd" || ext == ".nhdr";
}

TriangleMesh load_input(const std::filesystem::path& path, const PipelineOptions& options)
{
    if (is_mask_path(path)) {
        const TriangleMesh raw = marching_cubes(load_nrrd(path));
        return taubin_smooth(raw, options.smooth_iterations, options.smooth_lambda, options.smooth_mu);
    }
    LoadOptions load;
    load.format = options.format;
    load.largest_component = options.largest_component;
    return load_mesh(path, load);
}

Analysis analyze_mesh(const TriangleMesh& mesh, const std::string& input_path, const PipelineOptions& options)
{
    const auto start = std::chrono::steady_clock::now();
    require_genus_zero(mesh);

    Analysis a;
    a.mesh = mesh;
    const TriangleMesh unit = rescale_to_area(mesh);
    const SphericalMap map = sphere_map(unit, options.param);
    a.eps = normalize_distortion(area_distortion(unit, map), unit);
    a.spikes = detect_spikes(unit, a.eps, options.detect);
    const ScoreSet scores = score_all(a.spikes);

    SpiculationReport& r = a.report;
    r.input_path = input_path;
    const MeshDiagnostics diag = validate(mesh);
    r.mesh_stats.vertices = diag.vertex_count;
    r.mesh_stats.edges = diag.edge_count;
    r.mesh_stats.faces = diag.face_count;
    r.mesh_stats.area_mm2 = surface_area(mesh);
    r.mesh_stats.volume_mm3 = enclosed_volume(mesh);
    r.param_quality = map.quality;
    r.n_spikes = scores.n_spikes;
    r.s1 = scores.s1;
    r.s_a = scores.s_a;
    r.s_b = scores.s_b;
    r.scores_defined = scores.defined;
    for (const Spike& s : a.spikes)
        r.spikes.push_back({s.id, s.apex_vertex, s.apex_eps, s.height, s.width, s.mean_eps, s.solid_angle});
    r.features = make_features(shape_descriptors(mesh), eps_statistics(a.eps), scores);
    r.radiologist_score = options.radiologist_score;
    r.params = options.detect;
    r.tool_version = version();
    if (options.record_timing)
        r.wall_time_ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    return a;
}

Analysis analyze_file(const std::filesystem::path& path, const PipelineOptions& options)
{
    const auto start = std::chrono::steady_clock::now();
    const TriangleMesh mesh = load_input(path, options);
    Analysis a = analyze_mesh(mesh, path.string(), options);
    if (options.record_timing)
        a.report.wall_time_ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    return a;
}

VertexChannels export_channels(const Analysis& analysis)
{
    VertexChannels ch;
    ch.quality.reserve(analysis.eps.size());
    for (double e : analysis.eps.values) ch.quality.push_back(static_cast<float>(e));
    ch.spike_id.assign(analysis.mesh.vertices.size(), -1);
    for (const Spike& s : analysis.spikes)
        for (int v : s.member_vertices) ch.spike_id[v] = s.id;
    return ch;
}

std::string to_json(const SpiculationReport& r, int indent)
{
    json j;
    j["input_path"] = r.input_path;
    j["tool_version"] = r.tool_version;
    j["mesh_stats"] = {{"vertices", r.mesh_stats.vertices},
                       {"edges", r.mesh_stats.edges},
                       {"faces", r.mesh_stats.faces},
                       {"area_mm2", round9(r.mesh_stats.area_mm2)},
                       {"volume_mm3", round9(r.mesh_stats.volume_mm3)}};
    j["param_quality"] = {{"median_angle_distortion", round9(r.param_quality.median_angle_distortion)},
                          {"max_angle_distortion", round9(r.param_quality.max_angle_distortion)},
                          {"flipped_triangles", r.param_quality.flipped_triangles},
                          {"eigen_residual", round9(r.param_quality.eigen_residual)}};
    j["n_spikes"] = r.n_spikes;
    j["s1"] = round9(r.s1);
    j["s_a"] = round9(r.s_a);
    j["s_b"] = round9(r.s_b);
    j["scores_defined"] = r.scores_defined;
    j["spikes"] = json::array();
    for (const SpikeSummary& s : r.spikes)
        j["spikes"].push_back({{"id", s.id},
                               {"apex_vertex", s.apex_vertex},
                               {"apex_eps", round9(s.apex_eps)},
                               {"height_mm", round9(s.height_mm)},
                               {"width_mm", round9(s.width_mm)},
                               {"mean_eps", round9(s.mean_eps)},
                               {"solid_angle_sr", round9(s.solid_angle_sr)}});
    json features = json::object();
    for (const auto& [name, value] : r.features.named()) {
        if (name == "n_spikes") features[name] = r.features.n_spikes;
        else features[name] = round9(value);
    }
    j["features"] = features;
    j["radiologist_score"] = r.radiologist_score ? json(*r.radiologist_score) : json(nullptr);
    j["params"] = {{"levels_per_spike", r.params.levels_per_spike},
                   {"min_height", round9(r.params.min_height)},
                   {"min_depth", round9(r.params.min_depth)},
                   {"min_member_vertices", r.params.min_member_vertices}};
    j["wall_time_ms"] = round9(r.wall_time_ms);
    return j.dump(indent);
}

SpiculationReport report_from_json(const std::string& text)
{
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("report JSON: ") + e.what());
    }
    try {
        SpiculationReport r;
        r.input_path = j.at("input_path").get<std::string>();
        r.tool_version = j.at("tool_version").get<std::string>();
        const json& ms = j.at("mesh_stats");
        r.mesh_stats = {ms.at("vertices").get<std::int64_t>(), ms.at("edges").get<std::int64_t>(),
                        ms.at("faces").get<std::int64_t>(), ms.at("area_mm2").get<double>(),
                        ms.at("volume_mm3").get<double>()};
        const json& pq = j.at("param_quality");
        r.param_quality.median_angle_distortion = pq.at("median_angle_distortion").get<double>();
        r.param_quality.max_angle_distortion = pq.at("max_angle_distortion").get<double>();
        r.param_quality.flipped_triangles = pq.at("flipped_triangles").get<std::int64_t>();
        r.param_quality.eigen_residual = pq.at("eigen_residual").get<double>();
        r.n_spikes = j.at("n_spikes").get<int>();
        r.s1 = j.at("s1").get<double>();
        r.s_a = j.at("s_a").get<double>();
        r.s_b = j.at("s_b").get<double>();
        r.scores_defined = j.at("scores_defined").get<bool>();
        for (const json& s : j.at("spikes"))
            r.spikes.push_back({s.at("id").get<int>(), s.at("apex_vertex").get<int>(), s.at("apex_eps").get<double>(),
                                s.at("height_mm").get<double>(), s.at("width_mm").get<double>(),
                                s.at("mean_eps").get<double>(), s.at("solid_angle_sr").get<double>()});
        const json& f = j.at("features");
        FeatureVector& fv = r.features;
        fv.size_mm = f.at("size_mm").get<double>();
        fv.volume_mm3 = f.at("volume_mm3").get<double>();
        fv.equiv_diameter_mm = f.at("equiv_diameter_mm").get<double>();
        fv.roundness_mesh = f.at("roundness_mesh").get<double>();
        fv.eps_min = f.at("eps_min").get<double>();
        fv.eps_max = f.at("eps_max").get<double>();
        fv.eps_mean = f.at("eps_mean").get<double>();
        fv.eps_median = f.at("eps_median").get<double>();
        fv.eps_variance = f.at("eps_variance").get<double>();
        fv.eps_skewness = f.at("eps_skewness").get<double>();
        fv.eps_kurtosis = f.at("eps_kurtosis").get<double>();
        fv.n_spikes = f.at("n_spikes").get<int>();
        fv.s1 = f.at("s1").get<double>();
        fv.s_a = f.at("s_a").get<double>();
        fv.s_b = f.at("s_b").get<double>();
        if (!j.at("radiologist_score").is_null()) r.radiologist_score = j.at("radiologist_score").get<int>();
        const json& p = j.at("params");
        r.params.levels_per_spike = p.at("levels_per_spike").get<int>();
        r.params.min_height = p.at("min_height").get<double>();
        r.params.min_depth = p.at("min_depth").get<double>();
        r.params.min_member_vertices = p.at("min_member_vertices").get<int>();
        r.wall_time_ms = j.at("wall_time_ms").get<double>();
        return r;
    } catch (const json::exception& e) {
        throw ParseError(std::string("report JSON: ") + e.what());
    }
}

std::string error_json(const std::string& kind, const std::string& input, const std::string& message)
{
    return json{{"error", kind}, {"input", input}, {"message", message}}.dump();
}

int exit_code_for(const std::exception& error)
{
    if (dynamic_cast<const ConvergenceError*>(&error) || dynamic_cast<const SplitError*>(&error) ||
        dynamic_cast<const ParamError*>(&error))
        return 3;
    if (dynamic_cast<const ParseError*>(&error) || dynamic_cast<const TopologyError*>(&error) ||
        dynamic_cast<const DegenerateError*>(&error) || dynamic_cast<const EmptyMaskError*>(&error) ||
        dynamic_cast<const OverlapError*>(&error))
        return 2;
    return 1;
}

std::vector<BatchEntry> run_batch(const std::vector<std::filesystem::path>& inputs, const PipelineOptions& options,
                                  int jobs)
{
    std::vector<BatchEntry> entries(inputs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < inputs.size(); i = next++) {
            BatchEntry& e = entries[i];
            e.input_path = inputs[i].string();
            try {
                e.report = analyze_file(inputs[i], options).report;
            } catch (const Error& err) {
                e.error_kind = err.kind();
                e.error_message = err.what();
            } catch (const std::exception& err) {
                e.error_kind = "Error";
                e.error_message = err.what();
            }
        }
    };
    const std::size_t workers = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(jobs, 1)), 1, std::max<std::size_t>(inputs.size(), 1));
    std::vector<std::jthread> pool;
    for (std::size_t k = 1; k < workers; ++k) pool.emplace_back(worker);
    worker();
    pool.clear();
    return entries;
}

std::string summary_csv(const std::vector<BatchEntry>& entries)
{
    std::ostringstream out;
    const std::vector<std::pair<std::string, std::string>> header = scalar_fields(SpiculationReport{});
    out << "input_path,status,error";
    for (const auto& [name, unused] : header) out << ',' << name;
    out << '\n';
    for (const BatchEntry& e : entries) {
        out << csv_field(e.input_path) << ',' << (e.report ? "ok" : "failed") << ','
            << csv_field(e.report ? "" : e.error_kind + ": " + e.error_message);
        if (e.report)
            for (const auto& [unused, value] : scalar_fields(*e.report)) out << ',' << value;
        else
            for (std::size_t k = 0; k < header.size(); ++k) out << ',';
        out << '\n';
    }
    return out.str();
}

} // namespace spicula
