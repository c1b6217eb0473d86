#include <doctest.h>

#include <numbers>

#include "spicula/pipeline.hpp"
#include "spicula/scores.hpp"
#include "support.hpp"

using namespace spicula;

namespace {

struct Run {
    testing::Pipeline pipeline;
    std::vector<Spike> spikes;
    ScoreSet scores;
};

Run run(const TriangleMesh& mesh)
{
    Run r;
    r.pipeline = testing::run_pipeline(mesh);
    r.spikes = detect_spikes(r.pipeline.unit, r.pipeline.eps);
    r.scores = score_all(r.spikes);
    return r;
}

double max_eps_change(const Run& a, const Run& b)
{
    double worst = 0.0;
    for (std::size_t i = 0; i < a.pipeline.eps.size(); ++i)
        worst = std::max(worst, std::abs(a.pipeline.eps[i] - b.pipeline.eps[i]));
    return worst;
}

} // namespace

TEST_CASE("rigid motions leave eps, spike count and s1 unchanged")
{
    const std::vector<std::pair<std::string, TriangleMesh>> fixtures{
        {"sphere", make_icosphere(8.0, 5)},
        {"ellipsoid 2:1:1", make_ellipsoid(2, 1, 1, 5)},
        {"nodule 5 mm", testing::nodule(5.0)}};
    std::mt19937_64 rng(424242);
    std::uniform_real_distribution<double> shift(-20.0, 20.0);
    for (const auto& [name, mesh] : fixtures) {
        CAPTURE(name);
        const Run base = run(mesh);
        for (int k = 0; k < 2; ++k) {
            const Vec3 t(shift(rng), shift(rng), shift(rng));
            const Run moved = run(testing::transformed(mesh, testing::random_rotation(rng), t));
            CHECK(max_eps_change(base, moved) < 1e-6);
            CHECK(moved.spikes.size() == base.spikes.size());
            if (base.scores.defined) CHECK(std::abs(moved.scores.s1 / base.scores.s1 - 1.0) < 1e-3);
            for (std::size_t i = 0; i < std::min(base.spikes.size(), moved.spikes.size()); ++i)
                CHECK(std::abs(moved.spikes[i].width - base.spikes[i].width) < 1e-6);
        }
    }
}

TEST_CASE("uniform scaling leaves eps unchanged and scales lengths")
{
    const TriangleMesh mesh = testing::nodule(5.0);
    const Run base = run(mesh);
    REQUIRE(base.spikes.size() == 4);
    for (double s : {0.5, 2.0}) {
        CAPTURE(s);
        const Run scaled = run(testing::scaled(mesh, s));
        CHECK(max_eps_change(base, scaled) < 1e-6);
        REQUIRE(scaled.spikes.size() == base.spikes.size());
        for (std::size_t i = 0; i < base.spikes.size(); ++i) {
            CHECK(std::abs(scaled.spikes[i].height / (s * base.spikes[i].height) - 1.0) < 1e-3);
            CHECK(std::abs(scaled.spikes[i].width / (s * base.spikes[i].width) - 1.0) < 1e-3);
        }
        CHECK(std::abs(scaled.scores.s1 / base.scores.s1 - 1.0) < 1e-3);
        CHECK(std::abs(scaled.scores.s_b - base.scores.s_b) < 1e-3);
    }
}

TEST_CASE("spherical map invariants hold on every fixture")
{
    const std::vector<TriangleMesh> fixtures{make_icosphere(8.0, 4), make_ellipsoid(3, 1.5, 1, 4), testing::nodule(3.0),
                                             testing::nodule(4.0, 16)};
    for (const TriangleMesh& m : fixtures) {
        const testing::Pipeline p = testing::run_pipeline(m);
        CHECK(p.map.positions.size() == m.vertices.size());
        for (const Vec3& x : p.map.positions) CHECK(std::abs(x.norm() - 1.0) < 1e-9);
        CHECK(p.map.quality.median_angle_distortion <= p.map.quality.max_angle_distortion);
        CHECK(p.map.quality.flipped_triangles <= static_cast<std::int64_t>(m.faces.size()));
        CHECK(p.map.quality.eigen_residual < 1e-8);
        for (double v : p.eps.values) CHECK(std::isfinite(v));

        const std::vector<Spike> spikes = detect_spikes(p.unit, p.eps);
        for (const Spike& s : spikes) {
            for (int v : s.member_vertices) CHECK(p.eps[static_cast<std::size_t>(v)] >= s.apex_eps);
            CHECK(s.height > 0.0);
            CHECK(s.width > 0.0);
            CHECK(s.solid_angle >= 0.0);
            CHECK(s.solid_angle < 4 * std::numbers::pi);
        }
        const ScoreSet sc = score_all(spikes);
        CHECK(sc.s_b >= -1.0);
        CHECK(sc.s_b <= 1.0);
        CHECK(sc.s_a >= 0.0);
    }
}

TEST_CASE("report fields are finite on every fixture")
{
    PipelineOptions o;
    o.record_timing = false;
    for (const TriangleMesh& m : {make_ellipsoid(4, 1, 1, 4), testing::nodule(2.0)}) {
        const SpiculationReport r = analyze_mesh(m, "fixture", o).report;
        CHECK(r.n_spikes == static_cast<int>(r.spikes.size()));
        for (const auto& [name, value] : r.features.named()) {
            CAPTURE(name);
            CHECK(std::isfinite(value));
        }
        CHECK(r.features.eps_min <= r.features.eps_median);
        CHECK(r.features.eps_median <= r.features.eps_max);
        CHECK(r.features.volume_mm3 > 0.0);
        CHECK(r.features.roundness_mesh > 0.0);
        CHECK(r.features.roundness_mesh <= 1.0);
    }
}
