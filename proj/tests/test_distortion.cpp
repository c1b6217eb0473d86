#include <doctest.h>

#include <algorithm>

#include "spicula/errors.hpp"
#include "support.hpp"

using namespace spicula;

namespace {

SphericalMap radial_map(const TriangleMesh& mesh)
{
    SphericalMap m;
    const Vec3 c = vertex_centroid(mesh);
    for (const Vec3& v : mesh.vertices) m.positions.push_back((v - c).normalized());
    return m;
}

double weighted_mean(const ScalarField& f, const Eigen::VectorXd& mass)
{
    double s = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) s += mass[static_cast<Eigen::Index>(i)] * f[i];
    return s / mass.sum();
}

} // namespace

TEST_CASE("area distortion matches the one-ring definition")
{
    const TriangleMesh unit = rescale_to_area(testing::nodule(5.0, 4));
    const SphericalMap map = sphere_map(unit);
    const ScalarField eps = area_distortion(unit, map);
    CHECK_FALSE(eps.normalized);
    const std::vector<double> oracle = testing::oracle_eps(unit, map.positions);
    REQUIRE(eps.size() == oracle.size());
    double worst = 0.0;
    for (std::size_t i = 0; i < oracle.size(); ++i) worst = std::max(worst, std::abs(eps[i] - oracle[i]));
    CHECK(worst < 1e-12);
    for (double v : eps.values) CHECK(std::isfinite(v));
}

TEST_CASE("icosahedron distortion is uniform")
{
    const TriangleMesh ico = make_icosphere(1.0, 0);
    const ScalarField eps = area_distortion(ico, radial_map(ico));
    for (double v : eps.values) CHECK(std::abs(v - eps[0]) < 1e-6);
    const ScalarField n = normalize_distortion(eps, ico);
    for (double v : n.values) CHECK(std::abs(v) < 1e-6);
}

TEST_CASE("unit icosphere has small distortion")
{
    const testing::Pipeline p = testing::run_pipeline(make_icosphere(1.0, 5));
    for (double v : p.eps.values) {
        CHECK(std::abs(v) < 0.05);
        CHECK(v > -0.1);
    }
    CHECK(p.eps.normalized);
}

TEST_CASE("prolate ellipsoid minimum sits in an end cap")
{
    const TriangleMesh e = make_ellipsoid(4, 1, 1, 5);
    const testing::Pipeline p = testing::run_pipeline(e);
    const auto it = std::min_element(p.eps.values.begin(), p.eps.values.end());
    const auto v = static_cast<std::size_t>(it - p.eps.values.begin());
    CHECK(std::abs(e.vertices[v].x()) > 3.0);
    CHECK(*it < 0.0);
}

TEST_CASE("normalization")
{
    const TriangleMesh s = testing::nodule(2.0);
    const Laplacian lap = cotangent_laplacian(s);

    ScalarField c;
    c.values.assign(s.vertices.size(), 2.75);
    for (double v : normalize_distortion(c, s).values) CHECK(std::abs(v) < 1e-12);

    const testing::Pipeline p = testing::run_pipeline(s);
    const Laplacian unit_lap = cotangent_laplacian(p.unit);
    CHECK(std::abs(weighted_mean(p.eps, unit_lap.mass)) < 1e-9);

    const ScalarField twice = normalize_distortion(p.eps, unit_lap.mass);
    for (std::size_t i = 0; i < p.eps.size(); ++i) CHECK(std::abs(twice[i] - p.eps[i]) < 1e-12);

    // A monotone shift keeps the vertex ordering.
    const ScalarField raw = area_distortion(p.unit, p.map);
    const double shift = raw[0] - p.eps[0];
    for (std::size_t i = 0; i < raw.size(); ++i) CHECK(raw[i] - p.eps[i] == doctest::Approx(shift).epsilon(1e-12));

    // The unweighted mean need not vanish.
    double plain = 0.0;
    for (double v : p.eps.values) plain += v;
    plain /= static_cast<double>(p.eps.size());
    CHECK(std::abs(plain) > 1e-6);

    CHECK(std::abs(weighted_mean(normalize_distortion(raw, s), lap.mass)) < 1e-9);
}

TEST_CASE("every spike tip region carries strongly negative distortion")
{
    for (double h : {2.0, 5.0}) {
        CAPTURE(h);
        NoduleRecipe r;
        r.spike_height = h;
        const SyntheticNodule n = make_nodule(r);
        const testing::Pipeline p = testing::run_pipeline(n.mesh);
        for (const SpikeSpec& s : n.truth.spikes) {
            double deepest = 0.0;
            for (std::size_t i = 0; i < n.mesh.vertices.size(); ++i) {
                const Vec3 d = n.mesh.vertices[i].normalized();
                if (std::acos(std::clamp(d.dot(s.direction), -1.0, 1.0)) * r.sphere_radius <= s.base_radius)
                    deepest = std::min(deepest, p.eps[i]);
            }
            CHECK(deepest < -0.5);
        }
    }
}

TEST_CASE("collapsed image one-ring is degenerate")
{
    const TriangleMesh ico = make_icosphere(1.0, 1);
    SphericalMap m = radial_map(ico);
    for (Vec3& p : m.positions) p = Vec3::UnitZ();
    CHECK_THROWS_AS(area_distortion(ico, m), DegenerateError);
}
