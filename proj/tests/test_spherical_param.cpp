#include <doctest.h>

#include <algorithm>
#include <set>

#include "spicula/errors.hpp"
#include "support.hpp"

using namespace spicula;

namespace {

double mass_dot(const Laplacian& lap, const ScalarField& f)
{
    double s = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) s += lap.mass[static_cast<Eigen::Index>(i)] * f[i];
    return s;
}

double residual(const Laplacian& lap, const FiedlerResult& r)
{
    const Eigen::Map<const Eigen::VectorXd> f(r.field.values.data(), static_cast<Eigen::Index>(r.field.size()));
    const Eigen::VectorXd res = lap.stiffness * f - r.eigenvalue * lap.mass.cwiseProduct(f);
    return res.norm() / f.norm();
}

// Boundary loops of a patch counted from its boundary edges.
int boundary_loop_count(const TriangleMesh& mesh)
{
    std::map<std::pair<int, int>, int> edges;
    for (const Face& f : mesh.faces)
        for (int k = 0; k < 3; ++k) {
            const int a = f[k], b = f[(k + 1) % 3];
            ++edges[{std::min(a, b), std::max(a, b)}];
        }
    std::map<int, std::vector<int>> adj;
    for (const auto& [e, n] : edges)
        if (n == 1) {
            adj[e.first].push_back(e.second);
            adj[e.second].push_back(e.first);
        }
    std::set<int> seen;
    int loops = 0;
    for (const auto& [v, nb] : adj) {
        if (seen.count(v)) continue;
        ++loops;
        std::vector<int> stack{v};
        while (!stack.empty()) {
            const int x = stack.back();
            stack.pop_back();
            if (!seen.insert(x).second) continue;
            for (int y : adj[x]) stack.push_back(y);
        }
    }
    return loops;
}

double median_of(std::vector<double> v)
{
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

} // namespace

TEST_CASE("Fiedler field on the unit icosphere")
{
    const TriangleMesh s = make_icosphere(1.0, 4);
    const Laplacian lap = cotangent_laplacian(s);
    const FiedlerResult r = fiedler_field(s, lap);
    CHECK(std::abs(r.eigenvalue / 2.0 - 1.0) < 0.05);
    CHECK(r.multiplicity == 3);
    CHECK(std::abs(mass_dot(lap, r.field)) < 1e-8);
    CHECK(r.residual < 1e-8);
    CHECK(residual(lap, r) < 1e-8);
    double norm = 0.0;
    for (std::size_t i = 0; i < r.field.size(); ++i) norm += lap.mass[static_cast<Eigen::Index>(i)] * r.field[i] * r.field[i];
    CHECK(norm == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("Fiedler field sign convention")
{
    const TriangleMesh e = make_ellipsoid(4, 1, 1, 3);
    const FiedlerResult r = fiedler_field(e);
    const auto& f = r.field.values;
    const double peak = *std::max_element(f.begin(), f.end(), [](double a, double b) { return std::abs(a) < std::abs(b); });
    const auto first = std::find_if(f.begin(), f.end(), [&](double x) { return std::abs(std::abs(x) - std::abs(peak)) < 1e-12; });
    CHECK(*first > 0.0);
}

TEST_CASE("prolate ellipsoid Fiedler field follows the long axis")
{
    const TriangleMesh e = make_ellipsoid(4, 1, 1, 4);
    const Laplacian lap = cotangent_laplacian(e);
    const FiedlerResult r = fiedler_field(e, lap);
    CHECK(r.multiplicity == 1);
    CHECK(r.residual < 1e-8);
    CHECK(std::abs(mass_dot(lap, r.field)) < 1e-8);
    // Monotone along x: sign agrees with x away from the waist.
    const double sign = r.field[0] * e.vertices[0].x() > 0 ? 1.0 : -1.0;
    for (std::size_t i = 0; i < e.vertices.size(); ++i)
        if (std::abs(e.vertices[i].x()) > 0.5) CHECK(sign * r.field[i] * e.vertices[i].x() > 0.0);

    const ZeroLevelSplit split = zero_level_split(e, r.field);
    CHECK(split.cut_loops.size() == 1);
    for (const Vec3& p : split.cut_points) CHECK(std::abs(p.x()) < 0.5);
    for (const DiskPatch* d : {&split.north, &split.south}) {
        const MeshDiagnostics diag = validate(d->mesh);
        CHECK(diag.euler_characteristic == 1);
        CHECK(diag.connected_components == 1);
        CHECK(boundary_loop_count(d->mesh) == 1);
        CHECK(d->boundary.size() == split.cut_points.size());
    }
}

TEST_CASE("zero-level split on the sphere gives equal-area halves")
{
    const TriangleMesh s = make_icosphere(1.0, 4);
    const FiedlerResult r = fiedler_field(s);
    const ZeroLevelSplit split = zero_level_split(s, r.field);
    const double a = surface_area(split.north.mesh), b = surface_area(split.south.mesh);
    CHECK(std::abs(a - b) / (0.5 * (a + b)) < 0.02);
    CHECK((a + b) == doctest::Approx(surface_area(s)).epsilon(1e-9));
}

TEST_CASE("split preconditions")
{
    const TriangleMesh s = make_icosphere(1.0, 2);
    ScalarField positive;
    positive.values.assign(s.vertices.size(), 1.0);
    CHECK_THROWS_AS(zero_level_split(s, positive), SplitError);

    // Two bands of negative values produce two zero loops.
    ScalarField bands;
    for (const Vec3& v : s.vertices) bands.values.push_back(std::abs(v.z()) > 0.5 ? 1.0 : -1.0);
    CHECK_THROWS_AS(zero_level_split(s, bands), SplitError);
}

TEST_CASE("sphere map on the unit icosphere is near identity")
{
    const SphericalMap m = sphere_map(make_icosphere(1.0, 4));
    CHECK(m.quality.flipped_triangles == 0);
    CHECK(m.quality.median_angle_distortion <= 1.02);
    CHECK(m.quality.median_angle_distortion <= m.quality.max_angle_distortion);
    CHECK(m.quality.eigen_residual < 1e-8);
    for (const Vec3& p : m.positions) CHECK(std::abs(p.norm() - 1.0) < 1e-9);
}

TEST_CASE("sphere map quality on ellipsoids and nodules")
{
    struct Case {
        std::string name;
        TriangleMesh mesh;
    };
    const std::vector<Case> cases{{"ellipsoid 2:1:1", make_ellipsoid(2, 1, 1, 5)},
                                  {"ellipsoid 4:1:1", make_ellipsoid(4, 1, 1, 5)},
                                  {"nodule 5 mm", testing::nodule(5.0)}};
    for (const Case& c : cases) {
        CAPTURE(c.name);
        const TriangleMesh unit = rescale_to_area(c.mesh);
        const SphericalMap m = sphere_map(unit);
        CHECK(m.positions.size() == unit.vertices.size());
        CHECK(m.quality.flipped_triangles == 0);
        CHECK(count_flipped(unit, m.positions) == 0);
        CHECK(m.quality.median_angle_distortion <= 1.1);
        CHECK(m.quality.eigen_residual < 1e-8);
        for (const Vec3& p : m.positions) CHECK(std::abs(p.norm() - 1.0) < 1e-9);
        const std::vector<double> w = barycentric_vertex_areas(unit);
        CHECK(weighted_centroid(m.positions, w).norm() < 1e-6);
    }
}

TEST_CASE("quality metrics from their definition")
{
    const TriangleMesh s = make_icosphere(1.0, 1);
    const std::vector<double> k = angle_distortion(s, s.vertices);
    for (double x : k) CHECK(x == doctest::Approx(1.0).epsilon(1e-9));

    // Stretch by 2 along x in every triangle's own frame: ratio of singular values.
    TriangleMesh flat;
    flat.vertices = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0)};
    flat.faces = {Face{0, 1, 2}};
    const std::vector<Vec3> image{Vec3(0, 0, 0), Vec3(2, 0, 0), Vec3(0, 1, 0)};
    CHECK(angle_distortion(flat, image)[0] == doctest::Approx(2.0).epsilon(1e-12));

    std::vector<Vec3> mirrored = s.vertices;
    for (Vec3& v : mirrored) v.x() = -v.x();
    CHECK(count_flipped(s, mirrored) == static_cast<std::int64_t>(s.faces.size()));
    const ParamQuality q = measure_quality(s, s.vertices);
    CHECK(q.flipped_triangles == 0);
    CHECK(q.median_angle_distortion == doctest::Approx(median_of(k)));
}

TEST_CASE("Mobius centering")
{
    const TriangleMesh unit = rescale_to_area(testing::nodule(5.0));
    const SphericalMap centered = sphere_map(unit);
    const std::vector<double> w = barycentric_vertex_areas(unit);

    SUBCASE("already centered map is a fixed point")
    {
        const SphericalMap again = mobius_center(centered, unit);
        double move = 0.0;
        for (std::size_t i = 0; i < centered.positions.size(); ++i)
            move = std::max(move, (again.positions[i] - centered.positions[i]).norm());
        CHECK(move < 1e-9);
        CHECK(std::abs(again.quality.median_angle_distortion - centered.quality.median_angle_distortion) < 1e-6);
    }
    SUBCASE("recovers from a push toward the north pole")
    {
        SphericalMap pushed = centered;
        pushed.positions = mobius_push(centered.positions, Vec3(0, 0, -0.4));
        CHECK(weighted_centroid(pushed.positions, w).norm() > 0.1);
        const SphericalMap back = mobius_center(pushed, unit);
        CHECK(weighted_centroid(back.positions, w).norm() < 1e-6);
        for (const Vec3& p : back.positions) CHECK(std::abs(p.norm() - 1.0) < 1e-9);
        CHECK(std::abs(back.quality.median_angle_distortion - centered.quality.median_angle_distortion) < 1e-3);
    }
    SUBCASE("rotation keeps the centroid at the origin")
    {
        std::mt19937_64 rng(3);
        const Eigen::Matrix3d r = testing::random_rotation(rng);
        std::vector<Vec3> rotated;
        for (const Vec3& p : centered.positions) rotated.push_back(r * p);
        CHECK(weighted_centroid(rotated, w).norm() < 1e-6);
    }
}

TEST_CASE("mobius_push sends its parameter to the origin and keeps unit length")
{
    const Vec3 a(0.2, -0.3, 0.4);
    for (const Vec3& x : fibonacci_directions(50)) CHECK(std::abs(mobius_push(x, a).norm() - 1.0) < 1e-12);
    const Vec3 x = Vec3(1, 2, 2).normalized();
    CHECK((mobius_push(x, Vec3::Zero()) - x).norm() < 1e-15);
}

TEST_CASE("rotated input gives a rotated map with the same quality")
{
    const TriangleMesh unit = rescale_to_area(make_ellipsoid(2, 1, 1, 3));
    std::mt19937_64 rng(11);
    const TriangleMesh turned = testing::transformed(unit, testing::random_rotation(rng), Vec3::Zero());
    const SphericalMap a = sphere_map(unit), b = sphere_map(turned);
    CHECK(std::abs(a.quality.median_angle_distortion - b.quality.median_angle_distortion) < 1e-6);
    CHECK(a.quality.flipped_triangles == b.quality.flipped_triangles);
}

TEST_CASE("open mesh is rejected")
{
    TriangleMesh m = make_icosphere(1.0, 2);
    m.faces.pop_back();
    CHECK_THROWS(sphere_map(m));
}
