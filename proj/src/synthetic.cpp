#include "spicula/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <limits>
#include <random>
#include <unordered_map>

#include "edge_key.hpp"
#include "spicula/errors.hpp"

namespace spicula {

namespace {

double profile_value(SpikeProfile profile, double u)
{
    // u is the footprint-relative distance in [0, 1].
    if (profile == SpikeProfile::Cone) return 1.0 - u;
    // Gaussian with sigma = base_radius / 2, shifted so it reaches zero at the rim.
    const double rim = std::exp(-2.0);
    return (std::exp(-2.0 * u * u) - rim) / (1.0 - rim);
}

double angle_between(const Vec3& a, const Vec3& b)
{
    return std::atan2(a.cross(b).norm(), a.dot(b));
}

} // namespace

TriangleMesh make_icosphere(double radius, int subdivisions)
{
    if (!(radius > 0.0)) throw DegenerateError("icosphere radius must be positive");
    if (subdivisions < 0 || subdivisions > 7) throw DegenerateError("icosphere subdivisions must be in [0, 7]");

    const double t = (1.0 + std::sqrt(5.0)) / 2.0;
    TriangleMesh mesh;
    mesh.vertices = {{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
                     {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
    mesh.faces = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
                  {11, 10, 2}, {10, 7, 6}, {7, 1, 8},   {3, 9, 4},  {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
                  {3, 8, 9},  {4, 9, 5},  {2, 4, 11},  {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
    for (auto& v : mesh.vertices) v.normalize();

    for (int level = 0; level < subdivisions; ++level) {
        std::unordered_map<std::uint64_t, int> midpoint;
        auto mid = [&](int a, int b) {
            auto [it, inserted] = midpoint.try_emplace(detail::edge_key(a, b), 0);
            if (inserted) {
                it->second = static_cast<int>(mesh.vertices.size());
                mesh.vertices.push_back((mesh.vertices[a] + mesh.vertices[b]).normalized());
            }
            return it->second;
        };
        std::vector<Face> next;
        next.reserve(mesh.faces.size() * 4);
        for (const Face& f : mesh.faces) {
            const int ab = mid(f[0], f[1]), bc = mid(f[1], f[2]), ca = mid(f[2], f[0]);
            next.push_back({f[0], ab, ca});
            next.push_back({f[1], bc, ab});
            next.push_back({f[2], ca, bc});
            next.push_back({ab, bc, ca});
        }
        mesh.faces = std::move(next);
    }
    for (auto& v : mesh.vertices) v *= radius;
    return mesh;
}

TriangleMesh make_ellipsoid(double a, double b, double c, int subdivisions)
{
    TriangleMesh mesh = make_icosphere(1.0, subdivisions);
    for (auto& v : mesh.vertices) v = Vec3(a * v.x(), b * v.y(), c * v.z());
    return mesh;
}

std::vector<Vec3> tetrahedral_directions()
{
    std::vector<Vec3> dirs{{1, 1, 1}, {1, -1, -1}, {-1, 1, -1}, {-1, -1, 1}};
    for (auto& d : dirs) d.normalize();
    return dirs;
}

std::vector<Vec3> fibonacci_directions(int count)
{
    std::vector<Vec3> dirs;
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (int i = 0; i < count; ++i) {
        const double z = 1.0 - (2.0 * i + 1.0) / count;
        const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        const double phi = golden * i;
        dirs.emplace_back(r * std::cos(phi), r * std::sin(phi), z);
    }
    return dirs;
}

SyntheticNodule add_spikes(const TriangleMesh& mesh, std::span<const SpikeSpec> specs, std::uint64_t seed,
                           double jitter_rad)
{
    SyntheticNodule out;
    out.mesh = mesh;
    out.truth.seed = seed;

    const Vec3 center = vertex_centroid(mesh);
    double radius = 0.0;
    for (const auto& v : mesh.vertices) radius += (v - center).norm();
    radius /= std::max<std::size_t>(1, mesh.vertices.size());
    out.truth.base_radius_mm = radius;

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<SpikeSpec> spikes(specs.begin(), specs.end());
    for (auto& s : spikes) {
        if (!(s.height > 0.0) || !(s.base_radius > 0.0)) throw DegenerateError("spike height and base radius must be positive");
        s.direction.normalize();
        if (jitter_rad > 0.0) {
            Vec3 tangent(normal(rng), normal(rng), normal(rng));
            tangent -= tangent.dot(s.direction) * s.direction;
            if (tangent.norm() > 1e-12) {
                const double angle = jitter_rad * std::abs(normal(rng));
                s.direction = (std::cos(angle) * s.direction + std::sin(angle) * tangent.normalized()).normalized();
            }
        }
    }

    for (std::size_t i = 0; i < spikes.size(); ++i)
        for (std::size_t j = i + 1; j < spikes.size(); ++j) {
            const double limit = (spikes[i].base_radius + spikes[j].base_radius) / radius;
            if (angle_between(spikes[i].direction, spikes[j].direction) < limit)
                throw OverlapError("spike footprints " + std::to_string(i) + " and " + std::to_string(j) + " overlap");
        }

    for (const auto& s : spikes) {
        // The vertex closest to the axis moves onto it so the tip reaches full height.
        std::size_t tip = 0;
        double closest = std::numeric_limits<double>::infinity();
        for (std::size_t v = 0; v < mesh.vertices.size(); ++v) {
            const double theta = angle_between(mesh.vertices[v] - center, s.direction);
            if (theta < closest) {
                closest = theta;
                tip = v;
            }
        }
        out.mesh.vertices[tip] = center + (mesh.vertices[tip] - center).norm() * s.direction;

        const double footprint = s.base_radius / radius;
        int inside = 0;
        for (std::size_t v = 0; v < mesh.vertices.size(); ++v) {
            const double theta = angle_between(out.mesh.vertices[v] - center, s.direction);
            if (theta >= footprint) continue;
            ++inside;
            const double u = radius * theta / s.base_radius;
            out.mesh.vertices[v] += s.height * profile_value(s.profile, u) * s.direction;
        }
        if (inside < 4) throw DegenerateError("spike footprint covers fewer than four vertices");
    }
    out.truth.spikes = std::move(spikes);
    return out;
}

SyntheticNodule make_nodule(const NoduleRecipe& recipe)
{
    const TriangleMesh base = make_icosphere(recipe.sphere_radius, recipe.subdivisions);
    const std::vector<Vec3> dirs =
        recipe.spike_count == 4 ? tetrahedral_directions() : fibonacci_directions(recipe.spike_count);
    std::vector<SpikeSpec> specs;
    for (const auto& d : dirs) specs.push_back({d, recipe.spike_height, recipe.spike_base_radius, recipe.profile});
    return add_spikes(base, specs, recipe.seed, recipe.jitter_rad);
}

} // namespace spicula
