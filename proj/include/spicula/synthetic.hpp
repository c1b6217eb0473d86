#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "spicula/mesh.hpp"

namespace spicula {

enum class SpikeProfile { Cone, Gaussian };

struct SpikeSpec {
    Vec3 direction = Vec3::UnitZ(); // unit
    double height = 5.0;            // mm above the base surface
    double base_radius = 2.0;       // mm, geodesic radius of the footprint
    SpikeProfile profile = SpikeProfile::Cone;
};

struct GroundTruth {
    std::vector<SpikeSpec> spikes;
    double base_radius_mm = 0.0; // radius of the base sphere
    std::uint64_t seed = 0;
};

struct SyntheticNodule {
    TriangleMesh mesh;
    GroundTruth truth;
};

// Subdivided icosahedron centered at the origin. subdivisions in [0, 7].
TriangleMesh make_icosphere(double radius, int subdivisions);

// Icosphere with per-axis scaling (semi-axes a, b, c along x, y, z).
TriangleMesh make_ellipsoid(double a, double b, double c, int subdivisions);

// Displaces the vertices inside each footprint along the spike direction.
// The base is treated as a sphere about the vertex centroid with the mean
// vertex radius. jitter_rad > 0 perturbs directions using `seed`.
// Throws OverlapError when footprints intersect and DegenerateError when a
// footprint holds fewer than four vertices.
SyntheticNodule add_spikes(const TriangleMesh& mesh, std::span<const SpikeSpec> specs, std::uint64_t seed = 0,
                           double jitter_rad = 0.0);

// Unit vectors of a regular tetrahedron.
std::vector<Vec3> tetrahedral_directions();
// Near-uniform unit vectors on a Fibonacci spiral.
std::vector<Vec3> fibonacci_directions(int count);

struct NoduleRecipe {
    double sphere_radius = 8.0;
    int subdivisions = 5;
    int spike_count = 4; // 4 uses tetrahedral directions, anything else Fibonacci
    double spike_height = 5.0;
    double spike_base_radius = 2.0;
    SpikeProfile profile = SpikeProfile::Cone;
    std::uint64_t seed = 0;
    double jitter_rad = 0.0;
};

SyntheticNodule make_nodule(const NoduleRecipe& recipe);

} // namespace spicula
