#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "spicula/mesh.hpp"

namespace spicula {

// One value per mesh vertex.
struct ScalarField {
    std::vector<double> values;
    bool normalized = false;

    std::size_t size() const { return values.size(); }
    double operator[](std::size_t i) const { return values[i]; }
};

struct ParamQuality {
    // Per-triangle quasi-conformal ratio sigma_max / sigma_min of the affine
    // map from a source triangle to its image triangle.
    double median_angle_distortion = 1.0;
    double max_angle_distortion = 1.0;
    std::int64_t flipped_triangles = 0;
    // ||S f - lambda M f|| / ||f|| of the Fiedler field used for the split.
    double eigen_residual = 0.0;
};

struct SphericalMap {
    std::vector<Vec3> positions; // unit vectors, one per mesh vertex
    ParamQuality quality;
};

struct EigenOptions {
    double tolerance = 1e-8;
    int max_iterations = 10000;
    int block_size = 6;
};

struct FiedlerResult {
    ScalarField field;
    double eigenvalue = 0.0;
    double residual = 0.0;
    int iterations = 0;
    // Number of numerically coincident eigenvalues at the bottom of the
    // nonzero spectrum. The field is a canonical member of that eigenspace.
    int multiplicity = 1;
};

// First non-trivial generalized eigenvector of (stiffness, mass), mass
// normalized and mass-orthogonal to constants. Subspace iteration with a
// factorized shift; no randomness. Inside a degenerate eigenspace the
// returned vector is the one peaking at the lowest-index vertex that the
// eigenspace does not vanish on, which keeps the choice independent of
// rigid motions. The sign makes the value at the lowest-index vertex of
// maximum magnitude positive. Throws ConvergenceError when the residual
// stays above tolerance after max_iterations.
FiedlerResult fiedler_field(const TriangleMesh& mesh, const EigenOptions& options = {});
FiedlerResult fiedler_field(const TriangleMesh& mesh, const Laplacian& laplacian, const EigenOptions& options = {});

// One side of the zero-level cut. Patch vertices are either original mesh
// vertices or cut vertices (inserted on crossing edges or original vertices
// lying on the cut).
struct DiskPatch {
    TriangleMesh mesh;
    std::vector<int> source;   // patch vertex -> original vertex, -1 if inserted
    std::vector<int> cut_id;   // patch vertex -> cut vertex id, -1 off the cut
    std::vector<int> boundary; // ordered boundary loop, patch interior on the left
};

struct ZeroLevelSplit {
    DiskPatch north; // field >= 0 side
    DiskPatch south;
    std::vector<Vec3> cut_points;             // by cut vertex id
    std::vector<int> cut_source;              // cut id -> original vertex, -1 if inserted
    std::vector<std::vector<Vec3>> cut_loops; // closed polylines (first point not repeated)
};

// Splits the mesh along the zero level set of `field`. Crossing points
// closer than a tenth of an edge to an endpoint snap onto that vertex.
// Throws SplitError when the field does not change sign, the zero set is not
// a single loop, or either side is not a topological disk.
ZeroLevelSplit zero_level_split(const TriangleMesh& mesh, const ScalarField& field);

struct CenteringOptions {
    double tolerance = 1e-6;
    int max_iterations = 500;
};

struct ParamOptions {
    EigenOptions eigen;
    int flip_cap = 0;
    int repair_passes = 50;
    // Alternating Beltrami correction sweeps applied to the welded map.
    int conformal_sweeps = 4;
    // Fraction of vertices pinned around the projection pole in a sweep.
    double pinned_fraction = 0.1;
    CenteringOptions centering;
};

// Fiedler split, harmonic flattening of both disks onto the unit disk,
// welding along the shared cut, inverse stereographic projection, Beltrami
// correction sweeps, flip repair and Mobius centering. Expects a mesh
// rescaled to area 4*pi (any area works; distortion metrics are
// scale-free). Throws ConvergenceError, SplitError, or ParamError when more
// than flip_cap image triangles remain flipped.
SphericalMap sphere_map(const TriangleMesh& mesh, const ParamOptions& options = {});

// Applies sphere Mobius maps until the centroid of the image positions,
// weighted by one third of the incident source triangle areas, has norm
// below tolerance. Gauss-Newton step on the inversion parameter with step
// halving on overshoot. Throws ConvergenceError after max_iterations.
SphericalMap mobius_center(const SphericalMap& map, const TriangleMesh& mesh, const CenteringOptions& options = {});

// Vertex weights used by mobius_center.
std::vector<double> barycentric_vertex_areas(const TriangleMesh& mesh);
Vec3 weighted_centroid(std::span<const Vec3> positions, std::span<const double> weights);

// The conformal automorphism of the sphere that sends `a` (|a| < 1, inside
// the ball) to the origin, applied to unit vectors. Pushes mass away from a.
Vec3 mobius_push(const Vec3& x, const Vec3& a);
std::vector<Vec3> mobius_push(std::span<const Vec3> xs, const Vec3& a);

// Per-face quasi-conformal ratio >= 1 (infinity for collapsed images).
std::vector<double> angle_distortion(const TriangleMesh& mesh, std::span<const Vec3> image);
// Image triangles whose orientation disagrees with the outward sphere normal.
std::int64_t count_flipped(const TriangleMesh& mesh, std::span<const Vec3> image);
ParamQuality measure_quality(const TriangleMesh& mesh, std::span<const Vec3> image);

} // namespace spicula
