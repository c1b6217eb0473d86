#pragma once

#include <array>
#include <cstdint>
#include <numbers>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <Eigen/SparseCore>

namespace spicula {

using Vec3 = Eigen::Vector3d;
using Face = std::array<int, 3>;

// Indexed triangle surface in millimeters. Faces are counterclockwise
// when seen from outside. unit_scale converts lengths of this mesh back to
// the lengths of the mesh it was rescaled from (1 for unscaled input).
struct TriangleMesh {
    std::vector<Vec3> vertices;
    std::vector<Face> faces;
    double unit_scale = 1.0;

    std::size_t vertex_count() const { return vertices.size(); }
    std::size_t face_count() const { return faces.size(); }
};

struct MeshDiagnostics {
    std::int64_t vertex_count = 0;
    std::int64_t edge_count = 0;
    std::int64_t face_count = 0;
    std::int64_t euler_characteristic = 0;
    bool is_closed = false;
    bool is_oriented = false;
    double min_face_area = 0.0;
    std::int64_t connected_components = 0;

    // Extra detail used to build error messages.
    std::int64_t boundary_edges = 0;
    std::int64_t nonmanifold_edges = 0;
    std::int64_t invalid_indices = 0;
};

// Reports counts and flags; never throws and never mutates.
MeshDiagnostics validate(const TriangleMesh& mesh);

// Throws TopologyError unless the mesh is a closed, consistently oriented,
// connected genus-zero surface, and DegenerateError on a zero-area face.
// With allow_multiple_components the component check is skipped.
void require_genus_zero(const TriangleMesh& mesh, bool allow_multiple_components = false);

inline double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c) { return 0.5 * (b - a).cross(c - a).norm(); }
double face_area(const TriangleMesh& mesh, std::size_t f);
std::vector<double> face_areas(const TriangleMesh& mesh);
Vec3 face_normal(const TriangleMesh& mesh, std::size_t f); // unit length

double surface_area(const TriangleMesh& mesh);

// |sum of signed tetrahedra to the origin|. Throws TopologyError on open meshes.
double enclosed_volume(const TriangleMesh& mesh);

Vec3 vertex_centroid(const TriangleMesh& mesh);

inline constexpr double kUnitSphereArea = 4.0 * std::numbers::pi;

// Uniform scaling about the vertex centroid so that surface_area equals
// target_area. unit_scale is multiplied by sqrt(old_area / target_area).
TriangleMesh rescale_to_area(const TriangleMesh& mesh, double target_area = kUnitSphereArea);

// Per-vertex sorted one-ring neighbor lists.
std::vector<std::vector<int>> vertex_adjacency(const TriangleMesh& mesh);

// Faces incident to each vertex.
std::vector<std::vector<int>> vertex_faces(const TriangleMesh& mesh);

// Component label per vertex (0-based, ordered by lowest vertex index).
std::vector<int> component_labels(const TriangleMesh& mesh, int* count = nullptr);

// Keeps only the component with the largest surface area.
TriangleMesh largest_component(const TriangleMesh& mesh);

struct Laplacian {
    // Positive semidefinite cotangent operator; rows sum to zero.
    Eigen::SparseMatrix<double> stiffness;
    // Mixed Voronoi lumped areas; sum to the surface area.
    Eigen::VectorXd mass;
};

// Cotangent Laplacian with Voronoi mass (barycentric split on obtuse
// triangles). Throws DegenerateError on a zero-area triangle.
Laplacian cotangent_laplacian(const TriangleMesh& mesh);

} // namespace spicula
