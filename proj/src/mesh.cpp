#include "spicula/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <unordered_map>

#include "edge_key.hpp"
#include "spicula/errors.hpp"

namespace spicula {

namespace {

double bbox_diagonal(const TriangleMesh& mesh)
{
    if (mesh.vertices.empty()) return 0.0;
    Vec3 lo = mesh.vertices.front(), hi = lo;
    for (const auto& v : mesh.vertices) {
        lo = lo.cwiseMin(v);
        hi = hi.cwiseMax(v);
    }
    return (hi - lo).norm();
}

bool face_indices_valid(const Face& f, std::size_t n)
{
    for (int i : f)
        if (i < 0 || static_cast<std::size_t>(i) >= n) return false;
    return f[0] != f[1] && f[1] != f[2] && f[0] != f[2];
}

} // namespace

double face_area(const TriangleMesh& mesh, std::size_t f)
{
    const Face& t = mesh.faces[f];
    const Vec3& a = mesh.vertices[t[0]];
    const Vec3& b = mesh.vertices[t[1]];
    const Vec3& c = mesh.vertices[t[2]];
    return 0.5 * (b - a).cross(c - a).norm();
}

std::vector<double> face_areas(const TriangleMesh& mesh)
{
    std::vector<double> out(mesh.faces.size());
    for (std::size_t f = 0; f < mesh.faces.size(); ++f) out[f] = face_area(mesh, f);
    return out;
}

Vec3 face_normal(const TriangleMesh& mesh, std::size_t f)
{
    const Face& t = mesh.faces[f];
    const Vec3& a = mesh.vertices[t[0]];
    return (mesh.vertices[t[1]] - a).cross(mesh.vertices[t[2]] - a).normalized();
}

MeshDiagnostics validate(const TriangleMesh& mesh)
{
    MeshDiagnostics d;
    d.vertex_count = static_cast<std::int64_t>(mesh.vertices.size());
    d.face_count = static_cast<std::int64_t>(mesh.faces.size());

    std::unordered_map<std::uint64_t, int> undirected;
    std::unordered_map<std::uint64_t, int> directed;
    undirected.reserve(mesh.faces.size() * 2);
    directed.reserve(mesh.faces.size() * 4);

    d.min_face_area = mesh.faces.empty() ? 0.0 : std::numeric_limits<double>::infinity();
    for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
        const Face& t = mesh.faces[f];
        if (!face_indices_valid(t, mesh.vertices.size())) {
            ++d.invalid_indices;
            d.min_face_area = 0.0;
            continue;
        }
        d.min_face_area = std::min(d.min_face_area, face_area(mesh, f));
        for (int k = 0; k < 3; ++k) {
            int a = t[k], b = t[(k + 1) % 3];
            ++undirected[detail::edge_key(a, b)];
            ++directed[detail::directed_key(a, b)];
        }
    }
    d.edge_count = static_cast<std::int64_t>(undirected.size());
    d.euler_characteristic = d.vertex_count - d.edge_count + d.face_count;

    for (const auto& [key, count] : undirected) {
        if (count == 1) ++d.boundary_edges;
        else if (count > 2) ++d.nonmanifold_edges;
    }
    d.is_closed = d.invalid_indices == 0 && d.boundary_edges == 0 && d.nonmanifold_edges == 0 &&
                  !mesh.faces.empty();

    bool oriented = d.invalid_indices == 0 && !mesh.faces.empty();
    for (const auto& [key, count] : directed) {
        if (count != 1) {
            oriented = false;
            break;
        }
        auto [a, b] = detail::edge_ends(key);
        if (d.is_closed && !directed.contains(detail::directed_key(b, a))) {
            oriented = false;
            break;
        }
    }
    d.is_oriented = oriented;

    int components = 0;
    if (d.invalid_indices == 0) component_labels(mesh, &components);
    d.connected_components = components;
    return d;
}

void require_genus_zero(const TriangleMesh& mesh, bool allow_multiple_components)
{
    const MeshDiagnostics d = validate(mesh);
    auto fail = [&](const std::string& why) {
        std::ostringstream os;
        os << why << " (V=" << d.vertex_count << " E=" << d.edge_count << " F=" << d.face_count
           << " chi=" << d.euler_characteristic << ")";
        throw TopologyError(os.str());
    };
    if (mesh.faces.empty()) fail("mesh has no faces");
    if (d.invalid_indices > 0) fail("face references an invalid or repeated vertex index");
    if (d.boundary_edges > 0) fail("open boundary: " + std::to_string(d.boundary_edges) + " boundary edges");
    if (d.nonmanifold_edges > 0)
        fail("non-manifold: " + std::to_string(d.nonmanifold_edges) + " edges shared by more than two faces");
    if (!d.is_oriented) fail("inconsistent face orientation");
    if (d.connected_components != 1 && !allow_multiple_components)
        fail("mesh has " + std::to_string(d.connected_components) + " connected components");
    if (d.connected_components == 1 && d.euler_characteristic != 2)
        fail("surface is not genus zero");
    if (d.connected_components > 1 && d.euler_characteristic != 2 * d.connected_components)
        fail("a component is not genus zero");

    const double diag = bbox_diagonal(mesh);
    if (!(d.min_face_area > 1e-14 * diag * diag))
        throw DegenerateError("mesh contains a zero-area face");
}

double surface_area(const TriangleMesh& mesh)
{
    double area = 0.0;
    for (std::size_t f = 0; f < mesh.faces.size(); ++f) area += face_area(mesh, f);
    return area;
}

Vec3 vertex_centroid(const TriangleMesh& mesh)
{
    Vec3 c = Vec3::Zero();
    for (const auto& v : mesh.vertices) c += v;
    return mesh.vertices.empty() ? c : Vec3(c / static_cast<double>(mesh.vertices.size()));
}

double enclosed_volume(const TriangleMesh& mesh)
{
    const MeshDiagnostics d = validate(mesh);
    if (!d.is_closed) throw TopologyError("enclosed volume is undefined on an open mesh");
    // Tetrahedra are formed against the centroid so large offsets do not
    // cost precision.
    const Vec3 origin = vertex_centroid(mesh);
    double six_vol = 0.0;
    for (const Face& t : mesh.faces) {
        const Vec3 a = mesh.vertices[t[0]] - origin;
        const Vec3 b = mesh.vertices[t[1]] - origin;
        const Vec3 c = mesh.vertices[t[2]] - origin;
        six_vol += a.dot(b.cross(c));
    }
    return std::abs(six_vol) / 6.0;
}

TriangleMesh rescale_to_area(const TriangleMesh& mesh, double target_area)
{
    const double area = surface_area(mesh);
    if (!(area > 0.0) || !std::isfinite(area)) throw DegenerateError("cannot rescale a mesh with zero area");
    const double factor = std::sqrt(target_area / area);
    const Vec3 c = vertex_centroid(mesh);

    TriangleMesh out;
    out.faces = mesh.faces;
    out.vertices.reserve(mesh.vertices.size());
    for (const auto& v : mesh.vertices) out.vertices.emplace_back(c + factor * (v - c));
    out.unit_scale = mesh.unit_scale / factor;
    return out;
}

std::vector<std::vector<int>> vertex_adjacency(const TriangleMesh& mesh)
{
    std::vector<std::vector<int>> adj(mesh.vertices.size());
    for (const Face& t : mesh.faces) {
        for (int k = 0; k < 3; ++k) {
            adj[t[k]].push_back(t[(k + 1) % 3]);
            adj[t[k]].push_back(t[(k + 2) % 3]);
        }
    }
    for (auto& n : adj) {
        std::sort(n.begin(), n.end());
        n.erase(std::unique(n.begin(), n.end()), n.end());
    }
    return adj;
}

std::vector<std::vector<int>> vertex_faces(const TriangleMesh& mesh)
{
    std::vector<std::vector<int>> vf(mesh.vertices.size());
    for (std::size_t f = 0; f < mesh.faces.size(); ++f)
        for (int v : mesh.faces[f]) vf[v].push_back(static_cast<int>(f));
    return vf;
}

std::vector<int> component_labels(const TriangleMesh& mesh, int* count)
{
    detail::DisjointSets sets(mesh.vertices.size());
    for (const Face& t : mesh.faces) {
        sets.unite_into(t[0], t[1]);
        sets.unite_into(t[0], t[2]);
    }
    std::vector<int> labels(mesh.vertices.size(), -1);
    std::unordered_map<int, int> root_to_label;
    for (std::size_t v = 0; v < mesh.vertices.size(); ++v) {
        const int root = sets.find(static_cast<int>(v));
        auto [it, inserted] = root_to_label.try_emplace(root, static_cast<int>(root_to_label.size()));
        labels[v] = it->second;
    }
    if (count) *count = static_cast<int>(root_to_label.size());
    return labels;
}

TriangleMesh largest_component(const TriangleMesh& mesh)
{
    int count = 0;
    const std::vector<int> labels = component_labels(mesh, &count);
    if (count <= 1) return mesh;

    std::vector<double> area(count, 0.0);
    for (std::size_t f = 0; f < mesh.faces.size(); ++f) area[labels[mesh.faces[f][0]]] += face_area(mesh, f);
    const int keep = static_cast<int>(std::max_element(area.begin(), area.end()) - area.begin());

    TriangleMesh out;
    out.unit_scale = mesh.unit_scale;
    std::vector<int> remap(mesh.vertices.size(), -1);
    for (std::size_t v = 0; v < mesh.vertices.size(); ++v) {
        if (labels[v] != keep) continue;
        remap[v] = static_cast<int>(out.vertices.size());
        out.vertices.push_back(mesh.vertices[v]);
    }
    for (const Face& t : mesh.faces)
        if (labels[t[0]] == keep) out.faces.push_back({remap[t[0]], remap[t[1]], remap[t[2]]});
    return out;
}

Laplacian cotangent_laplacian(const TriangleMesh& mesh)
{
    const auto n = static_cast<Eigen::Index>(mesh.vertices.size());
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(mesh.faces.size() * 12);
    Eigen::VectorXd mass = Eigen::VectorXd::Zero(n);

    const double diag = bbox_diagonal(mesh);
    for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
        const Face& t = mesh.faces[f];
        const double area = face_area(mesh, f);
        if (!(area > 1e-14 * diag * diag)) throw DegenerateError("zero-area triangle in cotangent Laplacian");

        std::array<Vec3, 3> p{mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]]};
        std::array<double, 3> cot{};
        bool obtuse = false;
        int obtuse_at = -1;
        for (int k = 0; k < 3; ++k) {
            const Vec3 u = p[(k + 1) % 3] - p[k];
            const Vec3 v = p[(k + 2) % 3] - p[k];
            const double dot = u.dot(v);
            cot[k] = dot / (2.0 * area);
            if (dot < 0.0) {
                obtuse = true;
                obtuse_at = k;
            }
        }
        // Edge opposite corner k joins (k+1, k+2).
        for (int k = 0; k < 3; ++k) {
            const int i = t[(k + 1) % 3];
            const int j = t[(k + 2) % 3];
            const double w = 0.5 * cot[k];
            triplets.emplace_back(i, j, -w);
            triplets.emplace_back(j, i, -w);
            triplets.emplace_back(i, i, w);
            triplets.emplace_back(j, j, w);
        }
        if (!obtuse) {
            for (int k = 0; k < 3; ++k) {
                const Vec3 eij = p[(k + 1) % 3] - p[k];
                const Vec3 eik = p[(k + 2) % 3] - p[k];
                // Corner k owns halves of its two incident edges.
                mass[t[k]] += (eij.squaredNorm() * cot[(k + 2) % 3] + eik.squaredNorm() * cot[(k + 1) % 3]) / 8.0;
            }
        } else {
            for (int k = 0; k < 3; ++k) mass[t[k]] += (k == obtuse_at ? 0.5 : 0.25) * area;
        }
    }

    Laplacian out;
    out.stiffness.resize(n, n);
    out.stiffness.setFromTriplets(triplets.begin(), triplets.end());
    out.stiffness.makeCompressed();
    out.mass = std::move(mass);
    return out;
}

} // namespace spicula
