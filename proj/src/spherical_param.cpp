#include "spicula/spherical_param.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <numeric>
#include <unordered_map>

#include <Eigen/Dense>
#include <Eigen/Geometry>
#include <Eigen/SparseCholesky>

#include "edge_key.hpp"
#include "spicula/errors.hpp"

namespace spicula {

namespace {

using SparseMatrix = Eigen::SparseMatrix<double>;
using Vec2 = Eigen::Vector2d;

// Deterministic start block that depends on vertex indices only.
Eigen::MatrixXd start_block(Eigen::Index n, Eigen::Index p)
{
    Eigen::MatrixXd x(n, p);
    std::uint64_t state = 0x9e3779b97f4a7c15ull;
    for (Eigen::Index j = 0; j < p; ++j)
        for (Eigen::Index i = 0; i < n; ++i) {
            // splitmix64
            state += 0x9e3779b97f4a7c15ull;
            std::uint64_t z = state;
            z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
            z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
            z ^= z >> 31;
            x(i, j) = static_cast<double>(z >> 11) * 0x1.0p-53 - 0.5;
        }
    return x;
}

void deflate_constants(Eigen::MatrixXd& x, const Eigen::VectorXd& mass)
{
    const double total = mass.sum();
    for (Eigen::Index j = 0; j < x.cols(); ++j) x.col(j).array() -= mass.dot(x.col(j)) / total;
}

// Mass-orthonormalizes the columns (modified Gram-Schmidt, twice).
void mass_orthonormalize(Eigen::MatrixXd& x, const Eigen::VectorXd& mass)
{
    for (int pass = 0; pass < 2; ++pass) {
        for (Eigen::Index j = 0; j < x.cols(); ++j) {
            for (Eigen::Index k = 0; k < j; ++k)
                x.col(j) -= x.col(k).cwiseProduct(mass).dot(x.col(j)) * x.col(k);
            const double norm = std::sqrt(x.col(j).cwiseProduct(mass).dot(x.col(j)));
            if (!(norm > 0.0)) throw ConvergenceError("eigensolver block lost rank");
            x.col(j) /= norm;
        }
    }
}

double residual_norm(const SparseMatrix& s, const Eigen::VectorXd& mass, const Eigen::VectorXd& f, double lambda)
{
    return (s * f - lambda * mass.cwiseProduct(f)).norm() / f.norm();
}

double median_of(std::vector<double> v)
{
    if (v.empty()) return 1.0;
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    const double upper = v[mid];
    if (v.size() % 2 == 1) return upper;
    const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lower + upper);
}

// ------------------------------------------------------------ split helpers

// Neighbors of v in cyclic order around it (closed manifold assumed).
std::vector<int> ordered_ring(const TriangleMesh& mesh, const std::vector<int>& faces_of_v, int v)
{
    std::unordered_map<int, int> next;
    for (int f : faces_of_v) {
        const Face& t = mesh.faces[f];
        const int k = t[0] == v ? 0 : (t[1] == v ? 1 : 2);
        next[t[(k + 1) % 3]] = t[(k + 2) % 3];
    }
    std::vector<int> ring;
    if (next.empty()) return ring;
    const int start = std::min_element(next.begin(), next.end())->first;
    int cur = start;
    do {
        ring.push_back(cur);
        auto it = next.find(cur);
        if (it == next.end()) break;
        cur = it->second;
    } while (cur != start && ring.size() <= next.size());
    return ring;
}

DiskPatch build_patch(const std::vector<std::array<int, 3>>& node_faces, int n, const TriangleMesh& mesh,
                      const std::vector<Vec3>& cut_points, const std::vector<int>& cut_source, const char* side)
{
    // Original vertices first (ascending), then cut nodes (ascending).
    std::vector<int> nodes;
    for (const auto& f : node_faces) nodes.insert(nodes.end(), f.begin(), f.end());
    std::sort(nodes.begin(), nodes.end());
    nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());

    DiskPatch patch;
    patch.mesh.unit_scale = mesh.unit_scale;
    std::unordered_map<int, int> local;
    local.reserve(nodes.size() * 2);
    for (int node : nodes) {
        local[node] = static_cast<int>(patch.mesh.vertices.size());
        if (node < n) {
            patch.mesh.vertices.push_back(mesh.vertices[node]);
            patch.source.push_back(node);
            patch.cut_id.push_back(-1);
        } else {
            const int cid = node - n;
            patch.mesh.vertices.push_back(cut_points[cid]);
            patch.source.push_back(cut_source[cid]);
            patch.cut_id.push_back(cid);
        }
    }
    for (const auto& f : node_faces) patch.mesh.faces.push_back({local[f[0]], local[f[1]], local[f[2]]});

    // Boundary half-edges: those whose twin is missing.
    std::unordered_map<std::uint64_t, int> directed;
    for (const Face& f : patch.mesh.faces)
        for (int k = 0; k < 3; ++k) directed[detail::directed_key(f[k], f[(k + 1) % 3])] = 1;
    std::unordered_map<int, int> next;
    std::int64_t edges = 0;
    for (const auto& [key, unused] : directed) {
        auto [a, b] = detail::edge_ends(key);
        const bool boundary = !directed.contains(detail::directed_key(b, a));
        edges += boundary ? 2 : 1; // interior edges are seen twice
        if (!boundary) continue;
        if (next.contains(a)) throw SplitError(std::string(side) + " side is pinched at a cut vertex");
        next[a] = b;
    }
    edges /= 2;
    const std::int64_t chi = static_cast<std::int64_t>(patch.mesh.vertices.size()) - edges +
                             static_cast<std::int64_t>(patch.mesh.faces.size());
    if (next.empty()) throw SplitError(std::string(side) + " side has no boundary");

    // Walk loops starting from the smallest boundary vertex.
    std::vector<std::vector<int>> loops;
    std::unordered_map<int, bool> seen;
    std::vector<int> starts;
    for (const auto& [a, b] : next) starts.push_back(a);
    std::sort(starts.begin(), starts.end());
    for (int s : starts) {
        if (seen[s]) continue;
        std::vector<int> loop;
        int cur = s;
        while (!seen[cur]) {
            seen[cur] = true;
            loop.push_back(cur);
            auto it = next.find(cur);
            if (it == next.end()) throw SplitError(std::string(side) + " side has an open boundary chain");
            cur = it->second;
        }
        loops.push_back(std::move(loop));
    }
    if (loops.size() != 1)
        throw SplitError("zero level set has " + std::to_string(loops.size()) + " loops on the " + side + " side");
    if (chi != 1) throw SplitError(std::string(side) + " side is not a topological disk (chi=" + std::to_string(chi) + ")");
    int components = 0;
    component_labels(patch.mesh, &components);
    if (components != 1) throw SplitError(std::string(side) + " side is disconnected");

    patch.boundary = std::move(loops.front());
    for (int b : patch.boundary)
        if (patch.cut_id[b] < 0) throw SplitError(std::string(side) + " boundary contains a non-cut vertex");
    return patch;
}

// Harmonic map of a disk patch with prescribed boundary positions.
std::vector<Vec2> harmonic_disk(const DiskPatch& patch, const std::vector<Vec2>& boundary_uv_by_cut)
{
    const auto n = static_cast<int>(patch.mesh.vertices.size());
    const SparseMatrix stiffness = cotangent_laplacian(patch.mesh).stiffness;

    std::vector<int> index(n, -1);
    int interior = 0;
    for (int v = 0; v < n; ++v)
        if (patch.cut_id[v] < 0) index[v] = interior++;

    std::vector<Vec2> uv(n, Vec2::Zero());
    for (int v = 0; v < n; ++v)
        if (patch.cut_id[v] >= 0) uv[v] = boundary_uv_by_cut[patch.cut_id[v]];
    if (interior == 0) return uv;

    std::vector<Eigen::Triplet<double>> triplets;
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(interior, 2);
    for (int col = 0; col < stiffness.outerSize(); ++col)
        for (SparseMatrix::InnerIterator it(stiffness, col); it; ++it) {
            const int r = static_cast<int>(it.row()), c = static_cast<int>(it.col());
            if (index[r] < 0) continue;
            if (index[c] >= 0) triplets.emplace_back(index[r], index[c], it.value());
            else rhs.row(index[r]) -= it.value() * uv[c].transpose();
        }
    SparseMatrix a(interior, interior);
    a.setFromTriplets(triplets.begin(), triplets.end());
    Eigen::SimplicialLDLT<SparseMatrix> solver(a);
    if (solver.info() != Eigen::Success) throw ParamError("disk flattening system is singular");
    const Eigen::MatrixXd sol = solver.solve(rhs);
    for (int v = 0; v < n; ++v)
        if (index[v] >= 0) uv[v] = sol.row(index[v]).transpose();
    return uv;
}

Vec3 lift_north(const Vec2& w)
{
    const double r2 = w.squaredNorm();
    return Vec3(2.0 * w.x(), 2.0 * w.y(), 1.0 - r2) / (1.0 + r2);
}

Vec3 lift_south(const Vec2& w)
{
    const double r2 = w.squaredNorm();
    return Vec3(2.0 * w.x(), 2.0 * w.y(), r2 - 1.0) / (1.0 + r2);
}

std::vector<Vec3> welded_map(const TriangleMesh& mesh, const ZeroLevelSplit& split)
{
    // Cut angles by arc length along the north boundary (interior on the left).
    const auto& nb = split.north.boundary;
    std::vector<double> cumulative(nb.size() + 1, 0.0);
    for (std::size_t k = 0; k < nb.size(); ++k) {
        const Vec3& a = split.north.mesh.vertices[nb[k]];
        const Vec3& b = split.north.mesh.vertices[nb[(k + 1) % nb.size()]];
        cumulative[k + 1] = cumulative[k] + (b - a).norm();
    }
    std::vector<Vec2> boundary_uv(split.cut_points.size(), Vec2::Zero());
    for (std::size_t k = 0; k < nb.size(); ++k) {
        const double theta = 2.0 * std::numbers::pi * cumulative[k] / cumulative.back();
        boundary_uv[split.north.cut_id[nb[k]]] = Vec2(std::cos(theta), std::sin(theta));
    }

    const std::vector<Vec2> north_uv = harmonic_disk(split.north, boundary_uv);
    const std::vector<Vec2> south_uv = harmonic_disk(split.south, boundary_uv);

    std::vector<Vec3> positions(mesh.vertices.size(), Vec3::Zero());
    for (std::size_t v = 0; v < north_uv.size(); ++v)
        if (split.north.source[v] >= 0) positions[split.north.source[v]] = lift_north(north_uv[v]);
    // The south side winds the shared boundary the other way; reflecting
    // through the equator restores the orientation.
    for (std::size_t v = 0; v < south_uv.size(); ++v)
        if (split.south.source[v] >= 0 && split.south.cut_id[v] < 0)
            positions[split.south.source[v]] = lift_south(south_uv[v]);
    return positions;
}

// Beltrami coefficient of the map from planar coordinates to the surface.
std::vector<std::complex<double>> beltrami_coefficients(const TriangleMesh& mesh, const std::vector<Vec2>& plane)
{
    std::vector<std::complex<double>> mu(mesh.faces.size());
    for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
        const Face& t = mesh.faces[f];
        const Vec2 e1 = plane[t[2]] - plane[t[1]];
        const Vec2 e2 = plane[t[0]] - plane[t[2]];
        const Vec2 e3 = plane[t[1]] - plane[t[0]];
        const double twice_area = e1.x() * e2.y() - e2.x() * e1.y();
        if (std::abs(twice_area) < 1e-300) {
            mu[f] = 0.0;
            continue;
        }
        const Vec3 du = (e1.y() * mesh.vertices[t[0]] + e2.y() * mesh.vertices[t[1]] + e3.y() * mesh.vertices[t[2]]) /
                        twice_area;
        const Vec3 dv = -(e1.x() * mesh.vertices[t[0]] + e2.x() * mesh.vertices[t[1]] + e3.x() * mesh.vertices[t[2]]) /
                        twice_area;
        const double e = du.squaredNorm(), g = dv.squaredNorm(), fe = du.dot(dv);
        const double root = std::sqrt(std::max(0.0, e * g - fe * fe));
        std::complex<double> m = std::complex<double>(e - g, 2.0 * fe) / (e + g + 2.0 * root);
        if (std::abs(m) > 0.999) m *= 0.999 / std::abs(m);
        mu[f] = m;
    }
    return mu;
}

// One Beltrami correction sweep: stereographic projection from `pole`,
// pin the vertices nearest the pole, and re-solve the rest so the
// composite map has zero Beltrami coefficient.
std::vector<Vec3> beltrami_sweep(const TriangleMesh& mesh, const std::vector<Vec3>& positions, const Vec3& pole,
                                 double pinned_fraction)
{
    const auto n = static_cast<int>(positions.size());
    const Eigen::Quaterniond to_pole = Eigen::Quaterniond::FromTwoVectors(pole, Vec3::UnitZ());
    const Eigen::Matrix3d rot = to_pole.toRotationMatrix();

    std::vector<Vec3> rotated(n);
    std::vector<Vec2> plane(n);
    for (int v = 0; v < n; ++v) {
        rotated[v] = rot * positions[v];
        const double denom = std::max(1.0 - rotated[v].z(), 1e-12);
        plane[v] = Vec2(rotated[v].x(), rotated[v].y()) / denom;
    }

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return rotated[a].z() > rotated[b].z(); });
    const int pinned = std::clamp(static_cast<int>(std::ceil(pinned_fraction * n)), 3, n - 1);
    std::vector<int> index(n, -1);
    std::vector<char> is_pinned(n, 0);
    for (int k = 0; k < pinned; ++k) is_pinned[order[k]] = 1;
    int unknowns = 0;
    for (int v = 0; v < n; ++v)
        if (!is_pinned[v]) index[v] = unknowns++;

    const auto mu = beltrami_coefficients(mesh, plane);
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(mesh.faces.size() * 9);
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(unknowns, 2);
    for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
        const Face& t = mesh.faces[f];
        const std::complex<double> m = mu[f];
        const double m2 = std::norm(m);
        const double af = (1.0 - 2.0 * m.real() + m2) / (1.0 - m2);
        const double bf = -2.0 * m.imag() / (1.0 - m2);
        const double gf = (1.0 + 2.0 * m.real() + m2) / (1.0 - m2);

        // Rotated edge vectors opposite each corner.
        std::array<Vec2, 3> r;
        for (int k = 0; k < 3; ++k) {
            const Vec2& a = plane[t[(k + 1) % 3]];
            const Vec2& b = plane[t[(k + 2) % 3]];
            r[k] = Vec2(a.y() - b.y(), b.x() - a.x());
        }
        const double l0 = r[0].norm(), l1 = r[1].norm(), l2 = r[2].norm();
        const double s = 0.5 * (l0 + l1 + l2);
        const double area = std::sqrt(std::max(0.0, s * (s - l0) * (s - l1) * (s - l2)));
        if (!(area > 1e-300)) continue;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                const double w = (af * r[i].x() * r[j].x() + bf * (r[i].x() * r[j].y() + r[j].x() * r[i].y()) +
                                  gf * r[i].y() * r[j].y()) /
                                 (2.0 * area);
                const int vi = t[i], vj = t[j];
                if (index[vi] < 0) continue;
                if (index[vj] >= 0) triplets.emplace_back(index[vi], index[vj], w);
                else rhs.row(index[vi]) -= w * plane[vj].transpose();
            }
    }
    SparseMatrix a(unknowns, unknowns);
    a.setFromTriplets(triplets.begin(), triplets.end());
    Eigen::SimplicialLDLT<SparseMatrix> solver(a);
    if (solver.info() != Eigen::Success) return positions;
    const Eigen::MatrixXd sol = solver.solve(rhs);
    if (!sol.allFinite()) return positions;

    const Eigen::Matrix3d back = rot.transpose();
    std::vector<Vec3> out(n);
    for (int v = 0; v < n; ++v) {
        if (is_pinned[v]) {
            out[v] = positions[v];
            continue;
        }
        const Vec2 w = sol.row(index[v]).transpose();
        const double r2 = w.squaredNorm();
        const Vec3 q(2.0 * w.x() / (1.0 + r2), 2.0 * w.y() / (1.0 + r2), (r2 - 1.0) / (r2 + 1.0));
        out[v] = (back * q).normalized();
    }
    return out;
}

// Direction of the face barycenter lying closest to `direction`.
Vec3 face_pole(const TriangleMesh& mesh, const std::vector<Vec3>& positions, const Vec3& direction)
{
    double best = -std::numeric_limits<double>::infinity();
    Vec3 pole = direction;
    for (const Face& t : mesh.faces) {
        const Vec3 c = (positions[t[0]] + positions[t[1]] + positions[t[2]]).normalized();
        const double score = c.dot(direction);
        if (score > best) {
            best = score;
            pole = c;
        }
    }
    return pole;
}

void repair_flips(const TriangleMesh& mesh, std::vector<Vec3>& positions, int passes)
{
    const auto adjacency = vertex_adjacency(mesh);
    for (int pass = 0; pass < passes; ++pass) {
        std::vector<int> touched;
        for (const Face& t : mesh.faces) {
            const Vec3& a = positions[t[0]];
            const Vec3& b = positions[t[1]];
            const Vec3& c = positions[t[2]];
            if ((b - a).cross(c - a).dot(a + b + c) > 0.0) continue;
            for (int v : t) {
                touched.push_back(v);
                touched.insert(touched.end(), adjacency[v].begin(), adjacency[v].end());
            }
        }
        if (touched.empty()) return;
        std::sort(touched.begin(), touched.end());
        touched.erase(std::unique(touched.begin(), touched.end()), touched.end());
        for (int v : touched) {
            Vec3 avg = Vec3::Zero();
            for (int w : adjacency[v]) avg += positions[w];
            if (avg.norm() > 1e-12) positions[v] = avg.normalized();
        }
    }
}

} // namespace

// ------------------------------------------------------------------ Fiedler

FiedlerResult fiedler_field(const TriangleMesh& mesh, const EigenOptions& options)
{
    return fiedler_field(mesh, cotangent_laplacian(mesh), options);
}

FiedlerResult fiedler_field(const TriangleMesh& mesh, const Laplacian& laplacian, const EigenOptions& options)
{
    const auto n = static_cast<Eigen::Index>(mesh.vertices.size());
    if (n < 4) throw ConvergenceError("mesh too small for an eigen-decomposition");
    const SparseMatrix& s = laplacian.stiffness;
    const Eigen::VectorXd& mass = laplacian.mass;

    const double shift = 1e-6 * s.diagonal().sum() / mass.sum();
    SparseMatrix shifted = s;
    for (Eigen::Index i = 0; i < n; ++i) shifted.coeffRef(i, i) += shift * mass[i];
    Eigen::SimplicialLDLT<SparseMatrix> solver(shifted);
    if (solver.info() != Eigen::Success) throw ConvergenceError("shifted Laplacian factorization failed");

    const Eigen::Index p = std::min<Eigen::Index>(options.block_size, n - 1);
    Eigen::MatrixXd x = start_block(n, p);
    constexpr double cluster_tolerance = 1e-6;

    FiedlerResult result;
    for (int iter = 1; iter <= options.max_iterations; ++iter) {
        deflate_constants(x, mass);
        mass_orthonormalize(x, mass);

        // Rayleigh-Ritz on the block.
        const Eigen::MatrixXd sx = s * x;
        Eigen::MatrixXd k = x.transpose() * sx;
        k = 0.5 * (k + k.transpose()).eval();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ritz(k);
        x = x * ritz.eigenvectors();
        const Eigen::VectorXd theta = ritz.eigenvalues();

        Eigen::Index cluster = 1;
        while (cluster < p && std::abs(theta[cluster] - theta[0]) <= cluster_tolerance * std::abs(theta[0])) ++cluster;

        Eigen::VectorXd f;
        if (cluster == 1) {
            f = x.col(0);
        } else {
            // Canonical member: peak at the first vertex the eigenspace sees.
            const Eigen::MatrixXd c = x.leftCols(cluster);
            const double max_row = c.rowwise().norm().maxCoeff();
            Eigen::Index anchor = 0;
            while (anchor < n && c.row(anchor).norm() <= 1e-3 * max_row) ++anchor;
            f = c * c.row(anchor).transpose();
            f /= std::sqrt(f.cwiseProduct(mass).dot(f));
        }
        const double lambda = f.dot(s * f) / f.cwiseProduct(mass).dot(f);
        const double res = residual_norm(s, mass, f, lambda);

        result.iterations = iter;
        result.residual = res;
        result.eigenvalue = lambda;
        result.multiplicity = static_cast<int>(cluster);
        if (res < options.tolerance) {
            Eigen::Index peak = 0;
            for (Eigen::Index i = 1; i < n; ++i)
                if (std::abs(f[i]) > std::abs(f[peak])) peak = i;
            if (f[peak] < 0.0) f = -f;
            result.field.values.assign(f.data(), f.data() + n);
            return result;
        }
        const Eigen::MatrixXd rhs = mass.asDiagonal() * x;
        x = solver.solve(rhs);
    }
    throw ConvergenceError("Fiedler eigenvector did not converge (residual " + std::to_string(result.residual) + ")");
}

// ---------------------------------------------------------------- splitting

ZeroLevelSplit zero_level_split(const TriangleMesh& mesh, const ScalarField& field)
{
    const auto n = static_cast<int>(mesh.vertices.size());
    if (field.size() != mesh.vertices.size()) throw SplitError("field length does not match vertex count");
    const std::vector<double>& f = field.values;
    const bool has_pos = std::any_of(f.begin(), f.end(), [](double x) { return x > 0.0; });
    const bool has_neg = std::any_of(f.begin(), f.end(), [](double x) { return x < 0.0; });
    if (!has_pos || !has_neg) throw SplitError("field does not change sign");

    // sign: +1 / -1, 0 once snapped onto the cut.
    std::vector<int> sign(n);
    for (int v = 0; v < n; ++v) sign[v] = f[v] >= 0.0 ? 1 : -1;

    constexpr double snap = 0.1;
    // Crossings that survive snapping stay this far from both edge ends.
    constexpr double kMinCutFraction = 0.05;
    const auto faces_of = vertex_faces(mesh);
    const auto adjacency = vertex_adjacency(mesh);
    for (int v = 0; v < n; ++v) {
        bool close = false;
        for (int w : adjacency[v]) {
            if (sign[w] == 0) {
                close = false;
                break;
            }
            if (sign[w] != sign[v] && std::abs(f[v]) < snap * (std::abs(f[v]) + std::abs(f[w]))) close = true;
        }
        if (!close) continue;
        const std::vector<int> ring = ordered_ring(mesh, faces_of[v], v);
        int changes = 0;
        for (std::size_t k = 0; k < ring.size(); ++k)
            if (sign[ring[k]] != sign[ring[(k + 1) % ring.size()]]) ++changes;
        if (changes == 2) sign[v] = 0;
    }

    ZeroLevelSplit split;
    std::unordered_map<std::uint64_t, int> edge_cut;
    std::vector<int> vertex_cut(n, -1);
    for (int v = 0; v < n; ++v)
        if (sign[v] == 0) {
            vertex_cut[v] = static_cast<int>(split.cut_points.size());
            split.cut_points.push_back(mesh.vertices[v]);
            split.cut_source.push_back(v);
        }
    auto cut_on_edge = [&](int a, int b) {
        auto [it, inserted] = edge_cut.try_emplace(detail::edge_key(a, b), 0);
        if (inserted) {
            it->second = static_cast<int>(split.cut_points.size());
            const double t = std::clamp(f[a] / (f[a] - f[b]), kMinCutFraction, 1.0 - kMinCutFraction);
            split.cut_points.push_back(mesh.vertices[a] + t * (mesh.vertices[b] - mesh.vertices[a]));
            split.cut_source.push_back(-1);
        }
        return n + it->second;
    };
    auto node = [&](int v) { return sign[v] == 0 ? n + vertex_cut[v] : v; };

    std::vector<std::array<int, 3>> north, south;
    auto emit = [&](int side, std::array<int, 3> tri) { (side > 0 ? north : south).push_back(tri); };
    for (const Face& t : mesh.faces) {
        const int s0 = sign[t[0]], s1 = sign[t[1]], s2 = sign[t[2]];
        const bool pos = s0 > 0 || s1 > 0 || s2 > 0;
        const bool neg = s0 < 0 || s1 < 0 || s2 < 0;
        if (!pos && !neg) throw SplitError("triangle lies entirely on the zero level set");
        if (!neg || !pos) {
            emit(pos ? 1 : -1, {node(t[0]), node(t[1]), node(t[2])});
            continue;
        }
        // Rotate so that corner 0 is the odd one out (the zero, or the lone sign).
        int r = 0;
        for (int k = 0; k < 3; ++k) {
            const int sk = sign[t[k]], sa = sign[t[(k + 1) % 3]], sb = sign[t[(k + 2) % 3]];
            if (sk == 0 || (sa == sb && sk != sa)) {
                r = k;
                break;
            }
        }
        const int a = t[r], b = t[(r + 1) % 3], c = t[(r + 2) % 3];
        if (sign[a] == 0) {
            const int m = cut_on_edge(b, c);
            emit(sign[b], {node(a), b, m});
            emit(sign[c], {node(a), m, c});
        } else {
            const int m1 = cut_on_edge(a, b);
            const int m2 = cut_on_edge(a, c);
            emit(sign[a], {a, m1, m2});
            const Vec3& pb = mesh.vertices[b];
            const Vec3& pc = mesh.vertices[c];
            const Vec3& q1 = split.cut_points[m1 - n];
            const Vec3& q2 = split.cut_points[m2 - n];
            if ((q1 - pc).squaredNorm() <= (q2 - pb).squaredNorm()) {
                emit(sign[b], {m1, b, c});
                emit(sign[b], {m1, c, m2});
            } else {
                emit(sign[b], {m1, b, m2});
                emit(sign[b], {b, c, m2});
            }
        }
    }

    split.north = build_patch(north, n, mesh, split.cut_points, split.cut_source, "positive");
    split.south = build_patch(south, n, mesh, split.cut_points, split.cut_source, "negative");
    if (split.north.boundary.size() != split.cut_points.size() || split.south.boundary.size() != split.cut_points.size())
        throw SplitError("cut vertices are not all on the shared boundary");

    std::vector<Vec3> loop;
    for (int v : split.north.boundary) loop.push_back(split.north.mesh.vertices[v]);
    split.cut_loops.push_back(std::move(loop));
    return split;
}

// ---------------------------------------------------------------- Mobius

std::vector<double> barycentric_vertex_areas(const TriangleMesh& mesh)
{
    std::vector<double> w(mesh.vertices.size(), 0.0);
    for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
        const double a = face_area(mesh, f) / 3.0;
        for (int v : mesh.faces[f]) w[v] += a;
    }
    return w;
}

Vec3 weighted_centroid(std::span<const Vec3> positions, std::span<const double> weights)
{
    Vec3 c = Vec3::Zero();
    double total = 0.0;
    for (std::size_t i = 0; i < positions.size(); ++i) {
        c += weights[i] * positions[i];
        total += weights[i];
    }
    return total > 0.0 ? Vec3(c / total) : c;
}

Vec3 mobius_push(const Vec3& x, const Vec3& a)
{
    const double a2 = a.squaredNorm();
    const Vec3 d = x - a;
    const Vec3 num = (1.0 - a2) * d - d.squaredNorm() * a;
    const double den = 1.0 - 2.0 * a.dot(x) + a2 * x.squaredNorm();
    return (num / den).normalized();
}

std::vector<Vec3> mobius_push(std::span<const Vec3> xs, const Vec3& a)
{
    std::vector<Vec3> out;
    out.reserve(xs.size());
    for (const auto& x : xs) out.push_back(mobius_push(x, a));
    return out;
}

SphericalMap mobius_center(const SphericalMap& map, const TriangleMesh& mesh, const CenteringOptions& options)
{
    const std::vector<double> w = barycentric_vertex_areas(mesh);
    double total = 0.0;
    for (double x : w) total += x;

    SphericalMap out = map;
    std::vector<Vec3>& x = out.positions;
    Vec3 c = weighted_centroid(x, w);
    for (int iter = 0; iter < options.max_iterations; ++iter) {
        if (c.norm() < options.tolerance) return out;

        Eigen::Matrix3d d = Eigen::Matrix3d::Zero();
        for (std::size_t i = 0; i < x.size(); ++i)
            d += w[i] * (Eigen::Matrix3d::Identity() - x[i] * x[i].transpose());
        d *= 2.0 / total;
        const Vec3 full = d.ldlt().solve(c);

        double step = 1.0;
        bool accepted = false;
        while (step > 1e-12) {
            Vec3 a = step * full;
            if (a.norm() > 0.9) a *= 0.9 / a.norm();
            std::vector<Vec3> y = mobius_push(x, a);
            const Vec3 cy = weighted_centroid(y, w);
            if (cy.norm() < c.norm()) {
                x = std::move(y);
                c = cy;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;
    }
    if (c.norm() < options.tolerance) return out;
    throw ConvergenceError("Mobius centering did not converge (centroid norm " + std::to_string(c.norm()) + ")");
}

// ---------------------------------------------------------------- quality

std::vector<double> angle_distortion(const TriangleMesh& mesh, std::span<const Vec3> image)
{
    std::vector<double> k(mesh.faces.size());
    for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
        const Face& t = mesh.faces[f];
        // Triangle in a local orthonormal frame whose normal agrees with `up`;
        // an image wound against `up` gets a negative determinant.
        auto frame = [](const Vec3& p0, const Vec3& p1, const Vec3& p2, const Vec3& up) {
            const Vec3 e = p1 - p0, g = p2 - p0;
            Vec3 normal = e.cross(g);
            if (normal.dot(up) < 0.0) normal = -normal;
            const Vec3 e1 = e.normalized();
            const Vec3 e2 = normal.normalized().cross(e1);
            Eigen::Matrix2d m;
            m << e.norm(), g.dot(e1), 0.0, g.dot(e2);
            return m;
        };
        const Vec3 src_normal = (mesh.vertices[t[1]] - mesh.vertices[t[0]]).cross(mesh.vertices[t[2]] - mesh.vertices[t[0]]);
        const Eigen::Matrix2d src = frame(mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]], src_normal);
        const Eigen::Matrix2d img = frame(image[t[0]], image[t[1]], image[t[2]], image[t[0]] + image[t[1]] + image[t[2]]);
        const double det_src = src.determinant();
        if (std::abs(det_src) < 1e-300) {
            k[f] = std::numeric_limits<double>::infinity();
            continue;
        }
        const Eigen::Matrix2d j = img * src.inverse();
        const double sq = j.squaredNorm();
        const double det = std::abs(j.determinant());
        if (det < 1e-300) {
            k[f] = std::numeric_limits<double>::infinity();
            continue;
        }
        const double disc = std::sqrt(std::max(0.0, sq * sq - 4.0 * det * det));
        k[f] = std::max(1.0, (sq + disc) / (2.0 * det));
    }
    return k;
}

std::int64_t count_flipped(const TriangleMesh& mesh, std::span<const Vec3> image)
{
    std::int64_t flipped = 0;
    for (const Face& t : mesh.faces) {
        const Vec3& a = image[t[0]];
        const Vec3& b = image[t[1]];
        const Vec3& c = image[t[2]];
        if ((b - a).cross(c - a).dot(a + b + c) <= 0.0) ++flipped;
    }
    return flipped;
}

ParamQuality measure_quality(const TriangleMesh& mesh, std::span<const Vec3> image)
{
    ParamQuality q;
    std::vector<double> k = angle_distortion(mesh, image);
    if (!k.empty()) {
        q.max_angle_distortion = *std::max_element(k.begin(), k.end());
        q.median_angle_distortion = median_of(std::move(k));
    }
    q.flipped_triangles = count_flipped(mesh, image);
    return q;
}

// ---------------------------------------------------------------- pipeline

SphericalMap sphere_map(const TriangleMesh& mesh, const ParamOptions& options)
{
    const Laplacian laplacian = cotangent_laplacian(mesh);
    const FiedlerResult fiedler = fiedler_field(mesh, laplacian, options.eigen);
    const ZeroLevelSplit split = zero_level_split(mesh, fiedler.field);

    std::vector<Vec3> positions = welded_map(mesh, split);
    ParamQuality best = measure_quality(mesh, positions);

    // Alternate poles; keep a sweep only when it stays flip-free and lowers
    // the median distortion.
    for (int sweep = 0; sweep < options.conformal_sweeps; ++sweep) {
        const Vec3 direction = sweep % 2 == 0 ? Vec3(0, 0, -1) : Vec3(0, 0, 1);
        const Vec3 pole = face_pole(mesh, positions, direction);
        std::vector<Vec3> candidate = beltrami_sweep(mesh, positions, pole, options.pinned_fraction);
        const ParamQuality q = measure_quality(mesh, candidate);
        if (q.flipped_triangles > best.flipped_triangles) break;
        if (q.flipped_triangles == best.flipped_triangles && q.median_angle_distortion >= best.median_angle_distortion)
            break;
        positions = std::move(candidate);
        best = q;
    }

    if (best.flipped_triangles > 0) repair_flips(mesh, positions, options.repair_passes);

    SphericalMap map;
    map.positions = std::move(positions);
    map = mobius_center(map, mesh, options.centering);
    map.quality = measure_quality(mesh, map.positions);
    map.quality.eigen_residual = fiedler.residual;
    if (map.quality.flipped_triangles > options.flip_cap)
        throw ParamError(std::to_string(map.quality.flipped_triangles) + " image triangles remain flipped");
    return map;
}

} // namespace spicula
