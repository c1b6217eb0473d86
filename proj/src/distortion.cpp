#include "spicula/distortion.hpp"

#include <cmath>
#include <string>

#include "spicula/errors.hpp"

namespace spicula {

ScalarField area_distortion(const TriangleMesh& mesh, const SphericalMap& map)
{
    const std::size_t n = mesh.vertices.size();
    if (map.positions.size() != n) throw DegenerateError("spherical map does not match the mesh");

    std::vector<double> source(n, 0.0), image(n, 0.0);
    for (const Face& f : mesh.faces) {
        const double a = triangle_area(mesh.vertices[f[0]], mesh.vertices[f[1]], mesh.vertices[f[2]]);
        const double b = triangle_area(map.positions[f[0]], map.positions[f[1]], map.positions[f[2]]);
        for (int v : f) {
            source[v] += a;
            image[v] += b;
        }
    }

    ScalarField eps;
    eps.values.resize(n);
    for (std::size_t v = 0; v < n; ++v) {
        if (source[v] < 1e-14 || image[v] < 1e-14)
            throw DegenerateError("vanishing one-ring area at vertex " + std::to_string(v));
        eps.values[v] = std::log(image[v] / source[v]);
    }
    return eps;
}

ScalarField normalize_distortion(const ScalarField& field, const Eigen::VectorXd& mass)
{
    double weighted = 0.0, total = 0.0;
    for (std::size_t v = 0; v < field.size(); ++v) {
        weighted += mass[static_cast<Eigen::Index>(v)] * field[v];
        total += mass[static_cast<Eigen::Index>(v)];
    }
    const double mean = total > 0.0 ? weighted / total : 0.0;
    ScalarField out;
    out.values.reserve(field.size());
    for (double x : field.values) out.values.push_back(x - mean);
    out.normalized = true;
    return out;
}

ScalarField normalize_distortion(const ScalarField& field, const TriangleMesh& mesh)
{
    return normalize_distortion(field, cotangent_laplacian(mesh).mass);
}

} // namespace spicula
