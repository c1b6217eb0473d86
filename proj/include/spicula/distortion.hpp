#pragma once

#include "spicula/mesh.hpp"
#include "spicula/spherical_param.hpp"

namespace spicula {

// eps_i = log(sum of image one-ring areas / sum of source one-ring areas).
// Image triangles are the flat triangles spanned by the unit-sphere images.
// Throws DegenerateError if either one-ring area of a vertex is below 1e-14.
ScalarField area_distortion(const TriangleMesh& mesh, const SphericalMap& map);

// Subtracts the mass-weighted mean, using the cotangent Laplacian's lumped
// mass of `mesh`. The result has normalized = true.
ScalarField normalize_distortion(const ScalarField& field, const TriangleMesh& mesh);
ScalarField normalize_distortion(const ScalarField& field, const Eigen::VectorXd& mass);

} // namespace spicula
