#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "spicula/mesh.hpp"
#include "spicula/scores.hpp"
#include "spicula/spherical_param.hpp"

namespace spicula {

struct FeatureVector {
    double size_mm = 0.0;
    double volume_mm3 = 0.0;
    double equiv_diameter_mm = 0.0;
    double roundness_mesh = 0.0;
    double eps_min = 0.0;
    double eps_max = 0.0;
    double eps_mean = 0.0;
    double eps_median = 0.0;
    double eps_variance = 0.0;
    double eps_skewness = 0.0;
    double eps_kurtosis = 0.0;
    int n_spikes = 0;
    double s1 = 0.0;
    double s_a = 0.0;
    double s_b = 0.0;

    // Extra geometry kept alongside the named features.
    double longest_diameter_mm = 0.0;
    double perpendicular_diameter_mm = 0.0;

    // (name, value) pairs in serialization order; diameters excluded.
    std::vector<std::pair<std::string, double>> named() const;
};

struct EpsStatistics {
    double min = 0.0, max = 0.0, mean = 0.0, median = 0.0;
    double variance = 0.0; // population
    double skewness = 0.0;
    double kurtosis = 0.0; // non-excess; 0 for a constant field
};

struct ShapeDescriptors {
    double longest_diameter = 0.0;
    double perpendicular_diameter = 0.0;
    double size = 0.0;
    double volume = 0.0;
    double equiv_diameter = 0.0;
    double roundness = 0.0;
};

// Unweighted statistics over vertices.
EpsStatistics eps_statistics(const ScalarField& eps);

// Diameters by exhaustive vertex pairs. The perpendicular diameter only
// considers pairs within 5 degrees of orthogonal to the longest axis and is
// measured in the plane orthogonal to that axis. Throws DegenerateError on
// zero volume.
ShapeDescriptors shape_descriptors(const TriangleMesh& mesh);

FeatureVector make_features(const ShapeDescriptors& shape, const EpsStatistics& eps, const ScoreSet& scores);

} // namespace spicula
