#pragma once

#include <vector>

#include "spicula/mesh.hpp"
#include "spicula/spherical_param.hpp"

namespace spicula {

// Closed contour of the distortion field at one level. Points sit on mesh
// edges and are expressed in original millimeters.
struct LevelLoop {
    double level = 0.0;
    std::vector<Vec3> points; // first point not repeated
    Vec3 centroid = Vec3::Zero();
    int spike_id = -1;
};

struct Spike {
    int id = 0;
    int apex_vertex = -1;
    Vec3 apex_point = Vec3::Zero(); // mm
    double apex_eps = 0.0;
    std::vector<int> member_vertices; // ascending
    LevelLoop baseline;
    std::vector<LevelLoop> loops; // baseline first, then descending levels
    double height = 0.0;          // mm
    double width = 0.0;           // mm
    double mean_eps = 0.0;
    double solid_angle = 0.0;     // sr
};

struct DetectParams {
    int levels_per_spike = 10;
    double min_height = 1.0;     // mm
    double min_depth = 0.1;      // minimum |apex_eps|
    int min_member_vertices = 5;
};

// Positions of a rescaled mesh mapped back to the original millimeter frame
// (scaling by unit_scale about the vertex centroid, which rescaling fixes).
std::vector<Vec3> original_positions(const TriangleMesh& mesh);

// Closed zero crossings of `eps` that border a negative region, one per
// connected contour.
std::vector<LevelLoop> baselines(const TriangleMesh& mesh, const ScalarField& eps);

// Sub-level-set merge-tree sweep of eps from 0 downward. Every branch of the
// join tree that survives the filters becomes a spike; members partition the
// negative vertices, vertices at a merge go to the deeper branch. IDs follow
// apex_eps ascending.
std::vector<Spike> detect_spikes(const TriangleMesh& mesh, const ScalarField& eps, const DetectParams& params = {});

// Sum of distances between successive loop centroids plus the distance from
// the last centroid to the apex.
double spike_height(const Spike& spike);
// Largest distance between two baseline points.
double spike_width(const Spike& spike);

} // namespace spicula
