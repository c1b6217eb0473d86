#pragma once

#include <span>

#include "spicula/spikes.hpp"

namespace spicula {

struct ScoreSet {
    int n_spikes = 0;
    double s1 = 0.0;
    double s_a = 0.0;
    double s_b = 0.0;
    bool defined = false; // false when there are no spikes
};

// Height-weighted mean of per-spike mean_eps. 0 for an empty list.
double score_s1(std::span<const Spike> spikes);
// sum exp(-omega) * h
double score_sa(std::span<const Spike> spikes);
// sum h cos(omega) / sum h. 0 for an empty list.
double score_sb(std::span<const Spike> spikes);
ScoreSet score_all(std::span<const Spike> spikes);

// Solid angle of a closed loop seen from `apex`, fan-triangulated from the
// loop centroid. Clamped to [0, 4 pi). Throws DegenerateError if the apex
// coincides with a loop point or the loop has fewer than 3 points.
double solid_angle(std::span<const Vec3> loop, const Vec3& apex);
double solid_angle(const Spike& spike);

} // namespace spicula
