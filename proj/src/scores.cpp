#include "spicula/scores.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "spicula/errors.hpp"

namespace spicula {

namespace {

std::vector<const Spike*> by_id(std::span<const Spike> spikes)
{
    std::vector<const Spike*> out;
    out.reserve(spikes.size());
    for (const Spike& s : spikes) out.push_back(&s);
    std::stable_sort(out.begin(), out.end(), [](const Spike* a, const Spike* b) { return a->id < b->id; });
    return out;
}

// Signed solid angle of triangle (a, b, c) seen from the origin.
double triangle_solid_angle(const Vec3& a, const Vec3& b, const Vec3& c)
{
    const double la = a.norm(), lb = b.norm(), lc = c.norm();
    const double numerator = a.dot(b.cross(c));
    const double denominator = la * lb * lc + a.dot(b) * lc + a.dot(c) * lb + b.dot(c) * la;
    return 2.0 * std::atan2(numerator, denominator);
}

} // namespace

double score_s1(std::span<const Spike> spikes)
{
    double weighted = 0.0, total = 0.0;
    for (const Spike* s : by_id(spikes)) {
        weighted += s->mean_eps * s->height;
        total += s->height;
    }
    return total > 0.0 ? weighted / total : 0.0;
}

double score_sa(std::span<const Spike> spikes)
{
    double sum = 0.0;
    for (const Spike* s : by_id(spikes)) sum += std::exp(-s->solid_angle) * s->height;
    return sum;
}

double score_sb(std::span<const Spike> spikes)
{
    double weighted = 0.0, total = 0.0;
    for (const Spike* s : by_id(spikes)) {
        weighted += s->height * std::cos(s->solid_angle);
        total += s->height;
    }
    return total > 0.0 ? weighted / total : 0.0;
}

ScoreSet score_all(std::span<const Spike> spikes)
{
    ScoreSet scores;
    scores.n_spikes = static_cast<int>(spikes.size());
    scores.defined = !spikes.empty();
    if (!scores.defined) return scores;
    scores.s1 = score_s1(spikes);
    scores.s_a = score_sa(spikes);
    scores.s_b = score_sb(spikes);
    return scores;
}

double solid_angle(std::span<const Vec3> loop, const Vec3& apex)
{
    if (loop.size() < 3) throw DegenerateError("solid angle needs a loop of at least 3 points");
    Vec3 centroid = Vec3::Zero();
    for (const Vec3& p : loop) {
        if ((p - apex).norm() <= 1e-12 * (1.0 + apex.norm())) throw DegenerateError("apex lies on the baseline");
        centroid += p;
    }
    centroid /= static_cast<double>(loop.size());

    const Vec3 c = centroid - apex;
    double omega = 0.0;
    for (std::size_t k = 0; k < loop.size(); ++k)
        omega += triangle_solid_angle(c, loop[k] - apex, loop[(k + 1) % loop.size()] - apex);
    omega = std::abs(omega);
    constexpr double full = 4.0 * std::numbers::pi;
    return std::clamp(omega, 0.0, std::nextafter(full, 0.0));
}

double solid_angle(const Spike& spike)
{
    return solid_angle(spike.baseline.points, spike.apex_point);
}

} // namespace spicula
