#include "spicula/features.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "spicula/errors.hpp"

namespace spicula {

std::vector<std::pair<std::string, double>> FeatureVector::named() const
{
    return {{"size_mm", size_mm},
            {"volume_mm3", volume_mm3},
            {"equiv_diameter_mm", equiv_diameter_mm},
            {"roundness_mesh", roundness_mesh},
            {"eps_min", eps_min},
            {"eps_max", eps_max},
            {"eps_mean", eps_mean},
            {"eps_median", eps_median},
            {"eps_variance", eps_variance},
            {"eps_skewness", eps_skewness},
            {"eps_kurtosis", eps_kurtosis},
            {"n_spikes", static_cast<double>(n_spikes)},
            {"s1", s1},
            {"s_a", s_a},
            {"s_b", s_b}};
}

EpsStatistics eps_statistics(const ScalarField& eps)
{
    EpsStatistics st;
    if (eps.values.empty()) return st;
    std::vector<double> v = eps.values;
    const double n = static_cast<double>(v.size());

    double sum = 0.0;
    for (double x : v) sum += x;
    st.mean = sum / n;
    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (double x : v) {
        const double d = x - st.mean;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    double scale = 0.0;
    for (double x : v) scale = std::max(scale, std::abs(x));
    const double floor = 1e-12 * scale;
    if (m2 <= floor * floor) m2 = 0.0;
    st.variance = m2;
    if (m2 > 0.0) {
        st.skewness = m3 / std::pow(m2, 1.5);
        st.kurtosis = m4 / (m2 * m2);
    }

    std::sort(v.begin(), v.end());
    st.min = v.front();
    st.max = v.back();
    const std::size_t mid = v.size() / 2;
    st.median = v.size() % 2 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
    return st;
}

ShapeDescriptors shape_descriptors(const TriangleMesh& mesh)
{
    ShapeDescriptors d;
    d.volume = enclosed_volume(mesh);
    if (!(d.volume > 0.0)) throw DegenerateError("mesh encloses no volume");
    const double area = surface_area(mesh);

    const auto& p = mesh.vertices;
    const std::size_t n = p.size();
    double best = -1.0;
    std::size_t bi = 0, bj = 0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double d2 = (p[i] - p[j]).squaredNorm();
            if (d2 > best) {
                best = d2;
                bi = i;
                bj = j;
            }
        }
    d.longest_diameter = std::sqrt(std::max(best, 0.0));

    if (d.longest_diameter > 0.0) {
        const Vec3 axis = (p[bj] - p[bi]) / d.longest_diameter;
        const double tolerance = std::sin(5.0 * std::numbers::pi / 180.0);
        double perp = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) {
                const Vec3 diff = p[j] - p[i];
                const double len = diff.norm();
                if (len == 0.0) continue;
                const double along = diff.dot(axis);
                if (std::abs(along) > tolerance * len) continue;
                perp = std::max(perp, (diff - along * axis).squaredNorm());
            }
        d.perpendicular_diameter = std::sqrt(perp);
    }
    d.size = 0.5 * (d.longest_diameter + d.perpendicular_diameter);
    d.equiv_diameter = std::cbrt(6.0 * d.volume / std::numbers::pi);
    d.roundness = std::cbrt(std::numbers::pi) * std::pow(6.0 * d.volume, 2.0 / 3.0) / area;
    return d;
}

FeatureVector make_features(const ShapeDescriptors& shape, const EpsStatistics& eps, const ScoreSet& scores)
{
    FeatureVector f;
    f.size_mm = shape.size;
    f.volume_mm3 = shape.volume;
    f.equiv_diameter_mm = shape.equiv_diameter;
    f.roundness_mesh = shape.roundness;
    f.longest_diameter_mm = shape.longest_diameter;
    f.perpendicular_diameter_mm = shape.perpendicular_diameter;
    f.eps_min = eps.min;
    f.eps_max = eps.max;
    f.eps_mean = eps.mean;
    f.eps_median = eps.median;
    f.eps_variance = eps.variance;
    f.eps_skewness = eps.skewness;
    f.eps_kurtosis = eps.kurtosis;
    f.n_spikes = scores.n_spikes;
    f.s1 = scores.s1;
    f.s_a = scores.s_a;
    f.s_b = scores.s_b;
    return f;
}

} // namespace spicula
