#pragma once

#include <cmath>
#include <random>

#include "spicula/distortion.hpp"
#include "spicula/mesh.hpp"
#include "spicula/spherical_param.hpp"
#include "spicula/spikes.hpp"
#include "spicula/synthetic.hpp"

namespace testing {

using spicula::TriangleMesh;
using spicula::Vec3;

inline Eigen::Matrix3d random_rotation(std::mt19937_64& rng)
{
    std::normal_distribution<double> n(0.0, 1.0);
    Eigen::Quaterniond q(n(rng), n(rng), n(rng), n(rng));
    q.normalize();
    return q.toRotationMatrix();
}

inline TriangleMesh transformed(const TriangleMesh& mesh, const Eigen::Matrix3d& r, const Vec3& t, double scale = 1.0)
{
    TriangleMesh out = mesh;
    for (Vec3& v : out.vertices) v = scale * (r * v) + t;
    return out;
}

inline TriangleMesh scaled(const TriangleMesh& mesh, double s)
{
    return transformed(mesh, Eigen::Matrix3d::Identity(), Vec3::Zero(), s);
}

inline spicula::TriangleMesh nodule(double height, int count = 4)
{
    spicula::NoduleRecipe r;
    r.spike_height = height;
    r.spike_count = count;
    if (count > 4) r.spike_height = std::min(height, 4.0);
    return spicula::make_nodule(r).mesh;
}

struct Pipeline {
    TriangleMesh unit;
    spicula::SphericalMap map;
    spicula::ScalarField eps;
};

inline Pipeline run_pipeline(const TriangleMesh& mesh, const spicula::ParamOptions& options = {})
{
    Pipeline p;
    p.unit = spicula::rescale_to_area(mesh);
    p.map = spicula::sphere_map(p.unit, options);
    p.eps = spicula::normalize_distortion(spicula::area_distortion(p.unit, p.map), p.unit);
    return p;
}

// Brute-force one-ring distortion straight from the definition.
inline std::vector<double> oracle_eps(const TriangleMesh& mesh, const std::vector<Vec3>& image)
{
    std::vector<double> out;
    for (std::size_t v = 0; v < mesh.vertices.size(); ++v) {
        double src = 0.0, img = 0.0;
        for (const auto& f : mesh.faces) {
            if (f[0] != static_cast<int>(v) && f[1] != static_cast<int>(v) && f[2] != static_cast<int>(v)) continue;
            src += 0.5 * (mesh.vertices[f[1]] - mesh.vertices[f[0]]).cross(mesh.vertices[f[2]] - mesh.vertices[f[0]]).norm();
            img += 0.5 * (image[f[1]] - image[f[0]]).cross(image[f[2]] - image[f[0]]).norm();
        }
        out.push_back(std::log(img / src));
    }
    return out;
}

} // namespace testing
