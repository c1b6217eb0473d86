#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <vector>

#include "spicula/mesh.hpp"

namespace spicula {

// Binary occupancy grid, x fastest.
struct VoxelMask {
    std::array<int, 3> dims{0, 0, 0};
    std::array<double, 3> spacing{1.0, 1.0, 1.0}; // mm per voxel
    std::vector<std::uint8_t> data;              // 0 background, nonzero foreground

    std::size_t index(int x, int y, int z) const
    {
        return static_cast<std::size_t>(x) +
               static_cast<std::size_t>(dims[0]) * (static_cast<std::size_t>(y) + static_cast<std::size_t>(dims[1]) * z);
    }
    bool at(int x, int y, int z) const { return data[index(x, y, z)] != 0; }
    std::size_t foreground_count() const;
};

// NRRD with uint8 samples, raw encoding, attached or detached data. Spacing
// comes from a diagonal `space directions` or from `spacings`. Throws
// ParseError on anything else.
VoxelMask load_nrrd(const std::filesystem::path& path);
VoxelMask parse_nrrd(std::istream& in, const std::filesystem::path& base_dir = {});
void save_nrrd(const std::filesystem::path& path, const VoxelMask& mask);

// Isosurface of the occupancy field at `iso` (0.5 for a binary mask) with
// linear edge interpolation. Cells are split into six tetrahedra around the
// main diagonal, which makes every case unambiguous and the surface
// watertight. A one-voxel background border is added when the foreground
// touches the grid boundary. Vertices are in millimeters (index * spacing).
// Throws EmptyMaskError without foreground and TopologyError when the
// surface is not a single genus-zero component.
TriangleMesh marching_cubes(const VoxelMask& mask, double iso = 0.5);

// Taubin lambda|mu smoothing with the uniform umbrella operator. Faces are
// untouched; iterations = 0 returns the input unchanged.
TriangleMesh taubin_smooth(const TriangleMesh& mesh, int iterations, double lambda = 0.5, double mu = -0.53);

} // namespace spicula
