#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "spicula/mesh.hpp"

namespace spicula {

enum class MeshFormat { OFF, OBJ, PLY };

// Case-insensitive "off" / "obj" / "ply". Throws ParseError otherwise.
MeshFormat parse_mesh_format(const std::string& name);
// From the file extension; nullopt when unknown.
std::optional<MeshFormat> format_from_extension(const std::filesystem::path& path);

struct LoadOptions {
    std::optional<MeshFormat> format;   // default: inferred from extension
    bool largest_component = false;     // otherwise multiple components throw
    bool validate = true;               // run the genus-zero checks
};

// Polygons are fan-triangulated from their first vertex. Throws ParseError
// on malformed input and TopologyError / DegenerateError when validation fails.
TriangleMesh load_mesh(const std::filesystem::path& path, const LoadOptions& options = {});

// Parses without touching the filesystem; used by load_mesh and the tests.
TriangleMesh parse_off(std::istream& in);
TriangleMesh parse_obj(std::istream& in);
TriangleMesh parse_ply(std::istream& in);

// Optional per-vertex channels written into PLY output.
struct VertexChannels {
    std::vector<float> quality;     // written as "property float quality"
    std::vector<int> spike_id;      // written as "property int spike_id"
};

// PLY output is binary little-endian with double positions; OBJ and OFF are
// ASCII with 17 significant digits. Channels are ignored for OBJ/OFF.
void save_mesh(const std::filesystem::path& path, const TriangleMesh& mesh, MeshFormat format,
               const VertexChannels& channels = {});

} // namespace spicula
