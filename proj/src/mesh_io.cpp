#include "spicula/mesh_io.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "spicula/errors.hpp"

namespace spicula {

namespace {

std::string lower(std::string s)
{
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

void fan_triangulate(const std::vector<int>& poly, std::vector<Face>& faces)
{
    if (poly.size() < 3) throw ParseError("polygon with fewer than three vertices");
    for (std::size_t k = 1; k + 1 < poly.size(); ++k) faces.push_back({poly[0], poly[k], poly[k + 1]});
}

void check_indices(const TriangleMesh& mesh)
{
    const auto n = static_cast<int>(mesh.vertices.size());
    for (const Face& f : mesh.faces)
        for (int i : f)
            if (i < 0 || i >= n) throw ParseError("face index " + std::to_string(i) + " out of range");
}

// Next line that is neither empty nor a comment.
bool next_content_line(std::istream& in, std::string& line)
{
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto first = line.find_first_not_of(" \t");
        if (first == std::string::npos || line[first] == '#') continue;
        return true;
    }
    return false;
}

// ---------------------------------------------------------------- PLY

enum class PlyType { Int8, UInt8, Int16, UInt16, Int32, UInt32, Float32, Float64 };

PlyType ply_type(const std::string& name)
{
    static const std::pair<const char*, PlyType> table[] = {
        {"char", PlyType::Int8},     {"int8", PlyType::Int8},      {"uchar", PlyType::UInt8},
        {"uint8", PlyType::UInt8},   {"short", PlyType::Int16},    {"int16", PlyType::Int16},
        {"ushort", PlyType::UInt16}, {"uint16", PlyType::UInt16},  {"int", PlyType::Int32},
        {"int32", PlyType::Int32},   {"uint", PlyType::UInt32},    {"uint32", PlyType::UInt32},
        {"float", PlyType::Float32}, {"float32", PlyType::Float32}, {"double", PlyType::Float64},
        {"float64", PlyType::Float64}};
    for (const auto& [n, t] : table)
        if (name == n) return t;
    throw ParseError("unknown PLY property type '" + name + "'");
}

struct PlyProperty {
    std::string name;
    PlyType type = PlyType::Float32;
    bool is_list = false;
    PlyType count_type = PlyType::UInt8;
};

struct PlyElement {
    std::string name;
    std::size_t count = 0;
    std::vector<PlyProperty> properties;
};

template <typename T>
T read_le(std::istream& in)
{
    unsigned char buf[sizeof(T)];
    if (!in.read(reinterpret_cast<char*>(buf), sizeof(T))) throw ParseError("truncated binary PLY body");
    if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
    T v;
    std::memcpy(&v, buf, sizeof(T));
    return v;
}

double read_binary_value(std::istream& in, PlyType t)
{
    switch (t) {
    case PlyType::Int8: return read_le<std::int8_t>(in);
    case PlyType::UInt8: return read_le<std::uint8_t>(in);
    case PlyType::Int16: return read_le<std::int16_t>(in);
    case PlyType::UInt16: return read_le<std::uint16_t>(in);
    case PlyType::Int32: return read_le<std::int32_t>(in);
    case PlyType::UInt32: return read_le<std::uint32_t>(in);
    case PlyType::Float32: return read_le<float>(in);
    case PlyType::Float64: return read_le<double>(in);
    }
    return 0.0;
}

double read_ascii_value(std::istream& in)
{
    double v;
    if (!(in >> v)) throw ParseError("truncated or malformed ASCII PLY body");
    return v;
}

template <typename T>
void write_le(std::ostream& out, T v)
{
    unsigned char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
    out.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

} // namespace

MeshFormat parse_mesh_format(const std::string& name)
{
    const std::string n = lower(name);
    if (n == "off") return MeshFormat::OFF;
    if (n == "obj") return MeshFormat::OBJ;
    if (n == "ply") return MeshFormat::PLY;
    throw ParseError("unknown mesh format '" + name + "'");
}

std::optional<MeshFormat> format_from_extension(const std::filesystem::path& path)
{
    const std::string ext = lower(path.extension().string());
    if (ext == ".off") return MeshFormat::OFF;
    if (ext == ".obj") return MeshFormat::OBJ;
    if (ext == ".ply") return MeshFormat::PLY;
    return std::nullopt;
}

TriangleMesh parse_off(std::istream& in)
{
    std::string line;
    if (!next_content_line(in, line)) throw ParseError("empty OFF file");
    std::istringstream header(line);
    std::string magic;
    header >> magic;
    if (magic != "OFF") throw ParseError("missing OFF header");

    std::size_t nv = 0, nf = 0, ne = 0;
    if (!(header >> nv)) {
        if (!next_content_line(in, line)) throw ParseError("missing OFF counts");
        header = std::istringstream(line);
        if (!(header >> nv)) throw ParseError("malformed OFF counts");
    }
    if (!(header >> nf >> ne)) throw ParseError("malformed OFF counts");

    TriangleMesh mesh;
    mesh.vertices.reserve(nv);
    for (std::size_t i = 0; i < nv; ++i) {
        if (!next_content_line(in, line)) throw ParseError("OFF file ends inside the vertex list");
        std::istringstream ls(line);
        double x, y, z;
        if (!(ls >> x >> y >> z)) throw ParseError("malformed OFF vertex record");
        mesh.vertices.emplace_back(x, y, z);
    }
    for (std::size_t i = 0; i < nf; ++i) {
        if (!next_content_line(in, line)) throw ParseError("OFF file ends inside the face list");
        std::istringstream ls(line);
        std::size_t k = 0;
        if (!(ls >> k)) throw ParseError("malformed OFF face record");
        std::vector<int> poly(k);
        for (auto& idx : poly)
            if (!(ls >> idx)) throw ParseError("malformed OFF face record");
        fan_triangulate(poly, mesh.faces);
    }
    check_indices(mesh);
    return mesh;
}

TriangleMesh parse_obj(std::istream& in)
{
    TriangleMesh mesh;
    std::string line;
    std::vector<std::vector<int>> polys;
    while (next_content_line(in, line)) {
        std::istringstream ls(line);
        std::string tag;
        ls >> tag;
        if (tag == "v") {
            double x, y, z;
            if (!(ls >> x >> y >> z)) throw ParseError("malformed OBJ vertex record");
            mesh.vertices.emplace_back(x, y, z);
        } else if (tag == "f") {
            std::vector<int> poly;
            std::string tok;
            while (ls >> tok) {
                // v, v/vt, v//vn, v/vt/vn; negative indices count from the end.
                const std::string head = tok.substr(0, tok.find('/'));
                int idx = 0;
                try {
                    std::size_t used = 0;
                    idx = std::stoi(head, &used);
                    if (used != head.size()) throw ParseError("");
                } catch (const std::exception&) {
                    throw ParseError("malformed OBJ face index '" + tok + "'");
                }
                if (idx == 0) throw ParseError("OBJ face index 0 is invalid");
                poly.push_back(idx > 0 ? idx - 1 : static_cast<int>(mesh.vertices.size()) + idx);
            }
            fan_triangulate(poly, mesh.faces);
        }
        // Other records (vt, vn, g, o, s, usemtl, ...) are ignored.
    }
    check_indices(mesh);
    return mesh;
}

TriangleMesh parse_ply(std::istream& in)
{
    std::string line;
    if (!std::getline(in, line) || lower(line.substr(0, 3)) != "ply") throw ParseError("missing PLY magic");

    bool binary = false;
    bool have_format = false;
    std::vector<PlyElement> elements;
    while (true) {
        if (!std::getline(in, line)) throw ParseError("PLY header has no end_header");
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::istringstream ls(line);
        std::string tag;
        ls >> tag;
        if (tag == "end_header") break;
        if (tag == "comment" || tag == "obj_info" || tag.empty()) continue;
        if (tag == "format") {
            std::string fmt;
            ls >> fmt;
            if (fmt == "ascii") binary = false;
            else if (fmt == "binary_little_endian") binary = true;
            else throw ParseError("unsupported PLY format '" + fmt + "'");
            have_format = true;
        } else if (tag == "element") {
            PlyElement e;
            if (!(ls >> e.name >> e.count)) throw ParseError("malformed PLY element line");
            elements.push_back(std::move(e));
        } else if (tag == "property") {
            if (elements.empty()) throw ParseError("PLY property before any element");
            PlyProperty p;
            std::string type;
            ls >> type;
            if (type == "list") {
                std::string count_type, item_type;
                ls >> count_type >> item_type;
                p.is_list = true;
                p.count_type = ply_type(count_type);
                p.type = ply_type(item_type);
            } else {
                p.type = ply_type(type);
            }
            if (!(ls >> p.name)) throw ParseError("PLY property without a name");
            elements.back().properties.push_back(std::move(p));
        } else {
            throw ParseError("unexpected PLY header line '" + line + "'");
        }
    }
    if (!have_format) throw ParseError("PLY header has no format line");

    auto read_value = [&](PlyType t) { return binary ? read_binary_value(in, t) : read_ascii_value(in); };

    TriangleMesh mesh;
    for (const PlyElement& e : elements) {
        const bool is_vertex = e.name == "vertex";
        const bool is_face = e.name == "face";
        int ix = -1, iy = -1, iz = -1, ifaces = -1;
        for (std::size_t k = 0; k < e.properties.size(); ++k) {
            const auto& name = e.properties[k].name;
            if (name == "x") ix = static_cast<int>(k);
            if (name == "y") iy = static_cast<int>(k);
            if (name == "z") iz = static_cast<int>(k);
            if (e.properties[k].is_list && (name == "vertex_indices" || name == "vertex_index"))
                ifaces = static_cast<int>(k);
        }
        if (is_vertex && (ix < 0 || iy < 0 || iz < 0)) throw ParseError("PLY vertex element lacks x/y/z");
        if (is_face && ifaces < 0) throw ParseError("PLY face element lacks vertex_indices");

        std::vector<int> poly;
        for (std::size_t i = 0; i < e.count; ++i) {
            Vec3 p = Vec3::Zero();
            for (std::size_t k = 0; k < e.properties.size(); ++k) {
                const PlyProperty& prop = e.properties[k];
                if (prop.is_list) {
                    const double cnt = read_value(prop.count_type);
                    if (cnt < 0 || cnt > 1e6) throw ParseError("implausible PLY list length");
                    const auto n = static_cast<std::size_t>(cnt);
                    if (is_face && static_cast<int>(k) == ifaces) {
                        poly.resize(n);
                        for (auto& idx : poly) idx = static_cast<int>(read_value(prop.type));
                        fan_triangulate(poly, mesh.faces);
                    } else {
                        for (std::size_t j = 0; j < n; ++j) read_value(prop.type);
                    }
                } else {
                    const double v = read_value(prop.type);
                    if (is_vertex) {
                        if (static_cast<int>(k) == ix) p.x() = v;
                        if (static_cast<int>(k) == iy) p.y() = v;
                        if (static_cast<int>(k) == iz) p.z() = v;
                    }
                }
            }
            if (is_vertex) mesh.vertices.push_back(p);
        }
    }
    check_indices(mesh);
    return mesh;
}

TriangleMesh load_mesh(const std::filesystem::path& path, const LoadOptions& options)
{
    std::optional<MeshFormat> format = options.format ? options.format : format_from_extension(path);
    if (!format) throw ParseError("cannot infer mesh format from '" + path.string() + "'");

    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open '" + path.string() + "'");

    TriangleMesh mesh;
    switch (*format) {
    case MeshFormat::OFF: mesh = parse_off(in); break;
    case MeshFormat::OBJ: mesh = parse_obj(in); break;
    case MeshFormat::PLY: mesh = parse_ply(in); break;
    }
    if (options.largest_component) mesh = largest_component(mesh);
    if (options.validate) require_genus_zero(mesh);
    return mesh;
}

void save_mesh(const std::filesystem::path& path, const TriangleMesh& mesh, MeshFormat format,
               const VertexChannels& channels)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot write '" + path.string() + "'");

    const std::size_t nv = mesh.vertices.size();
    switch (format) {
    case MeshFormat::OFF: {
        out << "OFF\n" << nv << ' ' << mesh.faces.size() << " 0\n" << std::setprecision(17);
        for (const auto& v : mesh.vertices) out << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
        for (const auto& f : mesh.faces) out << "3 " << f[0] << ' ' << f[1] << ' ' << f[2] << '\n';
        break;
    }
    case MeshFormat::OBJ: {
        out << std::setprecision(17);
        for (const auto& v : mesh.vertices) out << "v " << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
        for (const auto& f : mesh.faces) out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
        break;
    }
    case MeshFormat::PLY: {
        const bool quality = channels.quality.size() == nv && nv > 0;
        const bool spike = channels.spike_id.size() == nv && nv > 0;
        out << "ply\nformat binary_little_endian 1.0\n"
            << "element vertex " << nv << "\n"
            << "property double x\nproperty double y\nproperty double z\n";
        if (quality) out << "property float quality\n";
        if (spike) out << "property int spike_id\n";
        out << "element face " << mesh.faces.size() << "\n"
            << "property list uchar int vertex_indices\nend_header\n";
        for (std::size_t i = 0; i < nv; ++i) {
            write_le(out, mesh.vertices[i].x());
            write_le(out, mesh.vertices[i].y());
            write_le(out, mesh.vertices[i].z());
            if (quality) write_le(out, channels.quality[i]);
            if (spike) write_le(out, static_cast<std::int32_t>(channels.spike_id[i]));
        }
        for (const auto& f : mesh.faces) {
            write_le(out, static_cast<std::uint8_t>(3));
            for (int idx : f) write_le(out, static_cast<std::int32_t>(idx));
        }
        break;
    }
    }
    if (!out) throw ParseError("failed while writing '" + path.string() + "'");
}

} // namespace spicula
