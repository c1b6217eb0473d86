#include "spicula/mask.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "spicula/errors.hpp"

namespace spicula {

namespace {

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::string lower(std::string s)
{
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

// "(a,b,c) (d,e,f) (g,h,i)" -> three vectors.
std::array<Vec3, 3> parse_directions(const std::string& value)
{
    std::array<Vec3, 3> dirs;
    std::size_t pos = 0;
    for (int k = 0; k < 3; ++k) {
        const auto open = value.find('(', pos);
        const auto close = value.find(')', open);
        if (open == std::string::npos || close == std::string::npos)
            throw ParseError("NRRD space directions need three vectors");
        std::string inner = value.substr(open + 1, close - open - 1);
        std::replace(inner.begin(), inner.end(), ',', ' ');
        std::istringstream in(inner);
        if (!(in >> dirs[k].x() >> dirs[k].y() >> dirs[k].z())) throw ParseError("bad NRRD space direction");
        pos = close + 1;
    }
    return dirs;
}

// Sample of the padded grid.
struct Grid {
    std::array<int, 3> dims;
    std::array<int, 3> offset; // padded index - offset = mask index
    std::vector<float> values;

    std::size_t index(int x, int y, int z) const
    {
        return static_cast<std::size_t>(x) +
               static_cast<std::size_t>(dims[0]) * (static_cast<std::size_t>(y) + static_cast<std::size_t>(dims[1]) * z);
    }
};

Grid padded_grid(const VoxelMask& mask)
{
    bool touches = false;
    for (int z = 0; z < mask.dims[2] && !touches; ++z)
        for (int y = 0; y < mask.dims[1] && !touches; ++y)
            for (int x = 0; x < mask.dims[0]; ++x) {
                const bool border = x == 0 || y == 0 || z == 0 || x == mask.dims[0] - 1 || y == mask.dims[1] - 1 ||
                                    z == mask.dims[2] - 1;
                if (border && mask.at(x, y, z)) {
                    touches = true;
                    break;
                }
            }
    const int pad = touches ? 1 : 0;
    Grid g;
    g.offset = {pad, pad, pad};
    g.dims = {mask.dims[0] + 2 * pad, mask.dims[1] + 2 * pad, mask.dims[2] + 2 * pad};
    g.values.assign(static_cast<std::size_t>(g.dims[0]) * g.dims[1] * g.dims[2], 0.0f);
    for (int z = 0; z < mask.dims[2]; ++z)
        for (int y = 0; y < mask.dims[1]; ++y)
            for (int x = 0; x < mask.dims[0]; ++x)
                if (mask.at(x, y, z)) g.values[g.index(x + pad, y + pad, z + pad)] = 1.0f;
    return g;
}

} // namespace

std::size_t VoxelMask::foreground_count() const
{
    return static_cast<std::size_t>(std::count_if(data.begin(), data.end(), [](std::uint8_t v) { return v != 0; }));
}

VoxelMask parse_nrrd(std::istream& in, const std::filesystem::path& base_dir)
{
    std::string line;
    if (!std::getline(in, line) || line.rfind("NRRD", 0) != 0) throw ParseError("missing NRRD magic");

    VoxelMask mask;
    bool have_sizes = false, have_spacing = false;
    std::string type, encoding = "raw", data_file;
    int dimension = 0;
    long long skip = 0;
    while (std::getline(in, line)) {
        const std::string t = trim(line);
        if (t.empty()) break;
        if (t[0] == '#') continue;
        if (t.find(":=") != std::string::npos) continue;
        const auto colon = t.find(':');
        if (colon == std::string::npos) throw ParseError("malformed NRRD header line: " + t);
        const std::string key = lower(trim(t.substr(0, colon)));
        const std::string value = trim(t.substr(colon + 1));
        std::istringstream vs(value);
        if (key == "type") {
            type = lower(value);
        } else if (key == "dimension") {
            vs >> dimension;
        } else if (key == "sizes") {
            if (!(vs >> mask.dims[0] >> mask.dims[1] >> mask.dims[2])) throw ParseError("bad NRRD sizes");
            have_sizes = true;
        } else if (key == "encoding") {
            encoding = lower(value);
        } else if (key == "data file" || key == "datafile") {
            data_file = value;
        } else if (key == "byte skip" || key == "byteskip") {
            vs >> skip;
        } else if (key == "space directions") {
            const auto dirs = parse_directions(value);
            for (int a = 0; a < 3; ++a) {
                for (int b = 0; b < 3; ++b)
                    if (a != b && std::abs(dirs[a][b]) > 1e-9 * dirs[a].norm())
                        throw ParseError("only diagonal NRRD space directions are supported");
                mask.spacing[a] = std::abs(dirs[a][a]);
            }
            have_spacing = true;
        } else if (key == "spacings" && !have_spacing) {
            if (!(vs >> mask.spacing[0] >> mask.spacing[1] >> mask.spacing[2])) throw ParseError("bad NRRD spacings");
            have_spacing = true;
        }
    }

    if (type != "uchar" && type != "unsigned char" && type != "uint8" && type != "uint8_t")
        throw ParseError("NRRD type must be uint8, got '" + type + "'");
    if (dimension != 3) throw ParseError("NRRD dimension must be 3");
    if (!have_sizes) throw ParseError("NRRD header lacks sizes");
    if (!have_spacing) throw ParseError("NRRD header lacks spacing");
    if (encoding != "raw") throw ParseError("NRRD encoding must be raw, got '" + encoding + "'");
    for (int a = 0; a < 3; ++a) {
        if (mask.dims[a] < 2) throw ParseError("NRRD sizes must be at least 2");
        if (!(mask.spacing[a] > 0.0) || !std::isfinite(mask.spacing[a])) throw ParseError("NRRD spacing must be positive");
    }

    const std::size_t count = static_cast<std::size_t>(mask.dims[0]) * mask.dims[1] * mask.dims[2];
    mask.data.resize(count);
    auto read_from = [&](std::istream& src) {
        if (skip > 0) src.ignore(skip);
        src.read(reinterpret_cast<char*>(mask.data.data()), static_cast<std::streamsize>(count));
        if (static_cast<std::size_t>(src.gcount()) != count) throw ParseError("NRRD data is truncated");
    };
    if (data_file.empty()) {
        read_from(in);
    } else {
        std::filesystem::path p(data_file);
        if (p.is_relative()) p = base_dir / p;
        std::ifstream raw(p, std::ios::binary);
        if (!raw) throw ParseError("cannot open NRRD data file " + p.string());
        read_from(raw);
    }
    return mask;
}

VoxelMask load_nrrd(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open " + path.string());
    return parse_nrrd(in, path.parent_path());
}

void save_nrrd(const std::filesystem::path& path, const VoxelMask& mask)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot write " + path.string());
    out.precision(17);
    out << "NRRD0004\n"
        << "type: uint8\n"
        << "dimension: 3\n"
        << "sizes: " << mask.dims[0] << ' ' << mask.dims[1] << ' ' << mask.dims[2] << '\n'
        << "space dimension: 3\n"
        << "space directions: (" << mask.spacing[0] << ",0,0) (0," << mask.spacing[1] << ",0) (0,0,"
        << mask.spacing[2] << ")\n"
        << "encoding: raw\n\n";
    out.write(reinterpret_cast<const char*>(mask.data.data()), static_cast<std::streamsize>(mask.data.size()));
}

TriangleMesh marching_cubes(const VoxelMask& mask, double iso)
{
    if (mask.data.size() != static_cast<std::size_t>(mask.dims[0]) * mask.dims[1] * mask.dims[2])
        throw ParseError("mask data does not match its dimensions");
    if (mask.foreground_count() == 0) throw EmptyMaskError("mask has no foreground voxels");

    const Grid g = padded_grid(mask);
    const std::uint64_t total = g.values.size();

    TriangleMesh mesh;
    std::unordered_map<std::uint64_t, int> edge_vertex;
    auto position = [&](std::size_t id) {
        const int x = static_cast<int>(id % g.dims[0]);
        const int y = static_cast<int>((id / g.dims[0]) % g.dims[1]);
        const int z = static_cast<int>(id / (static_cast<std::size_t>(g.dims[0]) * g.dims[1]));
        return Vec3((x - g.offset[0]) * mask.spacing[0], (y - g.offset[1]) * mask.spacing[1],
                    (z - g.offset[2]) * mask.spacing[2]);
    };
    auto vertex_on = [&](std::size_t a, std::size_t b) {
        if (a > b) std::swap(a, b);
        auto [it, inserted] = edge_vertex.try_emplace(a * total + b, 0);
        if (inserted) {
            const double fa = g.values[a], fb = g.values[b];
            const double t = (iso - fa) / (fb - fa);
            it->second = static_cast<int>(mesh.vertices.size());
            mesh.vertices.push_back(position(a) + t * (position(b) - position(a)));
        }
        return it->second;
    };
    auto emit = [&](int p, int q, int r, const Vec3& outward) {
        const Vec3 n = (mesh.vertices[q] - mesh.vertices[p]).cross(mesh.vertices[r] - mesh.vertices[p]);
        if (n.dot(outward) >= 0.0) mesh.faces.push_back({p, q, r});
        else mesh.faces.push_back({p, r, q});
    };

    // Six tetrahedra per cell along paths 0 -> e_i -> e_i + e_j -> 7.
    static constexpr int kPaths[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
    for (int z = 0; z + 1 < g.dims[2]; ++z)
        for (int y = 0; y + 1 < g.dims[1]; ++y)
            for (int x = 0; x + 1 < g.dims[0]; ++x) {
                std::size_t corner[8];
                bool any_in = false, any_out = false;
                for (int c = 0; c < 8; ++c) {
                    corner[c] = g.index(x + (c & 1), y + ((c >> 1) & 1), z + ((c >> 2) & 1));
                    (g.values[corner[c]] > iso ? any_in : any_out) = true;
                }
                if (!any_in || !any_out) continue;
                for (const auto& path : kPaths) {
                    const int c1 = 1 << path[0];
                    const int c2 = c1 | (1 << path[1]);
                    const std::size_t tet[4] = {corner[0], corner[c1], corner[c2], corner[7]};
                    std::size_t in[4], out[4];
                    int ni = 0, no = 0;
                    for (std::size_t v : tet) (g.values[v] > iso ? in[ni++] : out[no++]) = v;
                    if (ni == 0 || no == 0) continue;

                    Vec3 inside = Vec3::Zero(), outside = Vec3::Zero();
                    for (int k = 0; k < ni; ++k) inside += position(in[k]) / ni;
                    for (int k = 0; k < no; ++k) outside += position(out[k]) / no;
                    const Vec3 outward = outside - inside;

                    if (ni == 1) {
                        emit(vertex_on(in[0], out[0]), vertex_on(in[0], out[1]), vertex_on(in[0], out[2]), outward);
                    } else if (no == 1) {
                        emit(vertex_on(out[0], in[0]), vertex_on(out[0], in[1]), vertex_on(out[0], in[2]), outward);
                    } else {
                        const int a = vertex_on(in[0], out[0]);
                        const int b = vertex_on(in[0], out[1]);
                        const int c = vertex_on(in[1], out[1]);
                        const int d = vertex_on(in[1], out[0]);
                        emit(a, b, c, outward);
                        emit(a, c, d, outward);
                    }
                }
            }

    require_genus_zero(mesh);
    return mesh;
}

TriangleMesh taubin_smooth(const TriangleMesh& mesh, int iterations, double lambda, double mu)
{
    TriangleMesh out = mesh;
    if (iterations <= 0) return out;
    const auto adjacency = vertex_adjacency(mesh);
    std::vector<Vec3> next(out.vertices.size());
    auto step = [&](double factor) {
        for (std::size_t v = 0; v < out.vertices.size(); ++v) {
            if (adjacency[v].empty()) {
                next[v] = out.vertices[v];
                continue;
            }
            Vec3 mean = Vec3::Zero();
            for (int w : adjacency[v]) mean += out.vertices[w];
            mean /= static_cast<double>(adjacency[v].size());
            next[v] = out.vertices[v] + factor * (mean - out.vertices[v]);
        }
        out.vertices.swap(next);
    };
    for (int i = 0; i < iterations; ++i) {
        step(lambda);
        step(mu);
    }
    return out;
}

} // namespace spicula
