#include "spicula/spikes.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_map>

#include "edge_key.hpp"
#include "spicula/scores.hpp"

namespace spicula {

namespace {

// Contours of `eps` at `level` separating marked vertices from the rest.
// Marked vertices must all satisfy eps < level and unmarked neighbors of
// marked vertices eps >= level.
std::vector<LevelLoop> contours(const TriangleMesh& mesh, const std::vector<Vec3>& positions,
                                const std::vector<double>& eps, const std::vector<char>& inside, double level)
{
    std::unordered_map<std::uint64_t, std::vector<std::uint64_t>> links;
    for (const Face& f : mesh.faces) {
        std::uint64_t ends[2];
        int count = 0;
        for (int k = 0; k < 3; ++k) {
            const int a = f[k], b = f[(k + 1) % 3];
            if (inside[a] != inside[b] && count < 2) ends[count++] = detail::edge_key(a, b);
        }
        if (count != 2) continue;
        links[ends[0]].push_back(ends[1]);
        links[ends[1]].push_back(ends[0]);
    }

    std::vector<std::uint64_t> keys;
    keys.reserve(links.size());
    for (const auto& [key, unused] : links) keys.push_back(key);
    std::sort(keys.begin(), keys.end());

    auto crossing = [&](std::uint64_t key) {
        auto [a, b] = detail::edge_ends(key);
        if (!inside[a]) std::swap(a, b);
        const double t = std::clamp((level - eps[a]) / (eps[b] - eps[a]), 0.0, 1.0);
        return Vec3(positions[a] + t * (positions[b] - positions[a]));
    };

    std::vector<LevelLoop> loops;
    std::unordered_map<std::uint64_t, bool> used;
    for (std::uint64_t start : keys) {
        if (used[start]) continue;
        LevelLoop loop;
        loop.level = level;
        constexpr std::uint64_t none = ~std::uint64_t{0};
        std::uint64_t prev = none, cur = start;
        do {
            used[cur] = true;
            loop.points.push_back(crossing(cur));
            const auto& next = links[cur];
            std::uint64_t step = next[0];
            if (prev == none) step = *std::min_element(next.begin(), next.end());
            else if (next.size() > 1 && next[0] == prev) step = next[1];
            prev = cur;
            cur = step;
        } while (cur != start && !used[cur]);

        double length = 0.0;
        Vec3 weighted = Vec3::Zero();
        for (std::size_t k = 0; k < loop.points.size(); ++k) {
            const Vec3& p = loop.points[k];
            const Vec3& q = loop.points[(k + 1) % loop.points.size()];
            const double l = (q - p).norm();
            length += l;
            weighted += 0.5 * l * (p + q);
        }
        if (length > 0.0) {
            loop.centroid = weighted / length;
        } else {
            for (const Vec3& p : loop.points) loop.centroid += p;
            loop.centroid /= static_cast<double>(loop.points.size());
        }
        loops.push_back(std::move(loop));
    }
    return loops;
}

double loop_length(const LevelLoop& loop)
{
    double length = 0.0;
    for (std::size_t k = 0; k < loop.points.size(); ++k)
        length += (loop.points[(k + 1) % loop.points.size()] - loop.points[k]).norm();
    return length;
}

// Vertices of the connected component of {eps < level} containing `seed`.
std::vector<char> sublevel_component(const std::vector<std::vector<int>>& adjacency, const std::vector<double>& eps,
                                     int seed, double level)
{
    std::vector<char> inside(eps.size(), 0);
    std::vector<int> stack{seed};
    inside[seed] = 1;
    while (!stack.empty()) {
        const int v = stack.back();
        stack.pop_back();
        for (int w : adjacency[v])
            if (!inside[w] && eps[w] < level) {
                inside[w] = 1;
                stack.push_back(w);
            }
    }
    return inside;
}

// The outermost (longest) contour around the component.
LevelLoop component_loop(const TriangleMesh& mesh, const std::vector<Vec3>& positions, const std::vector<double>& eps,
                         const std::vector<char>& inside, double level)
{
    std::vector<LevelLoop> loops = contours(mesh, positions, eps, inside, level);
    if (loops.empty()) return LevelLoop{level, {}, Vec3::Zero(), -1};
    std::size_t best = 0;
    double best_length = loop_length(loops[0]);
    for (std::size_t k = 1; k < loops.size(); ++k) {
        const double l = loop_length(loops[k]);
        if (l > best_length) {
            best = k;
            best_length = l;
        }
    }
    return std::move(loops[best]);
}

struct Branch {
    int apex = -1;
    std::vector<int> members;
};

} // namespace

std::vector<Vec3> original_positions(const TriangleMesh& mesh)
{
    const Vec3 c = vertex_centroid(mesh);
    std::vector<Vec3> out;
    out.reserve(mesh.vertices.size());
    for (const Vec3& v : mesh.vertices) out.push_back(c + (v - c) * mesh.unit_scale);
    return out;
}

std::vector<LevelLoop> baselines(const TriangleMesh& mesh, const ScalarField& eps)
{
    std::vector<char> inside(eps.size(), 0);
    bool any = false;
    for (std::size_t v = 0; v < eps.size(); ++v)
        if (eps[v] < 0.0) inside[v] = any = true;
    if (!any) return {};
    return contours(mesh, original_positions(mesh), eps.values, inside, 0.0);
}

std::vector<Spike> detect_spikes(const TriangleMesh& mesh, const ScalarField& eps, const DetectParams& params)
{
    const int n = static_cast<int>(mesh.vertices.size());
    const std::vector<double>& e = eps.values;
    const auto adjacency = vertex_adjacency(mesh);
    const std::vector<Vec3> positions = original_positions(mesh);

    std::vector<int> order;
    for (int v = 0; v < n; ++v)
        if (e[v] < 0.0) order.push_back(v);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return e[a] < e[b] || (e[a] == e[b] && a < b); });

    // Join-tree sweep. Branch ids are birth order, so a smaller id is the
    // deeper (elder) minimum.
    std::vector<int> rank(n, -1);
    for (int k = 0; k < static_cast<int>(order.size()); ++k) rank[order[k]] = k;
    detail::DisjointSets sets(n);
    std::vector<int> branch_of_root(n, -1);
    std::vector<Branch> branches;
    // Vertices of equal value are swept together so that a flat plateau is a
    // single component whose apex is its lowest-index vertex.
    std::vector<char> in_group(n, 0);
    for (std::size_t start = 0; start < order.size();) {
        std::size_t end = start;
        while (end < order.size() && e[order[end]] == e[order[start]]) in_group[order[end++]] = 1;
        for (std::size_t k = start; k < end; ++k) {
            if (!in_group[order[k]]) continue;
            std::vector<int> patch{order[k]};
            in_group[order[k]] = 0;
            for (std::size_t i = 0; i < patch.size(); ++i)
                for (int w : adjacency[patch[i]])
                    if (in_group[w]) {
                        in_group[w] = 0;
                        patch.push_back(w);
                    }

            std::vector<int> roots;
            for (int v : patch)
                for (int w : adjacency[v])
                    if (rank[w] >= 0 && rank[w] < static_cast<int>(start)) roots.push_back(sets.find(w));
            std::sort(roots.begin(), roots.end());
            roots.erase(std::unique(roots.begin(), roots.end()), roots.end());

            int branch = static_cast<int>(branches.size());
            int root = patch.front();
            if (roots.empty()) {
                branches.push_back({patch.front(), {}});
            } else {
                root = roots[0];
                for (int r : roots)
                    if (branch_of_root[r] < branch_of_root[root]) root = r;
                branch = branch_of_root[root];
                for (int r : roots) sets.unite_into(root, r);
            }
            for (int v : patch) {
                branches[branch].members.push_back(v);
                sets.unite_into(root, v);
            }
            branch_of_root[root] = branch;
        }
        start = end;
    }

    std::vector<Spike> spikes;
    const int levels = std::max(1, params.levels_per_spike);
    for (Branch& b : branches) {
        const double apex_eps = e[b.apex];
        if (-apex_eps < params.min_depth) continue;
        if (static_cast<int>(b.members.size()) < params.min_member_vertices) continue;

        Spike s;
        s.apex_vertex = b.apex;
        s.apex_point = positions[b.apex];
        s.apex_eps = apex_eps;
        std::sort(b.members.begin(), b.members.end());
        s.member_vertices = std::move(b.members);
        double sum = 0.0;
        for (int v : s.member_vertices) sum += e[v];
        s.mean_eps = sum / static_cast<double>(s.member_vertices.size());

        for (int k = 0; k < levels; ++k) {
            const double level = apex_eps * static_cast<double>(k) / static_cast<double>(levels);
            const std::vector<char> inside = sublevel_component(adjacency, e, s.apex_vertex, level);
            LevelLoop loop = component_loop(mesh, positions, e, inside, level);
            if (loop.points.size() < 3) continue;
            s.loops.push_back(std::move(loop));
        }
        if (s.loops.empty() || s.loops.front().level != 0.0) continue;
        s.baseline = s.loops.front();
        s.height = spike_height(s);
        s.width = spike_width(s);
        if (s.height < params.min_height || !(s.width > 0.0)) continue;
        s.solid_angle = solid_angle(s);
        spikes.push_back(std::move(s));
    }

    std::sort(spikes.begin(), spikes.end(), [](const Spike& a, const Spike& b) {
        return a.apex_eps < b.apex_eps || (a.apex_eps == b.apex_eps && a.apex_vertex < b.apex_vertex);
    });
    for (std::size_t i = 0; i < spikes.size(); ++i) {
        Spike& s = spikes[i];
        s.id = static_cast<int>(i);
        s.baseline.spike_id = s.id;
        for (LevelLoop& loop : s.loops) loop.spike_id = s.id;
    }
    return spikes;
}

double spike_height(const Spike& spike)
{
    if (spike.loops.empty()) return 0.0;
    double h = 0.0;
    for (std::size_t k = 1; k < spike.loops.size(); ++k) h += (spike.loops[k].centroid - spike.loops[k - 1].centroid).norm();
    return h + (spike.apex_point - spike.loops.back().centroid).norm();
}

double spike_width(const Spike& spike)
{
    const auto& p = spike.baseline.points;
    double best = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i)
        for (std::size_t j = i + 1; j < p.size(); ++j) best = std::max(best, (p[i] - p[j]).squaredNorm());
    return std::sqrt(best);
}

} // namespace spicula
