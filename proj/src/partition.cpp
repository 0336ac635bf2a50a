#include "deepsn/partition.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "deepsn/errors.hpp"

namespace deepsn {
namespace {

// One aggregation level: symmetric weighted adjacency with explicit
// self-loop weights (community-internal mass folds into them).
struct LevelGraph {
    std::vector<std::vector<std::pair<int, double>>> adj; // no self entries
    std::vector<double> self;                             // A_vv
    std::vector<double> strength;                         // k_v = sum_u A_vu + A_vv
    double total = 0.0;                                   // 2m = sum_v k_v

    int size() const { return static_cast<int>(adj.size()); }

    void finish() {
        const int n = size();
        strength.assign(n, 0.0);
        total = 0.0;
        for (int v = 0; v < n; ++v) {
            double k = self[v];
            for (const auto& [u, w] : adj[v]) k += w;
            strength[v] = k;
            total += k;
        }
    }
};

// Single pass of greedy local moves. Returns true if anything moved.
bool local_moves(const LevelGraph& lg, std::vector<int>& community, double resolution) {
    const int n = lg.size();
    std::vector<double> comm_strength(n, 0.0);
    for (int v = 0; v < n; ++v) comm_strength[community[v]] += lg.strength[v];

    const double m2 = std::max(lg.total, 1e-300);
    bool any_move = false;
    bool moved = true;
    while (moved) {
        moved = false;
        std::unordered_map<int, double> link; // community -> weight from v
        for (int v = 0; v < n; ++v) {
            link.clear();
            for (const auto& [u, w] : lg.adj[v]) link[community[u]] += w;

            const int old_c = community[v];
            comm_strength[old_c] -= lg.strength[v];

            // gain of joining C (v currently isolated):
            //   w(v,C) - resolution * k_v * strength(C) / m2
            auto gain = [&](int c) {
                const double w_vc = link.count(c) ? link.at(c) : 0.0;
                return w_vc - resolution * lg.strength[v] * comm_strength[c] / m2;
            };

            int best_c = old_c;
            double best_gain = gain(old_c);
            for (const auto& [c, w] : link) {
                const double cand = gain(c);
                if (cand > best_gain + 1e-12 ||
                    (cand > best_gain - 1e-12 && c < best_c)) {
                    best_gain = cand;
                    best_c = c;
                }
            }

            comm_strength[best_c] += lg.strength[v];
            if (best_c != old_c) {
                community[v] = best_c;
                moved = true;
                any_move = true;
            }
        }
    }
    return any_move;
}

// Renumber community labels densely by first appearance over vertex order.
int compact_labels(std::vector<int>& community) {
    std::unordered_map<int, int> remap;
    int next = 0;
    for (int& c : community) {
        auto it = remap.find(c);
        if (it == remap.end()) it = remap.emplace(c, next++).first;
        c = it->second;
    }
    return next;
}

LevelGraph aggregate(const LevelGraph& lg, const std::vector<int>& community, int n_comm) {
    LevelGraph out;
    out.adj.resize(n_comm);
    out.self.assign(n_comm, 0.0);
    std::vector<std::unordered_map<int, double>> acc(n_comm);
    for (int v = 0; v < lg.size(); ++v) {
        const int cv = community[v];
        out.self[cv] += lg.self[v];
        for (const auto& [u, w] : lg.adj[v]) {
            const int cu = community[u];
            if (cu == cv)
                out.self[cv] += w; // both directions visited: totals 2w per edge
            else
                acc[cv][cu] += w;
        }
    }
    for (int c = 0; c < n_comm; ++c) {
        out.adj[c].assign(acc[c].begin(), acc[c].end());
        std::sort(out.adj[c].begin(), out.adj[c].end()); // deterministic order
    }
    out.finish();
    return out;
}

} // namespace

double weighted_modularity(const WeightedGraph& wg, const std::vector<int>& assignment,
                           double resolution) {
    if (wg.base == nullptr) throw DataError("weighted graph has no base graph");
    const Graph& g = *wg.base;
    const int n = g.num_vertices();
    if (static_cast<int>(assignment.size()) != n) throw DataError("assignment length mismatch");

    double m2 = 0.0;
    std::vector<double> strength(n, 0.0);
    for (int e = 0; e < g.num_edges(); ++e) {
        const auto [u, v] = g.edge(e);
        const double w = wg.weight[e];
        strength[u] += w;
        strength[v] += w;
        m2 += 2.0 * w;
    }
    if (m2 <= 0.0) return 0.0;

    double internal = 0.0;
    for (int e = 0; e < g.num_edges(); ++e) {
        const auto [u, v] = g.edge(e);
        if (assignment[u] == assignment[v]) internal += 2.0 * wg.weight[e];
    }
    std::unordered_map<int, double> comm_strength;
    for (int v = 0; v < n; ++v) comm_strength[assignment[v]] += strength[v];
    double penalty = 0.0;
    for (const auto& [c, s] : comm_strength) penalty += (s / m2) * (s / m2);
    return internal / m2 - resolution * penalty;
}

PartitionResult louvain(const WeightedGraph& wg, double resolution) {
    if (wg.base == nullptr) throw DataError("weighted graph has no base graph");
    const Graph& g = *wg.base;
    const int n = g.num_vertices();
    if (n == 0) throw DataError("cannot partition an empty graph");
    if (!(resolution > 0.0)) throw DataError("resolution must be positive");

    LevelGraph lg;
    lg.adj.resize(n);
    lg.self.assign(n, 0.0);
    for (int e = 0; e < g.num_edges(); ++e) {
        const double w = wg.weight[e];
        if (w <= 0.0) continue; // dropped edge
        const auto [u, v] = g.edge(e);
        lg.adj[u].emplace_back(v, w);
        lg.adj[v].emplace_back(u, w);
    }
    for (auto& nb : lg.adj) std::sort(nb.begin(), nb.end());
    lg.finish();

    // vertex -> community at the finest level, refined across aggregations
    std::vector<int> vertex_comm(n);
    for (int v = 0; v < n; ++v) vertex_comm[v] = v;

    while (true) {
        std::vector<int> community(lg.size());
        for (int c = 0; c < lg.size(); ++c) community[c] = c;
        const bool improved = local_moves(lg, community, resolution);
        const int n_comm = compact_labels(community);
        for (int v = 0; v < n; ++v) vertex_comm[v] = community[vertex_comm[v]];
        if (!improved || n_comm == lg.size()) break;
        lg = aggregate(lg, community, n_comm);
    }

    PartitionResult result;
    result.assignment = vertex_comm;
    result.num_communities = compact_labels(result.assignment);
    result.modularity = weighted_modularity(wg, result.assignment, resolution);
    return result;
}

} // namespace deepsn
