#include "deepsn/gen.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <set>
#include <utility>
#include <vector>

#include "deepsn/errors.hpp"
#include "deepsn/rng.hpp"

namespace deepsn {
namespace {

using EdgeSet = std::set<std::pair<int, int>>;

bool add_edge(EdgeSet& edges, int u, int v) {
    if (u == v) return false;
    if (u > v) std::swap(u, v);
    return edges.insert({u, v}).second;
}

Graph finish(int n, const EdgeSet& edges) {
    std::vector<std::pair<int, int>> list(edges.begin(), edges.end());
    return Graph(n, list);
}

} // namespace

Graph random_connected_graph(int n, int extra, std::uint64_t seed) {
    if (n < 1) throw DataError("graph needs at least one vertex");
    std::mt19937_64 rng = make_rng(seed, 11);
    EdgeSet edges;
    for (int v = 1; v < n; ++v) {
        std::uniform_int_distribution<int> pick(0, v - 1);
        add_edge(edges, v, pick(rng));
    }
    std::uniform_int_distribution<int> any(0, n - 1);
    const long long cap = static_cast<long long>(n) * (n - 1) / 2;
    while (static_cast<long long>(edges.size()) < std::min<long long>(cap, n - 1 + extra))
        add_edge(edges, any(rng), any(rng));
    return finish(n, edges);
}

Graph random_connected_bipartite(int n, int extra, std::uint64_t seed) {
    if (n < 2) throw DataError("bipartite graph needs at least two vertices");
    std::mt19937_64 rng = make_rng(seed, 13);
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<int> side(n);
    std::vector<std::vector<int>> part(2);
    for (int i = 0; i < n; ++i) {
        side[order[i]] = i % 2;
        part[i % 2].push_back(order[i]);
    }
    // Attachment tree: vertex i joins a random earlier vertex of the other side.
    EdgeSet edges;
    for (int i = 1; i < n; ++i) {
        std::vector<int> other;
        for (int j = 0; j < i; ++j)
            if (side[order[j]] != side[order[i]]) other.push_back(order[j]);
        std::uniform_int_distribution<int> pick(0, static_cast<int>(other.size()) - 1);
        add_edge(edges, order[i], other[pick(rng)]);
    }
    const long long cap = static_cast<long long>(part[0].size()) * part[1].size();
    std::uniform_int_distribution<int> pick0(0, static_cast<int>(part[0].size()) - 1);
    std::uniform_int_distribution<int> pick1(0, static_cast<int>(part[1].size()) - 1);
    while (static_cast<long long>(edges.size()) < std::min<long long>(cap, n - 1 + extra))
        add_edge(edges, part[0][pick0(rng)], part[1][pick1(rng)]);
    return finish(n, edges);
}

Graph synthetic_benchmark_graph(int n, int m, std::uint64_t seed) {
    if (m < n - 1) throw DataError("edge budget below spanning tree size");
    const long long cap = static_cast<long long>(n) * (n - 1) / 2;
    if (m > cap) throw DataError("edge budget exceeds simple-graph capacity");
    std::mt19937_64 rng = make_rng(seed, 17);
    EdgeSet edges;
    std::vector<std::vector<int>> adj(n);
    std::vector<int> endpoints; // every edge contributes both ends: degree-biased pool
    endpoints.reserve(2 * static_cast<std::size_t>(m));
    auto record = [&](int u, int v) {
        if (add_edge(edges, u, v)) {
            adj[u].push_back(v);
            adj[v].push_back(u);
            endpoints.push_back(u);
            endpoints.push_back(v);
            return true;
        }
        return false;
    };
    for (int v = 1; v < n; ++v) {
        std::uniform_int_distribution<int> pick(0, v - 1);
        record(v, pick(rng));
    }
    std::uniform_int_distribution<int> any(0, n - 1);
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    while (static_cast<int>(edges.size()) < m) {
        const double c = coin(rng);
        if (c < 0.45) {
            // Preferential attachment: anchor picked proportional to degree.
            std::uniform_int_distribution<std::size_t> pe(0, endpoints.size() - 1);
            record(endpoints[pe(rng)], any(rng));
        } else if (c < 0.75) {
            // Triangle closure: connect two neighbors of a random vertex.
            std::uniform_int_distribution<std::size_t> pe(0, endpoints.size() - 1);
            const int v = endpoints[pe(rng)];
            if (adj[v].size() >= 2) {
                std::uniform_int_distribution<std::size_t> pn(0, adj[v].size() - 1);
                record(adj[v][pn(rng)], adj[v][pn(rng)]);
            }
        } else {
            record(any(rng), any(rng));
        }
    }
    return finish(n, edges);
}

Sheaf random_sheaf(const Graph& g, int d, std::uint64_t seed, double scale, double psi_lo,
                   double psi_hi) {
    std::mt19937_64 rng = make_rng(seed, 19);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::uniform_real_distribution<double> psi(psi_lo, psi_hi);
    Sheaf s(g, d);
    for (int e = 0; e < g.num_edges(); ++e) {
        for (int k = 0; k < d * d; ++k) {
            s.map_lo(e)[k] = scale * unit(rng);
            s.map_hi(e)[k] = scale * unit(rng);
        }
        s.coeff[e] = psi(rng);
    }
    return s;
}

} // namespace deepsn
