#pragma once
#include <cstdint>

#include "deepsn/graph.hpp"
#include "deepsn/sheaf.hpp"

namespace deepsn {

// Deterministic graph generators used by tests, experiments and the dataset
// tool. All are seeded and produce simple connected graphs.

// Random spanning tree plus `extra` additional distinct edges.
Graph random_connected_graph(int n, int extra, std::uint64_t seed);

// Connected bipartite graph: alternating attachment tree plus `extra`
// cross-part edges. Parts are {even ids} x {odd ids} of a random shuffle.
Graph random_connected_bipartite(int n, int extra, std::uint64_t seed);

// Connected graph with exactly m edges (m >= n-1): random spanning tree,
// then preferential attachment mixed with triangle closure until m edges.
Graph synthetic_benchmark_graph(int n, int m, std::uint64_t seed);

// Random sheaf with entries uniform in [-1,1] scaled by `scale` and psi
// uniform in [psi_lo, psi_hi].
Sheaf random_sheaf(const Graph& g, int d, std::uint64_t seed, double scale = 1.0,
                   double psi_lo = 0.2, double psi_hi = 1.0);

} // namespace deepsn
