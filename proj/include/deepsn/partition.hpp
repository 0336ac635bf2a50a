#pragma once
#include <vector>

#include "deepsn/graph.hpp"

namespace deepsn {

struct PartitionResult {
    std::vector<int> assignment; // vertex -> community id, dense in [0, r)
    int num_communities = 0;
    double modularity = 0.0;
};

// Weighted Newman modularity with a resolution factor. Zero-weight edges
// contribute nothing (a sparsified graph keeps its edge slots with w = 0).
double weighted_modularity(const WeightedGraph& wg, const std::vector<int>& assignment,
                           double resolution = 1.0);

// Two-phase Louvain: greedy local moves to the best-gain community, then
// community aggregation, repeated until a whole pass yields no improvement.
// Vertices are visited in ascending id order and ties go to the lower
// community id, so the output is a pure function of the input. Vertices with
// no positive-weight incident edge end up as singletons.
PartitionResult louvain(const WeightedGraph& wg, double resolution = 1.0);

} // namespace deepsn
