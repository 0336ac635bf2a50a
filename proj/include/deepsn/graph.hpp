#pragma once
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace deepsn {

// Immutable undirected simple graph. Vertex ids are dense in [0, n); edges
// are stored once in canonical order (sorted (min,max) pairs) so that
// per-edge parameter arrays line up across runs. Neighbor lists are sorted
// ascending. Safe to share across threads after construction.
class Graph {
public:
    Graph() = default;
    // Edges may contain duplicates and arbitrary orientation; self-loops are
    // rejected here (the file loader drops them earlier and counts them).
    Graph(int n_vertices, std::vector<std::pair<int, int>> edge_pairs);

    int num_vertices() const { return n_; }
    int num_edges() const { return static_cast<int>(edges_.size()); }

    const std::vector<std::pair<int, int>>& edges() const { return edges_; }
    std::pair<int, int> edge(int e) const { return edges_[e]; }

    // Sorted neighbor ids of v. Throws on out-of-range v.
    const std::vector<int>& neighbors(int v) const;
    int degree(int v) const;
    int max_degree() const { return max_degree_; }

    // Index into edges() for incident edges of v, aligned with neighbors(v).
    const std::vector<int>& incident_edges(int v) const;

    bool has_edge(int u, int v) const;

private:
    int n_ = 0;
    std::vector<std::pair<int, int>> edges_;
    std::vector<std::vector<int>> adjacency_;
    std::vector<std::vector<int>> incident_;
    int max_degree_ = 0;
};

struct WeightedGraph {
    const Graph* base = nullptr;
    std::vector<double> weight; // length m, aligned with base->edges()

    WeightedGraph() = default;
    WeightedGraph(const Graph& g, std::vector<double> w);
};

// Pairs g's canonical edge order with weights. Throws DataError on length
// mismatch or negative/non-finite weights.
WeightedGraph build_weighted(const Graph& g, std::vector<double> edge_weights);

struct EdgeListLoadResult {
    Graph graph;
    std::vector<std::string> labels;   // compacted id -> original label
    int dropped_self_loops = 0;
    int duplicate_edges = 0;
};

// Text edge list: one edge per line, two whitespace-separated integer tokens;
// lines starting with '#' or '%' are comments. Vertex labels are compacted to
// [0, n) in first-seen order; directed input is symmetrized; self-loops are
// dropped (counted, not an error). Malformed lines throw DataError with the
// line number.
EdgeListLoadResult load_edge_list(const std::string& path);

// Round-trip companion of load_edge_list (writes compacted ids).
void save_edge_list(const Graph& g, const std::string& path);

} // namespace deepsn
