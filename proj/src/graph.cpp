#include "deepsn/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "deepsn/errors.hpp"

namespace deepsn {

Graph::Graph(int n_vertices, std::vector<std::pair<int, int>> edge_pairs) : n_(n_vertices) {
    if (n_ < 0) throw DataError("graph: negative vertex count");
    for (auto& [u, v] : edge_pairs) {
        if (u < 0 || v < 0 || u >= n_ || v >= n_)
            throw DataError("graph: edge endpoint out of range");
        if (u == v) throw DataError("graph: self-loop");
        if (u > v) std::swap(u, v);
    }
    std::sort(edge_pairs.begin(), edge_pairs.end());
    edge_pairs.erase(std::unique(edge_pairs.begin(), edge_pairs.end()), edge_pairs.end());
    edges_ = std::move(edge_pairs);

    adjacency_.assign(n_, {});
    incident_.assign(n_, {});
    for (int e = 0; e < static_cast<int>(edges_.size()); ++e) {
        auto [u, v] = edges_[e];
        adjacency_[u].push_back(v);
        adjacency_[v].push_back(u);
        incident_[u].push_back(e);
        incident_[v].push_back(e);
    }
    // Canonical edge order already gives sorted neighbor lists: edges are
    // sorted by (min,max), so each vertex sees its neighbors ascending for
    // the min side; the max side needs a sort.
    for (int v = 0; v < n_; ++v) {
        std::vector<int> order(adjacency_[v].size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
        std::sort(order.begin(), order.end(),
                  [&](int a, int b) { return adjacency_[v][a] < adjacency_[v][b]; });
        std::vector<int> adj_sorted, inc_sorted;
        adj_sorted.reserve(order.size());
        inc_sorted.reserve(order.size());
        for (int i : order) {
            adj_sorted.push_back(adjacency_[v][i]);
            inc_sorted.push_back(incident_[v][i]);
        }
        adjacency_[v] = std::move(adj_sorted);
        incident_[v] = std::move(inc_sorted);
        max_degree_ = std::max(max_degree_, static_cast<int>(adjacency_[v].size()));
    }
}

const std::vector<int>& Graph::neighbors(int v) const {
    if (v < 0 || v >= n_) throw DataError("neighbors: vertex id out of range");
    return adjacency_[v];
}

int Graph::degree(int v) const {
    if (v < 0 || v >= n_) throw DataError("degree: vertex id out of range");
    return static_cast<int>(adjacency_[v].size());
}

const std::vector<int>& Graph::incident_edges(int v) const {
    if (v < 0 || v >= n_) throw DataError("incident_edges: vertex id out of range");
    return incident_[v];
}

bool Graph::has_edge(int u, int v) const {
    if (u < 0 || v < 0 || u >= n_ || v >= n_) return false;
    const auto& a = adjacency_[u];
    return std::binary_search(a.begin(), a.end(), v);
}

WeightedGraph::WeightedGraph(const Graph& g, std::vector<double> w)
    : base(&g), weight(std::move(w)) {}

WeightedGraph build_weighted(const Graph& g, std::vector<double> edge_weights) {
    if (static_cast<int>(edge_weights.size()) != g.num_edges())
        throw DataError("build_weighted: weight count != edge count");
    for (double w : edge_weights)
        if (!std::isfinite(w) || w < 0.0)
            throw DataError("build_weighted: weights must be finite and >= 0");
    return WeightedGraph(g, std::move(edge_weights));
}

EdgeListLoadResult load_edge_list(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("load_edge_list: cannot open " + path);

    EdgeListLoadResult result;
    std::unordered_map<std::string, int> id_of;
    std::vector<std::pair<int, int>> pairs;
    std::string line;
    int line_no = 0;

    auto intern = [&](const std::string& tok) {
        auto it = id_of.find(tok);
        if (it != id_of.end()) return it->second;
        int id = static_cast<int>(result.labels.size());
        id_of.emplace(tok, id);
        result.labels.push_back(tok);
        return id;
    };

    while (std::getline(in, line)) {
        ++line_no;
        std::size_t start = line.find_first_not_of(" \t\r");
        if (start == std::string::npos) continue;
        if (line[start] == '#' || line[start] == '%') continue;

        std::istringstream ss(line);
        long long a, b;
        if (!(ss >> a >> b))
            throw DataError("load_edge_list: malformed line " + std::to_string(line_no) +
                            " in " + path);
        std::string trailing;
        if (ss >> trailing && !trailing.empty() && trailing[0] != '#' && trailing[0] != '%')
            throw DataError("load_edge_list: malformed line " + std::to_string(line_no) +
                            " in " + path + " (extra tokens)");

        if (a == b) { // drop before interning: no phantom isolated vertex
            ++result.dropped_self_loops;
            continue;
        }
        const int u = intern(std::to_string(a)); // sequenced: first-seen order
        const int v = intern(std::to_string(b));
        pairs.emplace_back(u, v);
    }
    if (in.bad()) throw DataError("load_edge_list: I/O failure reading " + path);

    int n = static_cast<int>(result.labels.size());
    std::size_t raw = pairs.size();
    result.graph = Graph(n, std::move(pairs));
    result.duplicate_edges = static_cast<int>(raw) - result.graph.num_edges();
    return result;
}

void save_edge_list(const Graph& g, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("save_edge_list: cannot open " + path);
    for (auto [u, v] : g.edges()) out << u << ' ' << v << '\n';
    if (!out) throw DataError("save_edge_list: write failure on " + path);
}

} // namespace deepsn
