#include "potts/graph.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace potts {

Graph::Graph(int n_, std::vector<std::pair<int, int>> edges_) : n(n_), edges(std::move(edges_)) {
    if (n < 0) throw std::invalid_argument("Graph: negative vertex count");
    std::set<std::pair<int, int>> seen;
    for (auto [u, v] : edges) {
        if (u < 0 || u >= n || v < 0 || v >= n)
            throw std::invalid_argument("Graph: edge endpoint out of range");
        if (u == v) throw std::invalid_argument("Graph: self-loop");
        auto key = std::minmax(u, v);
        if (!seen.insert({key.first, key.second}).second)
            throw std::invalid_argument("Graph: parallel edge");
    }
    adj_offset.assign(n + 1, 0);
    for (auto [u, v] : edges) {
        ++adj_offset[u + 1];
        ++adj_offset[v + 1];
    }
    for (int i = 0; i < n; ++i) adj_offset[i + 1] += adj_offset[i];
    adj.assign(adj_offset[n], 0);
    std::vector<int> cursor(adj_offset.begin(), adj_offset.end() - 1);
    for (auto [u, v] : edges) {
        adj[cursor[u]++] = v;
        adj[cursor[v]++] = u;
    }
    for (int v = 0; v < n; ++v)
        std::sort(adj.begin() + adj_offset[v], adj.begin() + adj_offset[v + 1]);
}

int Graph::max_degree() const {
    int m = 0;
    for (int v = 0; v < n; ++v) m = std::max(m, degree(v));
    return m;
}

Graph Graph::from_text(std::istream& in) {
    int n = 0, m = 0;
    if (!(in >> n >> m)) throw std::runtime_error("Graph::from_text: missing header");
    std::vector<std::pair<int, int>> edges;
    edges.reserve(m);
    for (int i = 0; i < m; ++i) {
        int u, v;
        if (!(in >> u >> v)) throw std::runtime_error("Graph::from_text: truncated edge list");
        edges.emplace_back(u, v);
    }
    return Graph(n, std::move(edges));
}

void Graph::to_text(std::ostream& out) const {
    out << n << ' ' << num_edges() << '\n';
    for (auto [u, v] : edges) out << u << ' ' << v << '\n';
}

Graph Graph::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("Graph::load: cannot open " + path);
    return from_text(in);
}

void Graph::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("Graph::save: cannot open " + path);
    to_text(out);
}

}  // namespace potts
