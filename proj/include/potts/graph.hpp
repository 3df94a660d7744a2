#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace potts {

// Sparse undirected simple graph with a stable edge list: edge i always
// refers to the i-th entry of `edges`, which downstream bond configurations
// index into.  Adjacency is stored compressed and sorted per vertex.
struct Graph {
    int n = 0;
    std::vector<std::pair<int, int>> edges;
    std::vector<int> adj_offset;  // size n+1
    std::vector<int> adj;         // concatenated sorted neighbor lists

    Graph() = default;
    Graph(int n_, std::vector<std::pair<int, int>> edges_);

    int num_edges() const { return static_cast<int>(edges.size()); }
    int degree(int v) const { return adj_offset[v + 1] - adj_offset[v]; }
    std::span<const int> neighbors(int v) const {
        return {adj.data() + adj_offset[v], adj.data() + adj_offset[v + 1]};
    }
    int max_degree() const;

    // Plain-text serialization: first line "n m", then m lines "u v" (0-based).
    static Graph from_text(std::istream& in);
    void to_text(std::ostream& out) const;
    static Graph load(const std::string& path);
    void save(const std::string& path) const;
};

// A graph augmented by the ghost (field) vertex: the ghost has index
// base.n and is joined to every base vertex.  Edge indices extend the base
// edge list, with the ghost edge of vertex v at index base.num_edges() + v.
struct GhostGraph {
    Graph base;

    GhostGraph() = default;
    explicit GhostGraph(Graph g) : base(std::move(g)) {}

    int ghost() const { return base.n; }
    int num_vertices() const { return base.n + 1; }  // including the ghost
    int num_edges() const { return base.num_edges() + base.n; }

    bool is_ghost_edge(int e) const { return e >= base.num_edges(); }

    // Endpoints of edge e in the unified indexing (ghost edges come last).
    std::pair<int, int> edge(int e) const {
        if (e < base.num_edges()) return base.edges[e];
        return {e - base.num_edges(), ghost()};
    }
};

// A coloring of the vertices, 0-based internally: color 0 is the
// field-favored color (reported as color 1 at the interfaces).  When the
// configuration lives on a GhostGraph it has base.n + 1 entries and the
// ghost entry is always 0.
struct SpinConfig {
    std::vector<std::uint8_t> colors;

    SpinConfig() = default;
    explicit SpinConfig(int n, std::uint8_t c = 0) : colors(n, c) {}
    int size() const { return static_cast<int>(colors.size()); }
};

// An open/closed assignment of the edges of a GhostGraph, indexed like its
// unified edge list (base edges first, then ghost edges).  At B = 0 every
// ghost bit must be 0.
struct BondConfig {
    std::vector<std::uint8_t> open;

    BondConfig() = default;
    explicit BondConfig(int m) : open(m, 0) {}
    int size() const { return static_cast<int>(open.size()); }
};

}  // namespace potts
