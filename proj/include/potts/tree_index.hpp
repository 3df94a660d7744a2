#pragma once

#include <cstdint>
#include <vector>

#include "potts/graph.hpp"

namespace potts {

// Canonical breadth-first indexing of the depth-t ball of the d-regular
// tree.  Vertex 0 is the root with d children; every other non-leaf vertex
// has d-1 children.  Vertices are numbered level by level, children of
// lower-numbered vertices first, so depth-l vertices occupy the contiguous
// range [level_start[l], level_start[l+1]).
//
// Edges are listed in child order: edge i joins parent[v] and v for the
// vertex v = i + 1.  This ordering is shared by every module that touches
// tree balls (exact references, pattern estimators, the brute-force oracle).
struct TreeIndex {
    int d = 3;
    int t = 0;
    int n = 1;
    std::vector<int> parent;                     // parent[0] = -1
    std::vector<int> level_start;                // size t+2
    std::vector<std::pair<int, int>> edges;      // (parent, child), child order

    int depth_of(int v) const;
    int num_leaves() const { return level_start[t + 1] - level_start[t]; }
    // Children of v occupy a contiguous vertex range [first, last).
    std::pair<int, int> children(int v) const;
    Graph to_graph() const { return Graph(n, edges); }
};

// Number of vertices of the depth-t ball: 1 + d((d-1)^t - 1)/(d-2).
std::int64_t tree_ball_size(int d, int t);

// Builds the canonical index.  Throws when the ball exceeds vertex_cap.
TreeIndex tree_index(int d, int t, std::int64_t vertex_cap = 1 << 22);

// Big-endian base-q encoding of a coloring of the ball, root most
// significant: code = sum_v colors[v] * q^{n-1-v}.  Patterns on a deeper
// ball therefore marginalize to a shallower one by contiguous block sums.
std::uint64_t encode_pattern(const std::vector<std::uint8_t>& colors0based, int q);
std::vector<std::uint8_t> decode_pattern(std::uint64_t code, int n_vertices, int q);

// q^n as uint64, throwing on overflow past 2^63.
std::uint64_t pow_u64(int q, int n);

}  // namespace potts
