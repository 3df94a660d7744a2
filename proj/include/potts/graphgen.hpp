#pragma once

// Random d-regular graph generation, neighborhood (ball) extraction with
// tree-isomorphism testing, local graph surgery (vertex removal / rewiring),
// and a spectral edge-expansion certificate.

#include <cstdint>
#include <vector>

#include "potts/graph.hpp"

namespace potts {

enum class GenModel {
    CONFIGURATION,  // pair n*d half-edges uniformly, reject-and-restart on violations
    PERMUTATION,    // union of d/2 uniform permutations of [n] (requires even d)
};

// Parameters of a random regular graph draw.
struct GenSpec {
    int n = 0;                              // number of vertices
    int d = 0;                              // common degree
    GenModel model = GenModel::CONFIGURATION;
    std::uint64_t seed = 0;

    // Throws std::invalid_argument on a parity violation:
    // CONFIGURATION needs n*d even, PERMUTATION needs d even.
    void validate() const;
};

// Draw a simple d-regular graph on n vertices.  Both models use
// reject-and-restart: a draw containing a self-loop, parallel edge,
// fixed point, or 2-cycle is discarded wholesale and redrawn.  The result
// is deterministic given the spec (including the seed).  Throws
// std::runtime_error when `max_attempts` consecutive draws fail, which
// happens when n is too small to admit a simple d-regular graph.
Graph random_regular(const GenSpec& spec, int max_attempts = 10000);

// Radius-t neighborhood of a vertex.
struct BallResult {
    std::vector<int> vertices;  // ball members in BFS order; vertices[0] = center
    Graph induced;              // subgraph induced on `vertices`, re-indexed by BFS position
    bool is_tree_isomorphic = false;  // ball is isomorphic to the regular tree ball
};

// BFS ball of radius t around v together with the induced subgraph.
// The isomorphism flag compares against the regular tree whose branching
// matches deg(v): the vertex count must equal the full tree ball AND the
// induced subgraph must be a tree (edge count = vertex count - 1).  The
// second condition is not redundant: in K_4 the radius-1 ball has the
// right vertex count but carries extra edges.
BallResult ball(const Graph& g, int v, int t);

// Result of a surgery operation; vertex indices are compacted after removal.
struct SurgeryResult {
    Graph graph;
    std::vector<int> old_of_new;       // old index of each surviving vertex
    bool created_parallel_edge = false;  // rewire only; removal never reports it
};

// Delete vertex w and all incident edges; surviving vertices are re-indexed
// to 0..n-2 preserving order, and the mapping back is returned.
SurgeryResult remove_vertex(const Graph& g, int w);

// Delete w, then reconnect its former neighbors pairwise: with x_0 < x_1 <
// ... the sorted neighbor list of w, add edges (x_{pi[2i]}, x_{pi[2i+1]})
// for i = 0..deg(w)/2-1.  Requires even degree at w and pi a permutation of
// 0..deg(w)-1.  A reconnection edge that already exists in the remaining
// graph (or is added twice) is a parallel edge; such draws are rejected with
// std::runtime_error whose message reports the colliding pair.
SurgeryResult rewire(const Graph& g, int w, const std::vector<int>& pi);

// Spectral edge-expansion certificate (d - lambda_2)/2, where lambda_2 is
// the second-largest adjacency eigenvalue and d the maximum degree.
// Computed by power iteration on the nonnegative shift A + d*I with the
// all-ones top eigenvector deflated.  Informational only: a positive value
// certifies expansion qualitatively, no sharp constant is claimed.
// Throws std::invalid_argument on a disconnected graph.
double expansion_estimate(const Graph& g);

}  // namespace potts
