#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "potts/graph.hpp"
#include "potts/params.hpp"
#include "potts/tree_index.hpp"

namespace potts {

// Hard ceiling on the number of weighted configurations a single
// enumeration call may visit.  Every enumerator below throws
// std::length_error when an instance would exceed it; callers are expected
// to size their instances accordingly.
inline constexpr std::uint64_t oracle_enum_cap = std::uint64_t{1} << 26;

// An exhaustively enumerated finite distribution.  `prob` is indexed by a
// configuration code:
//   spins  -- big-endian base q over the base vertices (encode_pattern),
//   bonds  -- bitmask with bit e = edge e of the unified edge list,
//   joint  -- spin_code * 2^{num_edges} + bond_mask.
// Z is the unnormalized total mass under the convention that all three
// representations (spin, bond, joint) of the same model share one partition
// function.
struct ExactDistribution {
    int n_sites = 0;  // number of vertices (spins) or edges (bonds)
    double Z = 0.0;
    double log_Z = 0.0;
    std::vector<double> prob;

    double total() const;
};

// --- exact laws ------------------------------------------------------------

// Ferromagnetic Potts measure over colorings of the base vertices.  The
// plain form weights agreeing edges by e^beta and color-1 vertices by e^B;
// the ghosted form fixes the ghost spin to color 1 and weights every edge
// of the amended graph (field edges carry coupling B).  Both induce the
// same law; each is computed from its own defining product.
ExactDistribution enumerate_potts(const Graph& g, const Params& p);
ExactDistribution enumerate_potts(const GhostGraph& gg, const Params& p);

// Random-cluster measure over bond configurations on all edges of the
// amended graph: weight p^open (1-p)^closed q^{#clusters}, clusters counted
// over base vertices plus the ghost (isolated vertices included, the ghost
// cluster once).  Z is scaled by e^{beta |E| + B n}/q so it equals the
// Potts partition function.
ExactDistribution enumerate_rcm(const GhostGraph& gg, const Params& p);

// Marginal of the random-cluster measure on the base edges, computed
// directly through per-cluster field weights prod_C (1 + (q-1) e^{-B|C|}),
// and cross-checked against the ghost-bond sum of enumerate_rcm to 1e-12
// (throws std::logic_error on disagreement).
ExactDistribution marginal_rcm(const Graph& g, const Params& p);

// Max abs difference between the two computations above (0 when they agree).
double marginal_rcm_residual(const Graph& g, const Params& p);

// Joint spin-bond law: bonds may be open only across agreeing endpoints
// (field edges agree when the base endpoint has color 1).  Marginals are
// the Potts and random-cluster laws; total mass is the shared Z.
ExactDistribution enumerate_es(const GhostGraph& gg, const Params& p);

// --- coupling residuals ------------------------------------------------------

// Max residual across: joint spin marginal vs enumerate_potts, joint bond
// marginal vs enumerate_rcm, agreement of the three partition functions,
// and the conditional spin law given bonds vs the cluster-uniform law
// (one uniform color per cluster, ghost cluster forced to color 1).
double es_consistency(const GhostGraph& gg, const Params& p);

// Max over all base vertex pairs of
//   |mu(sigma_u = sigma_v) - (1 - 1/q) phi(u <-> v) - 1/q|,
// where connectivity may run through the ghost vertex.
double correlation_identity_residual(const GhostGraph& gg, const Params& p);

// --- restricted partition functions and tree-ball surgery -------------------

// Restricted partition function: the sum over bond configurations agreeing
// with y on `fixed_edges` (bit i of y = value of fixed_edges[i]) of
// q^{#clusters} prod_e p^eta (1-p)^{1-eta}, scaled by e^{beta |E| + B n}/q.
// Summing over all y recovers the Potts partition function.
double restricted_Z(const GhostGraph& gg, const std::vector<int>& fixed_edges,
                    std::uint64_t y, const Params& p);

// Conditional ghost-connectivity message on a tree ball: the probability
// that u is joined to the ghost when the bond (u, v) is closed and the
// bonds listed in `outside` are frozen to y.  Enumerates the remaining free
// bonds.
double pre_message(const GhostGraph& ball, int u, int v,
                   const std::vector<int>& outside, std::uint64_t y,
                   const Params& p);

struct SurgeryCheck {
    double residual_vx = 0.0;             // root-removal identity, relative
    std::optional<double> residual_e;     // rewiring identity (even d only)
};

// Verifies, on the depth-r ball of the d-regular tree with all bonds
// outside the depth-t sub-ball frozen to y, that the partition-function
// ratios under root removal and under root removal plus neighbor rewiring
// (pairing the root's neighbors x_{pi(2i-1)} ~ x_{pi(2i)}) are reproduced
// exactly by the vertex and edge message functionals evaluated at the
// conditional ghost-connectivity messages of the root's neighbors.
// y has one bit per frozen bond: tree edges below depth t in child order,
// then ghost edges of the vertices below depth t in vertex order.
// pi is a permutation of {0..d-1}; pass std::nullopt to skip the rewiring
// identity (mandatory for odd d).
SurgeryCheck surgery_ratio_check(int d, int r, int t, std::uint64_t y,
                                 const Params& p,
                                 const std::optional<std::vector<int>>& pi);

// --- boundary partitions of a tree ball -------------------------------------

// A partition of {ghost} union {boundary vertices of a tree ball}.
// Element 0 is the ghost, elements 1..m the boundary vertices in BFS
// order; `block` is the restricted growth string (block[0] = 0,
// block[i] <= 1 + max of the prefix), so the ghost's block has id 0.
struct BoundaryPartition {
    std::vector<int> block;

    int n_boundary() const { return static_cast<int>(block.size()) - 1; }
    int n_blocks() const;
    bool ghost_isolated() const;  // block 0 == {ghost}
    // True when every block of *this lies inside a block of `coarser`.
    bool refines(const BoundaryPartition& coarser) const;
};

// All partitions of ghost + m boundary vertices, in lexicographic order of
// the restricted growth strings (the canonical enumeration order used by
// every consumer).
std::vector<BoundaryPartition> enumerate_boundary_partitions(int m);

// Indicator mask of the boundary edges opened by the partition: first the
// m(m-1)/2 boundary pairs (i < j, lexicographic), then the m ghost pairs.
// Refinement of partitions is exactly inclusion of these masks.
std::uint64_t boundary_edge_mask(const BoundaryPartition& C);

// Partitions with every non-ghost block a singleton: all boundary-to-
// boundary connections forced through the ghost block.
bool all_singletons_outside_ghost(const BoundaryPartition& C);

// --- boundary-conditioned tree-ball functionals ------------------------------

// Value of the boundary-connectivity functional on one bond configuration
// of the depth-(s+1) ball (mask over its ghost-graph edges), with the
// boundary partition merged in as permanently open wiring: the number of
// (depth-s vertex, neighbor) pairs joined by an open path.
int gF_value(const TreeIndex& ball, int s, std::uint64_t bond_mask,
             const BoundaryPartition& C);

// Expectation of that functional under the random-cluster measure on the
// depth-(s+1) ball conditioned on the boundary partition C.
double gF_expectation(int d, int s, const BoundaryPartition& C, const Params& p);

// Law of the partition of {ghost} + boundary of the depth-t sub-ball
// induced by the open bonds outside the sub-ball, under the random-cluster
// measure on the depth-T ball conditioned on the boundary partition CT at
// depth T.  Indexed like enumerate_boundary_partitions(|boundary(t)|).
std::vector<double> induced_boundary_law(int d, int t, int T,
                                         const BoundaryPartition& CT,
                                         const Params& p);

// Free (all boundary edges closed) and wired (boundary and ghost merged
// into one block) specializations at T = t + 1.
std::vector<double> boundary_law_free(int d, int t, const Params& p);
std::vector<double> boundary_law_wired(int d, int t, const Params& p);

// --- monotone-coupling feasibility -------------------------------------------

struct StochasticOrderResult {
    bool feasible = false;
    double mass_shortfall = 0.0;  // probability mass no monotone coupling can move
    // coupling[i][j]: mass moved from low-configuration i to high-configuration j
    std::vector<std::vector<double>> coupling;
};

// Decides, by max-flow on the order-respecting transport graph, whether a
// coupling exists under which a sample of rho_low is coordinatewise below a
// sample of rho_high; configuration i embeds into the order lattice as the
// bitmask order_mask[i].  Feasible when the shortfall is within `slack`.
StochasticOrderResult stochastic_order(const std::vector<double>& rho_low,
                                       const std::vector<double>& rho_high,
                                       const std::vector<std::uint64_t>& order_mask,
                                       double slack = 1e-10);

// --- field-decay probe --------------------------------------------------------

// On the depth-(t+s) ball with the boundary partition that pairs one
// depth-(t+s) descendant of each of the first two depth-t vertices u, v
// (ghost isolated, everything else singletons): the probability that the
// cluster of u induced by the open bonds outside the depth-t sub-ball
// contains v but not the ghost.  Decays like e^{-2Bs}: every path from the
// pairing back to u and v crosses s levels whose ghost bonds must all stay
// closed.  Ghost bonds are summed per cluster in closed form, so only tree
// bonds are enumerated.
double ghost_decay_probe(int d, int t, int s, const Params& p);

// --- cluster-coloring uniformity ----------------------------------------------

// Exhaustively verifies the uniform-coloring construction: draw multinomial
// counts (M trials, q equal categories), split [M] uniformly into q base
// blocks of the minimum count and q excess blocks, then relabel the excess
// blocks by a uniform permutation.  Returns the max deviation of the
// resulting label law from the uniform law q^{-M}.
double sim_unif_check(int M, int q);

// --- suite -------------------------------------------------------------------

struct OracleCheck {
    std::string check_name;
    std::string instance;
    double max_residual = 0.0;
    bool pass = false;
};

// Runs the full ground-truth suite: per random graph (n <= 5) the coupling
// residuals, dual marginal computation, and restricted-Z totals; plus the
// designated tree-ball checks (surgery identities, boundary-functional
// ordering, monotone coupling of free vs wired boundary laws, field decay,
// uniform-coloring construction).  Deterministic in `seed`.
std::vector<OracleCheck> run_oracle_suite(int n_random_graphs, std::uint64_t seed);

}  // namespace potts
