#pragma once

#include <cstdint>
#include <vector>

#include "potts/bethe.hpp"
#include "potts/neighborhood_law.hpp"
#include "potts/params.hpp"

namespace potts {

// Boundary condition applied below the depth-t leaves of a tree ball:
//   FREE             -- nothing attached, the leaves feel only their field;
//   COLOR            -- the leaf spins are pinned to one color;
//   FIXEDPOINT_FREE  -- each leaf receives d-1 virtual child messages equal
//                       to the converged symmetric recursion fixed point
//                       reached from the uniform start;
//   FIXEDPOINT_WIRED -- same with the fixed point reached from the Dirac
//                       start (the all-one boundary limit).
// The FIXEDPOINT boundaries realize the infinite-tree marginal exactly: the
// attached message is stationary, so the law on the ball no longer depends
// on where it was truncated.
enum class BoundaryKind { FREE, COLOR, FIXEDPOINT_FREE, FIXEDPOINT_WIRED };

struct BoundarySpec {
    BoundaryKind kind = BoundaryKind::FREE;
    int color = 0;  // pinned color for COLOR, 0-based (0 = field-favored)

    static BoundarySpec free() { return {BoundaryKind::FREE, 0}; }
    static BoundarySpec color_boundary(int k0) { return {BoundaryKind::COLOR, k0}; }
    static BoundarySpec fixedpoint_free() { return {BoundaryKind::FIXEDPOINT_FREE, 0}; }
    static BoundarySpec fixedpoint_wired() { return {BoundaryKind::FIXEDPOINT_WIRED, 0}; }
};

// Upward message dynamic program on the depth-t ball.  By homogeneity every
// directed edge at the same depth carries the same message, so the result
// has one entry per level: entry s is the normalized belief a depth-s
// vertex sends toward its parent (field, deeper subtree, and boundary
// folded in); entry 0 is the root marginal.
std::vector<std::vector<double>> tree_messages(int t, const BoundarySpec& b,
                                               const Params& p);

// Law of the root spin on the depth-t ball with the given boundary.
std::vector<double> root_marginal(int t, const BoundarySpec& b, const Params& p);

// Joint law of (root, first child) on the depth-t ball, row-major
// table[s_root * q + s_child].  For FIXEDPOINT boundaries this is
// proportional to e^{beta delta} nu(s_root) nu(s_child), independent of t.
std::vector<double> pair_marginal(int t, const BoundarySpec& b, const Params& p);

// Probability that the two endpoints of an edge carry equal spins,
// summed from the pair marginal.
double agreement_probability(int t, const BoundarySpec& b, const Params& p);

// Exact joint law of the spins on the depth-t_report sub-ball under the
// Potts measure on the depth-t_total ball with the given boundary.
// Pattern probabilities are accumulated in log space.  Throws
// std::length_error when the pattern table exceeds the cap.
NeighborhoodLaw neighborhood_law(int t_report, int t_total, const BoundarySpec& b,
                                 const Params& p,
                                 std::int64_t cap = NeighborhoodLaw::default_cap);

// Balanced mixture (1/q) sum_k of the color-k boundary laws, the zero-field
// wired reference.  base selects how each component is realized: COLOR runs
// one pinned-boundary dynamic program per color, FIXEDPOINT_WIRED computes
// the color-0 fixed-point law and relabels (exact at B = 0 by symmetry).
// pre: B == 0.
NeighborhoodLaw wired_mixture_law(int t_report, int t_total, BoundaryKind base,
                                  const Params& p,
                                  std::int64_t cap = NeighborhoodLaw::default_cap);

// Probability that an edge of the depth-t ball is open-connected under the
// infinite-volume bond law of the given branch, one entry per edge of the
// ball, recovered from the pair marginal through the agreement identity
//   P(same spin) = (1 - 1/q) P(connected) + 1/q.
// Translation invariance of the fixed-point measure makes all entries
// equal; the vector is shaped per edge so callers can index it like the
// ball's edge list.
std::vector<double> rcm_edge_connectivity(int t, BpStart ddagger, const Params& p);

}  // namespace potts
