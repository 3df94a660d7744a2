#pragma once

// Cluster Monte Carlo for the ferromagnetic Potts model with a field,
// implemented as the two-step alternation of the joint spin/bond law's
// conditionals (Swendsen-Wang on the ghost-augmented graph), plus the
// estimators used to test convergence of local statistics: internal energy,
// color densities, empirical neighborhood laws, dominant-color statistics,
// cluster histograms, thermodynamic integration of the free energy, and the
// block-permutation procedure that generates per-cluster uniform colors
// while exposing which sites depend on the color permutation.

#include <cstdint>
#include <map>
#include <random>
#include <vector>

#include "potts/graph.hpp"
#include "potts/neighborhood_law.hpp"
#include "potts/params.hpp"

namespace potts {

// ---------------------------------------------------------------------------
// Conditional resampling steps

// Open probability of a single edge given the spins: p_edge on an agreeing
// base edge, p_ghost on a ghost edge whose base endpoint carries the field
// color, zero otherwise.  Shared by the samplers and the exact transition
// kernels the tests build.
double conditional_open_probability(const GhostGraph& gg, const Params& p,
                                    const SpinConfig& spins, int edge);

// Per-vertex cluster label (union-find root) of the open subgraph,
// including the ghost vertex entry at index gg.base.n.
std::vector<int> cluster_labels(const GhostGraph& gg, const BondConfig& bonds);

// Draw bonds given spins: each edge opens independently with
// conditional_open_probability.  One uniform draw is consumed per edge whose
// open probability is nonzero, in edge-index order.
BondConfig bonds_given_spins(const SpinConfig& spins, const GhostGraph& gg, const Params& p,
                             std::mt19937_64& rng);

// Draw spins given bonds: one uniform color per open cluster, the ghost
// cluster forced to the field color.  Colors are drawn lazily in vertex
// order, so the draw is deterministic given the rng state.
SpinConfig spins_given_bonds(const BondConfig& bonds, const GhostGraph& gg, const Params& p,
                             std::mt19937_64& rng);

// ---------------------------------------------------------------------------
// Chains

struct ChainState {
    SpinConfig spins;  // gg.base.n + 1 entries; ghost entry always the field color
    BondConfig bonds;
    std::mt19937_64 rng;
    std::int64_t sweep = 0;
};

struct Snapshot {
    SpinConfig spins;
    BondConfig bonds;
};

struct ChainBudget {
    int burn_in = 1000;   // sweeps discarded before the first snapshot
    int n_samples = 200;  // snapshots retained
    int thin = 10;        // sweeps between snapshots
    std::uint64_t seed = 0;

    void validate() const;
};

// Fresh chain started from the exact single-site equilibrium at coupling
// zero (iid spins tilted by the field), so thermodynamic integration scans
// that warm-start from increasing couplings track the equilibrium branch.
ChainState make_chain(const GhostGraph& gg, const Params& p, std::uint64_t seed);

// One full alternation: bonds given spins, then spins given bonds.
void sw_sweep(ChainState& st, const GhostGraph& gg, const Params& p);

// Burn in, then record n_samples snapshots every `thin` sweeps.  The chain
// state advances in place (run_chain_from) or is created fresh (run_chain).
// Deterministic given the seed.
std::vector<Snapshot> run_chain_from(ChainState& st, const GhostGraph& gg, const Params& p,
                                     const ChainBudget& budget);
std::vector<Snapshot> run_chain(const GhostGraph& gg, const Params& p, const ChainBudget& budget);

// Independent parallel chains; chain i uses a seed split from budget.seed
// and i, so reports depend only on (seed, n_chains), never on scheduling.
std::vector<std::vector<Snapshot>> run_chains(const GhostGraph& gg, const Params& p,
                                              const ChainBudget& budget, int n_chains);

// ---------------------------------------------------------------------------
// Estimators

struct EstimatorReport {
    double mean = 0.0;
    double std_error = 0.0;  // batch-means standard error
    std::int64_t n_samples = 0;
    int n_batches = 0;
};

// Batch-means mean/SE of a per-snapshot series; requires at least one value
// per batch.
EstimatorReport batch_means(const std::vector<double>& values, int n_batches = 20);

// Internal energy per vertex: (1/n) sum over edges of 1{spins agree}.
// This is the coupling-derivative of the free energy density.
EstimatorReport internal_energy(const std::vector<Snapshot>& snaps, const Graph& g,
                                int n_batches = 20);

// Fraction of base vertices carrying the given (0-based) color; color 0 is
// the field-derivative of the free energy density.
EstimatorReport color_density(const std::vector<Snapshot>& snaps, int n_base, int color,
                              int n_batches = 20);

// ---------------------------------------------------------------------------
// Thermodynamic integration

struct TiResult {
    double phi = 0.0;        // estimated free energy density at the grid end
    double mc_error = 0.0;   // propagated Monte Carlo SE of the integral
    double quad_error = 0.0; // second-difference trapezoid error estimate
    std::vector<double> grid;        // integration abscissae
    std::vector<double> derivative;  // estimated integrand at each point
    std::vector<double> derivative_se;
    std::vector<char> boosted;       // points that received the enlarged budget
};

// Free energy density by integrating the internal energy over the coupling
// at fixed field, starting from the closed form log(e^B + q - 1) at coupling
// zero.  beta_grid must start at 0 and increase; each point runs
// `per_point` sweeps warm-started from the previous point's final state.
// Points inside [boost_lo, boost_hi] (e.g. a window around the transition)
// get 4x burn-in and 4x samples and are flagged in the result.
TiResult free_energy_ti(const Graph& g, const Params& base, const std::vector<double>& beta_grid,
                        const ChainBudget& per_point, double boost_lo = 1.0,
                        double boost_hi = 0.0);

// Truncation of a completed scan at an intermediate grid point: the same
// trapezoid rule, error propagation, and curvature bound applied to the
// prefix ending at `target` (which must match a grid point to 1e-9), with
// the integration constant `start_value` at the grid origin.  Lets one scan
// serve several evaluation points.
TiResult ti_prefix(const TiResult& full, double target, double start_value);

// Companion leg at fixed coupling: integrates the color-1 density over the
// field from B = 0, starting from the supplied value of the free energy
// density at (beta, 0).  Used to check path-independence of the integral.
TiResult field_integral(const Graph& g, const Params& base, const std::vector<double>& B_grid,
                        double phi_at_field_zero, const ChainBudget& per_point);

// ---------------------------------------------------------------------------
// Local statistics

// Per-vertex flag: the radius-t ball is isomorphic to the regular tree ball.
std::vector<char> tree_iso_flags(const Graph& g, int t);

// Empirical law of spin patterns on radius-t balls, averaged over snapshots
// and over roots whose radius-2t ball is tree-isomorphic (the eligibility
// weight used by the local-proxy statistics).  Throws when no root
// qualifies or the pattern table exceeds the cap.
NeighborhoodLaw neighborhood_law_estimate(const Graph& g, const std::vector<Snapshot>& snaps,
                                          const Params& p, int t,
                                          std::int64_t cap = NeighborhoodLaw::default_cap);

// Colors attaining the maximal count among the first n_base entries.
std::vector<int> color_count_maximizers(const SpinConfig& spins, int n_base, int q);

// Dominant color with uniform tie-break (tie draws consume the dedicated
// rng only when there is an actual tie).
int dominant_color(const SpinConfig& spins, int n_base, int q, std::mt19937_64& tie_rng);

// Exact sample of the measure conditioned on dominant color k at zero
// field: applies the transposition (dominant, k) to the spins.  The global
// color symmetry makes the pushforward exact; throws when p.B > 0.
SpinConfig condition_on_dominant(const SpinConfig& spins, const Params& p, int n_base, int k,
                                 std::mt19937_64& tie_rng);

// Local dominant-color proxy at v: N(v,k) averages 1{color k} over the
// radius-ell ball, counting only vertices whose radius-2*ell ball is
// tree-isomorphic (pass tree_iso_flags(g, 2*ell)).  k_ell is the argmax
// (uniform tie-break), n1 the maximal value, n2 the best among other colors.
struct LocalDominant {
    int k_ell = 0;
    double n1 = 0.0;
    double n2 = 0.0;
};
LocalDominant local_dominant(const Graph& g, const SpinConfig& spins, int v, int ell, int q,
                             const std::vector<char>& iso2ell, std::mt19937_64& tie_rng);

// Open-cluster size histogram over base vertices; the cluster containing
// the ghost is excluded, so the size-weighted total is n minus the base
// size of the ghost cluster.
std::map<int, std::int64_t> cluster_histogram(const BondConfig& bonds, const GhostGraph& gg);

// ---------------------------------------------------------------------------
// Block-permutation uniform coloring

// Output of the uniform-coloring procedure on M items (open clusters of a
// common size): multinomially sized blocks are split into q base blocks of
// the minimum count and q excess blocks; a uniform color permutation gamma
// then names the excess blocks.  color[i] is exactly iid uniform over
// colors; items with in_excess[i] set are the ones whose color depends on
// gamma (the disagreement set of the two-permutation coupling).
struct SimUnifColors {
    std::vector<std::uint8_t> color;  // per item, 0-based
    std::vector<std::uint8_t> block;  // partition block label carrying the item
    std::vector<char> in_excess;      // item sits in an excess block
    std::vector<int> gamma;           // gamma[k] = excess-block label colored k
};
SimUnifColors sim_unif_colors(int M, int q, std::mt19937_64& rng);

// Recolor the same partition draw under another permutation; base-block
// items keep their colors, excess items follow gamma2.
std::vector<std::uint8_t> sim_unif_recolor(const SimUnifColors& a, const std::vector<int>& gamma2);

// ---------------------------------------------------------------------------
// Exact kernel (enumerable scale)

// One exact sweep of the cluster dynamics applied to a distribution over
// base spin patterns (big-endian base-q codes, as produced by the exact
// enumerators): sums over all bond configurations using the same
// conditional formulas the samplers draw from.  Enumerable scale only;
// throws std::length_error when q^n * 2^edges exceeds 2^26.
std::vector<double> sw_exact_pushforward(const GhostGraph& gg, const Params& p,
                                         const std::vector<double>& mu);

}  // namespace potts
