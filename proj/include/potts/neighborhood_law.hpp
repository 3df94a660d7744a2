#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "potts/tree_index.hpp"

namespace potts {

// Probability table over spin patterns on the depth-t ball of the d-regular
// tree, indexed by the big-endian base-q pattern code (see tree_index.hpp).
// Used both for exact finite-tree references and empirical estimates from
// sampled configurations on random regular graphs.
struct NeighborhoodLaw {
    int q = 2;
    int d = 3;
    int t = 0;
    int n_vertices = 1;
    std::vector<double> prob;  // size q^{n_vertices}

    static constexpr std::int64_t default_cap = std::int64_t{1} << 24;

    NeighborhoodLaw() = default;
    NeighborhoodLaw(int q, int d, int t, std::int64_t cap = default_cap);

    std::uint64_t table_size() const { return prob.size(); }

    double sum() const;
    void normalize();

    // Total-variation distance: (1/2) sum |p_i - q_i|.
    double tv_distance(const NeighborhoodLaw& other) const;
    double max_abs_diff(const NeighborhoodLaw& other) const;

    // Marginal law on the depth-t_report prefix ball.  Because patterns are
    // big-endian in BFS order, marginalization is a contiguous block sum.
    NeighborhoodLaw marginal_to_depth(int t_report) const;

    // Pushforward under a color permutation: perm[c] is the new name of
    // color c (0-based).
    NeighborhoodLaw permuted_colors(const std::vector<int>& perm) const;

    // CSV serialization: header "pattern_index,probability", one row per
    // nonzero entry, indices ascending.
    void to_csv(std::ostream& out) const;
    static NeighborhoodLaw from_csv(std::istream& in, int q, int d, int t);
    void save_csv(const std::string& path) const;
};

}  // namespace potts
