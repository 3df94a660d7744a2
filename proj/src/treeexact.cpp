#include "potts/treeexact.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "potts/tree_index.hpp"

namespace potts {

namespace {

void normalize_vec(std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    for (double& x : v) x /= s;
}

// Belief of a depth-t leaf: its own field factor times the boundary term.
std::vector<double> leaf_belief(const BoundarySpec& b, const Params& p) {
    std::vector<double> m(p.q, 0.0);
    switch (b.kind) {
        case BoundaryKind::FREE:
            for (int s = 0; s < p.q; ++s) m[s] = std::exp(p.B * (s == 0));
            break;
        case BoundaryKind::COLOR:
            if (b.color < 0 || b.color >= p.q)
                throw std::invalid_argument("leaf_belief: color out of range");
            m[b.color] = 1.0;
            break;
        case BoundaryKind::FIXEDPOINT_FREE:
        case BoundaryKind::FIXEDPOINT_WIRED: {
            BpStart start = b.kind == BoundaryKind::FIXEDPOINT_FREE ? BpStart::UNIFORM
                                                                    : BpStart::DELTA_1;
            SymmetricMeasure nu = bp_fixed_point(start, p);
            double eb1 = std::expm1(p.beta);
            for (int s = 0; s < p.q; ++s)
                m[s] = std::exp(p.B * (s == 0)) *
                       std::pow(eb1 * nu.mass(s) + 1.0, p.d - 1);
            break;
        }
    }
    normalize_vec(m);
    return m;
}

}  // namespace

std::vector<std::vector<double>> tree_messages(int t, const BoundarySpec& b,
                                               const Params& p) {
    if (t < 1) throw std::invalid_argument("tree_messages: need t >= 1");
    std::vector<std::vector<double>> msgs(t + 1);
    msgs[t] = leaf_belief(b, p);
    double eb1 = std::expm1(p.beta);
    for (int s = t - 1; s >= 0; --s) {
        int kids = (s == 0) ? p.d : p.d - 1;
        std::vector<double> m(p.q);
        for (int c = 0; c < p.q; ++c)
            m[c] = std::exp(p.B * (c == 0)) *
                   std::pow(eb1 * msgs[s + 1][c] + 1.0, kids);
        normalize_vec(m);
        msgs[s] = std::move(m);
    }
    return msgs;
}

std::vector<double> root_marginal(int t, const BoundarySpec& b, const Params& p) {
    return tree_messages(t, b, p)[0];
}

std::vector<double> pair_marginal(int t, const BoundarySpec& b, const Params& p) {
    std::vector<std::vector<double>> msgs = tree_messages(t, b, p);
    const std::vector<double>& m1 = msgs[1];
    double eb1 = std::expm1(p.beta);
    // root belief with the first child's subtree removed
    std::vector<double> g(p.q);
    for (int c = 0; c < p.q; ++c)
        g[c] = std::exp(p.B * (c == 0)) * std::pow(eb1 * m1[c] + 1.0, p.d - 1);
    std::vector<double> table(p.q * p.q);
    for (int si = 0; si < p.q; ++si)
        for (int sj = 0; sj < p.q; ++sj)
            table[si * p.q + sj] = std::exp(p.beta * (si == sj)) * g[si] * m1[sj];
    normalize_vec(table);
    return table;
}

double agreement_probability(int t, const BoundarySpec& b, const Params& p) {
    std::vector<double> table = pair_marginal(t, b, p);
    double s = 0.0;
    for (int c = 0; c < p.q; ++c) s += table[c * p.q + c];
    return s;
}

NeighborhoodLaw neighborhood_law(int t_report, int t_total, const BoundarySpec& b,
                                 const Params& p, std::int64_t cap) {
    if (t_total < 1) throw std::invalid_argument("neighborhood_law: need t_total >= 1");
    if (t_report < 0 || t_report > t_total)
        throw std::invalid_argument("neighborhood_law: need 0 <= t_report <= t_total");

    NeighborhoodLaw law(p.q, p.d, t_report, cap);
    TreeIndex ball = tree_index(p.d, t_report);
    int n = ball.n;
    int first_bdy = ball.level_start[t_report];
    int kids_below = (t_report == 0) ? p.d : p.d - 1;

    // Per-color log weight each reported boundary vertex receives from the
    // unreported part of the ball (or from the boundary term itself when the
    // whole ball is reported).  -infinity marks a forbidden color.
    constexpr double forbidden = -std::numeric_limits<double>::infinity();
    std::vector<double> log_below(p.q, 0.0);
    double eb1 = std::expm1(p.beta);
    if (t_report == t_total) {
        switch (b.kind) {
            case BoundaryKind::FREE:
                break;  // nothing attached
            case BoundaryKind::COLOR:
                for (int c = 0; c < p.q; ++c)
                    if (c != b.color) log_below[c] = forbidden;
                break;
            case BoundaryKind::FIXEDPOINT_FREE:
            case BoundaryKind::FIXEDPOINT_WIRED: {
                std::vector<double> leaf = leaf_belief(b, p);
                // leaf_belief already folds the leaf's own field factor in;
                // divide it back out since the pattern sum applies it below.
                for (int c = 0; c < p.q; ++c)
                    log_below[c] = std::log(leaf[c]) - p.B * (c == 0);
                break;
            }
        }
    } else {
        std::vector<std::vector<double>> msgs = tree_messages(t_total, b, p);
        const std::vector<double>& m = msgs[t_report + 1];
        for (int c = 0; c < p.q; ++c)
            log_below[c] = kids_below * std::log(eb1 * m[c] + 1.0);
    }

    std::vector<std::uint8_t> spin(n, 0);
    std::vector<double> logw(law.prob.size());
    double best = forbidden;
    for (std::uint64_t code = 0; code < law.prob.size(); ++code) {
        double lw = 0.0;
        for (int v = 0; v < n; ++v)
            if (spin[v] == 0) lw += p.B;
        for (const auto& [u, v] : ball.edges)
            if (spin[u] == spin[v]) lw += p.beta;
        for (int v = first_bdy; v < n; ++v) lw += log_below[spin[v]];
        logw[code] = lw;
        best = std::max(best, lw);
        // big-endian odometer over the pattern code
        for (int v = n - 1; v >= 0; --v) {
            if (++spin[v] < p.q) break;
            spin[v] = 0;
        }
    }
    for (std::uint64_t code = 0; code < law.prob.size(); ++code)
        law.prob[code] = logw[code] == forbidden ? 0.0 : std::exp(logw[code] - best);
    law.normalize();  // compensated sum keeps large tables accurate to ~1e-15
    return law;
}

NeighborhoodLaw wired_mixture_law(int t_report, int t_total, BoundaryKind base,
                                  const Params& p, std::int64_t cap) {
    if (p.B != 0.0)
        throw std::invalid_argument("wired_mixture_law: defined at B = 0 only");
    NeighborhoodLaw mix(p.q, p.d, t_report, cap);
    if (base == BoundaryKind::COLOR) {
        for (int k = 0; k < p.q; ++k) {
            NeighborhoodLaw lk =
                neighborhood_law(t_report, t_total, BoundarySpec::color_boundary(k), p, cap);
            for (std::size_t i = 0; i < mix.prob.size(); ++i)
                mix.prob[i] += lk.prob[i] / p.q;
        }
    } else if (base == BoundaryKind::FIXEDPOINT_WIRED) {
        NeighborhoodLaw l0 =
            neighborhood_law(t_report, t_total, BoundarySpec::fixedpoint_wired(), p, cap);
        std::vector<int> perm(p.q);
        for (int k = 0; k < p.q; ++k) {
            for (int c = 0; c < p.q; ++c) perm[c] = c;
            perm[0] = k;
            perm[k] = 0;
            NeighborhoodLaw lk = l0.permuted_colors(perm);
            for (std::size_t i = 0; i < mix.prob.size(); ++i)
                mix.prob[i] += lk.prob[i] / p.q;
        }
    } else {
        throw std::invalid_argument("wired_mixture_law: base must be COLOR or FIXEDPOINT_WIRED");
    }
    return mix;
}

std::vector<double> rcm_edge_connectivity(int t, BpStart ddagger, const Params& p) {
    if (t < 1) throw std::invalid_argument("rcm_edge_connectivity: need t >= 1");
    BoundarySpec b = ddagger == BpStart::UNIFORM ? BoundarySpec::fixedpoint_free()
                                                 : BoundarySpec::fixedpoint_wired();
    double agree = agreement_probability(1, b, p);
    double phi = (agree - 1.0 / p.q) / (1.0 - 1.0 / p.q);
    TreeIndex ball = tree_index(p.d, t);
    return std::vector<double>(ball.n - 1, phi);
}

}  // namespace potts
