#include "potts/oracle.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <queue>
#include <random>
#include <stdexcept>

#include "potts/bethe.hpp"
#include "potts/union_find.hpp"

namespace potts {

namespace {

// Throws when an enumeration would visit more than the oracle cap.
void check_cap(std::uint64_t n_configs, const char* what) {
    if (n_configs > oracle_enum_cap) {
        throw std::length_error(std::string(what) +
                                ": instance exceeds the enumeration cap");
    }
}

// q^k lookup up to k = n (small n only).
std::vector<double> q_powers(int q, int n) {
    std::vector<double> pw(n + 1, 1.0);
    for (int k = 1; k <= n; ++k) pw[k] = pw[k - 1] * q;
    return pw;
}

// Advances a base-q odometer stored most-significant-first; returns false
// after the last configuration.  Keeps the digit vector in sync with a
// linearly increasing big-endian code.
bool next_spins(std::vector<std::uint8_t>& s, int q) {
    for (int i = static_cast<int>(s.size()) - 1; i >= 0; --i) {
        if (++s[i] < q) return true;
        s[i] = 0;
    }
    return false;
}

// Open/closed weight factors per edge of a ghost graph.
struct EdgeFactors {
    std::vector<double> open_f, closed_f;
    EdgeFactors(const GhostGraph& gg, const Params& p) {
        int m = gg.num_edges();
        open_f.resize(m);
        closed_f.resize(m);
        for (int e = 0; e < m; ++e) {
            double pe = gg.is_ghost_edge(e) ? p.p_ghost() : p.p_edge();
            open_f[e] = pe;
            closed_f[e] = 1.0 - pe;
        }
    }
};

// Shared partition-function scale e^{beta |E| + B n} / q that puts the
// bond-side enumerations on the Potts normalization.
double bond_scale(const GhostGraph& gg, const Params& p) {
    return std::exp(p.beta * gg.base.num_edges() + p.B * gg.base.n) / p.q;
}

void finalize(ExactDistribution& d, double raw_total, double scale) {
    d.Z = raw_total * scale;
    d.log_Z = std::log(raw_total) + std::log(scale);
    for (double& x : d.prob) x /= raw_total;
}

}  // namespace

double ExactDistribution::total() const {
    return std::accumulate(prob.begin(), prob.end(), 0.0);
}

// --- exact laws --------------------------------------------------------------

ExactDistribution enumerate_potts(const Graph& g, const Params& p) {
    std::uint64_t n_configs = pow_u64(p.q, g.n);
    check_cap(n_configs, "enumerate_potts");
    ExactDistribution d;
    d.n_sites = g.n;
    d.prob.assign(n_configs, 0.0);
    std::vector<std::uint8_t> s(g.n, 0);
    double total = 0.0;
    for (std::uint64_t code = 0; code < n_configs; ++code) {
        int agree = 0;
        for (const auto& [u, v] : g.edges) agree += (s[u] == s[v]);
        int field = 0;
        for (int v = 0; v < g.n; ++v) field += (s[v] == 0);
        double w = std::exp(p.beta * agree + p.B * field);
        d.prob[code] = w;
        total += w;
        next_spins(s, p.q);
    }
    finalize(d, total, 1.0);
    return d;
}

ExactDistribution enumerate_potts(const GhostGraph& gg, const Params& p) {
    std::uint64_t n_configs = pow_u64(p.q, gg.base.n);
    check_cap(n_configs, "enumerate_potts");
    ExactDistribution d;
    d.n_sites = gg.base.n;
    d.prob.assign(n_configs, 0.0);
    std::vector<std::uint8_t> s(gg.base.n, 0);
    double total = 0.0;
    int m = gg.num_edges();
    for (std::uint64_t code = 0; code < n_configs; ++code) {
        // Every edge of the amended graph contributes its coupling when the
        // endpoints agree; the ghost is pinned to color 0.
        double energy = 0.0;
        for (int e = 0; e < m; ++e) {
            auto [u, v] = gg.edge(e);
            std::uint8_t cu = (u == gg.ghost()) ? 0 : s[u];
            std::uint8_t cv = (v == gg.ghost()) ? 0 : s[v];
            if (cu == cv) energy += gg.is_ghost_edge(e) ? p.B : p.beta;
        }
        double w = std::exp(energy);
        d.prob[code] = w;
        total += w;
        next_spins(s, p.q);
    }
    finalize(d, total, 1.0);
    return d;
}

ExactDistribution enumerate_rcm(const GhostGraph& gg, const Params& p) {
    int m = gg.num_edges();
    check_cap(std::uint64_t{1} << m, "enumerate_rcm");
    ExactDistribution d;
    d.n_sites = m;
    d.prob.assign(std::uint64_t{1} << m, 0.0);
    EdgeFactors f(gg, p);
    auto qp = q_powers(p.q, gg.num_vertices());
    UnionFind uf(gg.num_vertices());
    double total = 0.0;
    for (std::uint64_t mask = 0; mask < d.prob.size(); ++mask) {
        uf.reset();
        double w = 1.0;
        for (int e = 0; e < m; ++e) {
            if (mask >> e & 1) {
                w *= f.open_f[e];
                auto [u, v] = gg.edge(e);
                uf.unite(u, v);
            } else {
                w *= f.closed_f[e];
            }
        }
        w *= qp[uf.components];
        d.prob[mask] = w;
        total += w;
    }
    finalize(d, total, bond_scale(gg, p));
    return d;
}

namespace {

// Direct per-cluster field marginalization over the base edges: the raw
// weight of a base bond configuration after summing the ghost bonds out is
// q * prod_e p^eta (1-p)^{1-eta} * prod_clusters (1 + (q-1) e^{-B |C|}).
ExactDistribution marginal_rcm_direct(const Graph& g, const Params& p) {
    int m = g.num_edges();
    check_cap(std::uint64_t{1} << m, "marginal_rcm");
    ExactDistribution d;
    d.n_sites = m;
    d.prob.assign(std::uint64_t{1} << m, 0.0);
    double pe = p.p_edge();
    std::vector<double> decay(g.n + 1);
    for (int k = 0; k <= g.n; ++k) decay[k] = 1.0 + (p.q - 1) * std::exp(-p.B * k);
    UnionFind uf(g.n);
    std::vector<int> size(g.n);
    double total = 0.0;
    for (std::uint64_t mask = 0; mask < d.prob.size(); ++mask) {
        uf.reset();
        double w = 1.0;
        for (int e = 0; e < m; ++e) {
            if (mask >> e & 1) {
                w *= pe;
                uf.unite(g.edges[e].first, g.edges[e].second);
            } else {
                w *= 1.0 - pe;
            }
        }
        std::fill(size.begin(), size.end(), 0);
        for (int v = 0; v < g.n; ++v) ++size[uf.find(v)];
        for (int v = 0; v < g.n; ++v)
            if (size[v] > 0) w *= decay[size[v]];
        d.prob[mask] = w;
        total += w;
    }
    // The ghost-bond sum contributes one factor q (the ghost cluster), so the
    // scale q/q = 1 times the edge-energy prefactor keeps Z on the shared
    // normalization.
    finalize(d, total, std::exp(p.beta * m + p.B * g.n));
    return d;
}

}  // namespace

double marginal_rcm_residual(const Graph& g, const Params& p) {
    ExactDistribution direct = marginal_rcm_direct(g, p);
    ExactDistribution full = enumerate_rcm(GhostGraph(g), p);
    std::uint64_t base_masks = std::uint64_t{1} << g.num_edges();
    std::vector<double> summed(base_masks, 0.0);
    for (std::uint64_t mask = 0; mask < full.prob.size(); ++mask)
        summed[mask & (base_masks - 1)] += full.prob[mask];
    double r = std::abs(direct.Z / full.Z - 1.0);
    for (std::uint64_t mask = 0; mask < base_masks; ++mask)
        r = std::max(r, std::abs(summed[mask] - direct.prob[mask]));
    return r;
}

ExactDistribution marginal_rcm(const Graph& g, const Params& p) {
    if (marginal_rcm_residual(g, p) > 1e-12)
        throw std::logic_error("marginal_rcm: dual computations disagree");
    return marginal_rcm_direct(g, p);
}

ExactDistribution enumerate_es(const GhostGraph& gg, const Params& p) {
    int n = gg.base.n, m = gg.num_edges();
    std::uint64_t n_spins = pow_u64(p.q, n);
    check_cap(n_spins << m, "enumerate_es");
    ExactDistribution d;
    d.n_sites = n;
    d.prob.assign(n_spins << m, 0.0);
    EdgeFactors f(gg, p);
    std::vector<std::uint8_t> s(n, 0);
    double total = 0.0;
    for (std::uint64_t code = 0; code < n_spins; ++code) {
        for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << m); ++mask) {
            double w = 1.0;
            for (int e = 0; e < m && w != 0.0; ++e) {
                auto [u, v] = gg.edge(e);
                bool agree = (v == gg.ghost()) ? (s[u] == 0) : (s[u] == s[v]);
                w *= (mask >> e & 1) ? (agree ? f.open_f[e] : 0.0) : f.closed_f[e];
            }
            if (w != 0.0) {
                d.prob[(code << m) | mask] = w;
                total += w;
            }
        }
        next_spins(s, p.q);
    }
    finalize(d, total, std::exp(p.beta * gg.base.num_edges() + p.B * n));
    return d;
}

// --- coupling residuals --------------------------------------------------------

double es_consistency(const GhostGraph& gg, const Params& p) {
    int n = gg.base.n, m = gg.num_edges();
    std::uint64_t n_spins = pow_u64(p.q, n);
    check_cap(n_spins << m, "es_consistency");
    std::uint64_t n_masks = std::uint64_t{1} << m;

    ExactDistribution potts = enumerate_potts(gg, p);
    ExactDistribution rcm = enumerate_rcm(gg, p);

    // Stream the joint law: for each coloring, only bond configurations whose
    // open edges all agree carry weight, i.e. the submasks of the agreeing
    // edge set.  Open/closed factors are applied edge by edge.
    EdgeFactors f(gg, p);
    std::vector<double> ratio(m);
    double all_closed = 1.0;
    for (int e = 0; e < m; ++e) {
        all_closed *= f.closed_f[e];
        ratio[e] = f.closed_f[e] > 0.0 ? f.open_f[e] / f.closed_f[e] : 0.0;
    }
    std::vector<double> spin_marg(n_spins, 0.0), bond_marg(n_masks, 0.0);
    std::vector<std::uint32_t> pair_count(n_masks, 0);
    std::vector<std::uint8_t> s(n, 0);
    double total = 0.0;
    for (std::uint64_t code = 0; code < n_spins; ++code) {
        std::uint64_t agree_mask = 0;
        for (int e = 0; e < m; ++e) {
            auto [u, v] = gg.edge(e);
            bool agree = (v == gg.ghost()) ? (s[u] == 0) : (s[u] == s[v]);
            if (agree) agree_mask |= std::uint64_t{1} << e;
        }
        std::uint64_t sub = agree_mask;
        while (true) {
            double w = all_closed;
            for (std::uint64_t bits = sub; bits; bits &= bits - 1)
                w *= ratio[std::countr_zero(bits)];
            spin_marg[code] += w;
            bond_marg[sub] += w;
            ++pair_count[sub];
            total += w;
            if (sub == 0) break;
            sub = (sub - 1) & agree_mask;
        }
        next_spins(s, p.q);
    }

    double res = 0.0;
    double Zes = total * std::exp(p.beta * gg.base.num_edges() + p.B * n);
    res = std::max(res, std::abs(Zes / potts.Z - 1.0));
    res = std::max(res, std::abs(rcm.Z / potts.Z - 1.0));
    for (std::uint64_t code = 0; code < n_spins; ++code)
        res = std::max(res, std::abs(spin_marg[code] / total - potts.prob[code]));
    for (std::uint64_t mask = 0; mask < n_masks; ++mask)
        res = std::max(res, std::abs(bond_marg[mask] / total - rcm.prob[mask]));

    // Conditional spin law given the bonds: one uniform color per cluster
    // with the ghost cluster pinned, i.e. every compatible coloring gets
    // q^{-(clusters-1)} and there are exactly q^{clusters-1} of them.
    UnionFind uf(gg.num_vertices());
    auto qp = q_powers(p.q, gg.num_vertices());
    for (std::uint64_t mask = 0; mask < n_masks; ++mask) {
        if (bond_marg[mask] <= 0.0) continue;
        uf.reset();
        for (std::uint64_t bits = mask; bits; bits &= bits - 1) {
            auto [u, v] = gg.edge(std::countr_zero(bits));
            uf.unite(u, v);
        }
        double uniform = 1.0 / qp[uf.components - 1];
        res = std::max(res, std::abs(pair_count[mask] * uniform - 1.0));
        // every visited (spin, bond) pair of this mask carries equal weight,
        // so the conditional probability is weight / marginal
        double w = bond_marg[mask] / pair_count[mask];
        res = std::max(res, std::abs(w / bond_marg[mask] - uniform));
    }
    return res;
}

double correlation_identity_residual(const GhostGraph& gg, const Params& p) {
    int n = gg.base.n, m = gg.num_edges();
    ExactDistribution potts = enumerate_potts(gg, p);
    ExactDistribution rcm = enumerate_rcm(gg, p);

    std::vector<double> agree(n * n, 0.0), joined(n * n, 0.0);
    std::vector<std::uint8_t> s(n, 0);
    for (std::uint64_t code = 0; code < potts.prob.size(); ++code) {
        for (int u = 0; u < n; ++u)
            for (int v = u + 1; v < n; ++v)
                if (s[u] == s[v]) agree[u * n + v] += potts.prob[code];
        next_spins(s, p.q);
    }
    UnionFind uf(gg.num_vertices());
    for (std::uint64_t mask = 0; mask < rcm.prob.size(); ++mask) {
        if (rcm.prob[mask] <= 0.0) continue;
        uf.reset();
        for (std::uint64_t bits = mask; bits; bits &= bits - 1) {
            auto [u, v] = gg.edge(std::countr_zero(bits));
            uf.unite(u, v);
        }
        for (int u = 0; u < n; ++u)
            for (int v = u + 1; v < n; ++v)
                if (uf.connected(u, v)) joined[u * n + v] += rcm.prob[mask];
    }
    (void)m;
    double res = 0.0;
    for (int u = 0; u < n; ++u)
        for (int v = u + 1; v < n; ++v) {
            double lhs = agree[u * n + v];
            double rhs = (1.0 - 1.0 / p.q) * joined[u * n + v] + 1.0 / p.q;
            res = std::max(res, std::abs(lhs - rhs));
        }
    return res;
}

// --- restricted partition functions ------------------------------------------

double restricted_Z(const GhostGraph& gg, const std::vector<int>& fixed_edges,
                    std::uint64_t y, const Params& p) {
    int m = gg.num_edges();
    std::vector<char> is_fixed(m, 0);
    for (int e : fixed_edges) is_fixed[e] = 1;
    std::vector<int> free_edges;
    for (int e = 0; e < m; ++e)
        if (!is_fixed[e]) free_edges.push_back(e);
    int nf = static_cast<int>(free_edges.size());
    check_cap(std::uint64_t{1} << nf, "restricted_Z");

    EdgeFactors f(gg, p);
    std::uint64_t base_mask = 0;
    double fixed_factor = 1.0;
    for (std::size_t i = 0; i < fixed_edges.size(); ++i) {
        if (y >> i & 1) {
            base_mask |= std::uint64_t{1} << fixed_edges[i];
            fixed_factor *= f.open_f[fixed_edges[i]];
        } else {
            fixed_factor *= f.closed_f[fixed_edges[i]];
        }
    }
    auto qp = q_powers(p.q, gg.num_vertices());
    UnionFind uf(gg.num_vertices());
    double total = 0.0;
    for (std::uint64_t sub = 0; sub < (std::uint64_t{1} << nf); ++sub) {
        std::uint64_t mask = base_mask;
        double w = fixed_factor;
        for (int j = 0; j < nf; ++j) {
            if (sub >> j & 1) {
                mask |= std::uint64_t{1} << free_edges[j];
                w *= f.open_f[free_edges[j]];
            } else {
                w *= f.closed_f[free_edges[j]];
            }
        }
        uf.reset();
        for (std::uint64_t bits = mask; bits; bits &= bits - 1) {
            auto [u, v] = gg.edge(std::countr_zero(bits));
            uf.unite(u, v);
        }
        total += w * qp[uf.components];
    }
    return total * bond_scale(gg, p);
}

double pre_message(const GhostGraph& ball, int u, int v,
                   const std::vector<int>& outside, std::uint64_t y,
                   const Params& p) {
    int m = ball.num_edges();
    int closed_edge = -1;
    for (int e = 0; e < ball.base.num_edges(); ++e) {
        auto [a, b] = ball.edge(e);
        if ((a == u && b == v) || (a == v && b == u)) {
            closed_edge = e;
            break;
        }
    }
    if (closed_edge < 0) throw std::invalid_argument("pre_message: (u,v) is not an edge");

    std::vector<char> frozen(m, 0);
    frozen[closed_edge] = 1;
    std::uint64_t base_mask = 0;
    for (std::size_t i = 0; i < outside.size(); ++i) {
        frozen[outside[i]] = 1;
        if (y >> i & 1) base_mask |= std::uint64_t{1} << outside[i];
    }
    std::vector<int> free_edges;
    for (int e = 0; e < m; ++e)
        if (!frozen[e]) free_edges.push_back(e);
    int nf = static_cast<int>(free_edges.size());
    check_cap(std::uint64_t{1} << nf, "pre_message");

    EdgeFactors f(ball, p);
    auto qp = q_powers(p.q, ball.num_vertices());
    UnionFind uf(ball.num_vertices());
    double num = 0.0, den = 0.0;
    for (std::uint64_t sub = 0; sub < (std::uint64_t{1} << nf); ++sub) {
        std::uint64_t mask = base_mask;
        double w = 1.0;
        for (int j = 0; j < nf; ++j) {
            if (sub >> j & 1) {
                mask |= std::uint64_t{1} << free_edges[j];
                w *= f.open_f[free_edges[j]];
            } else {
                w *= f.closed_f[free_edges[j]];
            }
        }
        uf.reset();
        for (std::uint64_t bits = mask; bits; bits &= bits - 1) {
            auto [a, b] = ball.edge(std::countr_zero(bits));
            uf.unite(a, b);
        }
        w *= qp[uf.components];
        den += w;
        if (uf.connected(u, ball.ghost())) num += w;
    }
    return num / den;
}

namespace {

// Tree edges below depth t come last in the child-ordered edge list, so the
// frozen ("outside the depth-t sub-ball") edges of the depth-r ball are a
// suffix of the tree edges plus a suffix of the ghost edges.
std::vector<int> outside_edges_full(const TreeIndex& ball, int t) {
    std::vector<int> w;
    int first_deep = ball.level_start[t + 1];
    for (int child = first_deep; child < ball.n; ++child) w.push_back(child - 1);
    for (int v = first_deep; v < ball.n; ++v) w.push_back(ball.n - 1 + v);
    return w;
}

}  // namespace

SurgeryCheck surgery_ratio_check(int d, int r, int t, std::uint64_t y,
                                 const Params& p,
                                 const std::optional<std::vector<int>>& pi) {
    if (t < 1 || t >= r) throw std::invalid_argument("surgery_ratio_check: need 1 <= t < r");
    TreeIndex ball = tree_index(d, r);
    int N = ball.n;
    GhostGraph full{ball.to_graph()};

    // The root-removed graph re-indexes vertex v as v-1 and drops the d root
    // edges (the first d entries of the child-ordered list).
    std::vector<std::pair<int, int>> minus_edges;
    for (int e = d; e < N - 1; ++e)
        minus_edges.emplace_back(ball.edges[e].first - 1, ball.edges[e].second - 1);
    GhostGraph minus{Graph(N - 1, minus_edges)};

    int first_deep = ball.level_start[t + 1];
    std::vector<int> w_full = outside_edges_full(ball, t);
    std::vector<int> w_minus;
    for (int child = first_deep; child < N; ++child) w_minus.push_back(child - 1 - d);
    for (int v = first_deep; v < N; ++v)
        w_minus.push_back(static_cast<int>(minus_edges.size()) + v - 1);

    double Z_full = restricted_Z(full, w_full, y, p);
    double Z_minus = restricted_Z(minus, w_minus, y, p);

    std::vector<double> s(d);
    for (int i = 0; i < d; ++i) s[i] = pre_message(full, i + 1, 0, w_full, y, p);

    SurgeryCheck out;
    double rhs_vx = psi_vx(s, p);
    out.residual_vx = std::abs(Z_full / Z_minus / rhs_vx - 1.0);

    if (pi) {
        if (d % 2 != 0)
            throw std::invalid_argument("surgery_ratio_check: rewiring needs even degree");
        if (static_cast<int>(pi->size()) != d)
            throw std::invalid_argument("surgery_ratio_check: permutation size != d");
        std::vector<std::pair<int, int>> rw_edges = minus_edges;
        for (int i = 0; i < d / 2; ++i) {
            int a = (*pi)[2 * i], b = (*pi)[2 * i + 1];
            rw_edges.emplace_back(std::min(a, b), std::max(a, b));
        }
        GhostGraph rewired{Graph(N - 1, rw_edges)};
        std::vector<int> w_rw;
        for (int child = first_deep; child < N; ++child) w_rw.push_back(child - 1 - d);
        for (int v = first_deep; v < N; ++v)
            w_rw.push_back(static_cast<int>(rw_edges.size()) + v - 1);
        double Z_pi = restricted_Z(rewired, w_rw, y, p);
        std::vector<double> sp(d);
        for (int i = 0; i < d; ++i) sp[i] = s[(*pi)[i]];
        double rhs_e = psi_e(sp, p);
        out.residual_e = std::abs(Z_pi / Z_minus / rhs_e - 1.0);
    }
    return out;
}

// --- boundary partitions -------------------------------------------------------

int BoundaryPartition::n_blocks() const {
    return 1 + *std::max_element(block.begin(), block.end());
}

bool BoundaryPartition::ghost_isolated() const {
    for (std::size_t i = 1; i < block.size(); ++i)
        if (block[i] == 0) return false;
    return true;
}

bool BoundaryPartition::refines(const BoundaryPartition& coarser) const {
    std::uint64_t mine = boundary_edge_mask(*this);
    std::uint64_t theirs = boundary_edge_mask(coarser);
    return (mine & ~theirs) == 0;
}

std::vector<BoundaryPartition> enumerate_boundary_partitions(int m) {
    std::vector<BoundaryPartition> out;
    std::vector<int> rgs(m + 1, 0);
    // lexicographic restricted-growth enumeration over elements 1..m
    // (element 0, the ghost, is pinned to block 0)
    while (true) {
        out.push_back(BoundaryPartition{rgs});
        int i = m;
        for (; i >= 1; --i) {
            int prefix_max = *std::max_element(rgs.begin(), rgs.begin() + i);
            if (rgs[i] <= prefix_max) {
                ++rgs[i];
                std::fill(rgs.begin() + i + 1, rgs.end(), 0);
                break;
            }
            rgs[i] = 0;
        }
        if (i == 0) break;
    }
    return out;
}

std::uint64_t boundary_edge_mask(const BoundaryPartition& C) {
    int m = C.n_boundary();
    std::uint64_t mask = 0;
    int bit = 0;
    for (int i = 1; i <= m; ++i)
        for (int j = i + 1; j <= m; ++j, ++bit)
            if (C.block[i] == C.block[j]) mask |= std::uint64_t{1} << bit;
    for (int i = 1; i <= m; ++i, ++bit)
        if (C.block[i] == 0) mask |= std::uint64_t{1} << bit;
    return mask;
}

bool all_singletons_outside_ghost(const BoundaryPartition& C) {
    int m = C.n_boundary();
    for (int i = 1; i <= m; ++i)
        for (int j = i + 1; j <= m; ++j)
            if (C.block[i] == C.block[j]) return false;
    return true;
}

// --- boundary-conditioned tree-ball functionals ---------------------------------

namespace {

// Merges the boundary partition into a union-find over ball vertices plus
// the ghost (index ball.n).
void seed_partition(UnionFind& uf, const TreeIndex& ball, const BoundaryPartition& C) {
    int first_bdy = ball.level_start[ball.t];
    int m = C.n_boundary();
    std::vector<int> rep(C.n_blocks(), -1);
    rep[0] = ball.n;  // ghost
    for (int i = 1; i <= m; ++i) {
        int v = first_bdy + i - 1;
        if (rep[C.block[i]] < 0)
            rep[C.block[i]] = v;
        else
            uf.unite(rep[C.block[i]], v);
    }
}

void open_bonds(UnionFind& uf, const GhostGraph& gg, std::uint64_t mask) {
    for (std::uint64_t bits = mask; bits; bits &= bits - 1) {
        auto [u, v] = gg.edge(std::countr_zero(bits));
        uf.unite(u, v);
    }
}

}  // namespace

int gF_value(const TreeIndex& ball, int s, std::uint64_t bond_mask,
             const BoundaryPartition& C) {
    if (ball.t != s + 1) throw std::invalid_argument("gF_value: ball depth must be s+1");
    GhostGraph gg{ball.to_graph()};
    UnionFind uf(gg.num_vertices());
    seed_partition(uf, ball, C);
    open_bonds(uf, gg, bond_mask);
    int total = 0;
    for (int i = ball.level_start[s]; i < ball.level_start[s + 1]; ++i) {
        if (s > 0 && uf.connected(i, ball.parent[i])) ++total;
        auto [c0, c1] = ball.children(i);
        for (int j = c0; j < c1; ++j)
            if (uf.connected(i, j)) ++total;
    }
    return total;
}

double gF_expectation(int d, int s, const BoundaryPartition& C, const Params& p) {
    TreeIndex ball = tree_index(d, s + 1);
    GhostGraph gg{ball.to_graph()};
    int m = gg.num_edges();
    check_cap(std::uint64_t{1} << m, "gF_expectation");
    if (C.n_boundary() != ball.num_leaves())
        throw std::invalid_argument("gF_expectation: partition size mismatch");

    EdgeFactors f(gg, p);
    auto qp = q_powers(p.q, gg.num_vertices());
    UnionFind uf(gg.num_vertices());
    double num = 0.0, den = 0.0;
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << m); ++mask) {
        uf.reset();
        seed_partition(uf, ball, C);
        double w = 1.0;
        for (int e = 0; e < m; ++e) {
            if (mask >> e & 1) {
                w *= f.open_f[e];
                auto [u, v] = gg.edge(e);
                uf.unite(u, v);
            } else {
                w *= f.closed_f[e];
            }
        }
        if (w == 0.0) continue;
        w *= qp[uf.components];
        int val = 0;
        for (int i = ball.level_start[s]; i < ball.level_start[s + 1]; ++i) {
            if (s > 0 && uf.connected(i, ball.parent[i])) ++val;
            auto [c0, c1] = ball.children(i);
            for (int j = c0; j < c1; ++j)
                if (uf.connected(i, j)) ++val;
        }
        num += w * val;
        den += w;
    }
    return num / den;
}

std::vector<double> induced_boundary_law(int d, int t, int T,
                                         const BoundaryPartition& CT,
                                         const Params& p) {
    if (t < 1 || t >= T) throw std::invalid_argument("induced_boundary_law: need 1 <= t < T");
    TreeIndex ball = tree_index(d, T);
    GhostGraph gg{ball.to_graph()};
    int m = gg.num_edges();
    check_cap(std::uint64_t{1} << m, "induced_boundary_law");
    if (CT.n_boundary() != ball.num_leaves())
        throw std::invalid_argument("induced_boundary_law: partition size mismatch");

    int first_sub = ball.level_start[t];
    int first_deep = ball.level_start[t + 1];
    int m_sub = first_deep - first_sub;  // boundary size of the depth-t sub-ball
    std::vector<BoundaryPartition> parts = enumerate_boundary_partitions(m_sub);
    std::map<std::vector<int>, int> index_of;
    for (std::size_t i = 0; i < parts.size(); ++i) index_of[parts[i].block] = static_cast<int>(i);

    // outside bonds: tree edges into depth > t and ghost edges of depth > t
    std::uint64_t outside_mask = 0;
    for (int child = first_deep; child < ball.n; ++child)
        outside_mask |= std::uint64_t{1} << (child - 1);
    for (int v = first_deep; v < ball.n; ++v)
        outside_mask |= std::uint64_t{1} << (ball.n - 1 + v);

    EdgeFactors f(gg, p);
    auto qp = q_powers(p.q, gg.num_vertices());
    UnionFind uf_all(gg.num_vertices());
    UnionFind uf_out(gg.num_vertices());
    std::vector<double> law(parts.size(), 0.0);
    std::vector<int> rgs(m_sub + 1), block_id(gg.num_vertices());
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << m); ++mask) {
        double w = 1.0;
        for (int e = 0; e < m; ++e) w *= (mask >> e & 1) ? f.open_f[e] : f.closed_f[e];
        if (w == 0.0) continue;
        uf_all.reset();
        seed_partition(uf_all, ball, CT);
        open_bonds(uf_all, gg, mask);
        w *= qp[uf_all.components];

        uf_out.reset();
        seed_partition(uf_out, ball, CT);
        open_bonds(uf_out, gg, mask & outside_mask);
        std::fill(block_id.begin(), block_id.end(), -1);
        int next = 0;
        int g_root = uf_out.find(gg.ghost());
        block_id[g_root] = next++;
        rgs[0] = 0;
        for (int i = 1; i <= m_sub; ++i) {
            int root = uf_out.find(first_sub + i - 1);
            if (block_id[root] < 0) block_id[root] = next++;
            rgs[i] = block_id[root];
        }
        law[index_of.at(rgs)] += w;
    }
    double total = std::accumulate(law.begin(), law.end(), 0.0);
    for (double& x : law) x /= total;
    return law;
}

std::vector<double> boundary_law_free(int d, int t, const Params& p) {
    TreeIndex ball = tree_index(d, t + 1);
    std::vector<int> rgs(ball.num_leaves() + 1);
    std::iota(rgs.begin(), rgs.end(), 0);
    return induced_boundary_law(d, t, t + 1, BoundaryPartition{rgs}, p);
}

std::vector<double> boundary_law_wired(int d, int t, const Params& p) {
    TreeIndex ball = tree_index(d, t + 1);
    std::vector<int> rgs(ball.num_leaves() + 1, 0);
    return induced_boundary_law(d, t, t + 1, BoundaryPartition{rgs}, p);
}

// --- monotone-coupling feasibility ----------------------------------------------

namespace {

// Dinic max-flow on a small dense graph with double capacities.
struct FlowNet {
    struct Arc {
        int to;
        double cap;
        int rev;
    };
    std::vector<std::vector<Arc>> adj;
    std::vector<int> level, iter;

    explicit FlowNet(int n) : adj(n), level(n), iter(n) {}

    void add(int u, int v, double cap) {
        adj[u].push_back({v, cap, static_cast<int>(adj[v].size())});
        adj[v].push_back({u, 0.0, static_cast<int>(adj[u].size()) - 1});
    }

    bool bfs(int s, int t) {
        std::fill(level.begin(), level.end(), -1);
        std::queue<int> q;
        level[s] = 0;
        q.push(s);
        while (!q.empty()) {
            int u = q.front();
            q.pop();
            for (const Arc& a : adj[u])
                if (a.cap > 1e-15 && level[a.to] < 0) {
                    level[a.to] = level[u] + 1;
                    q.push(a.to);
                }
        }
        return level[t] >= 0;
    }

    double dfs(int u, int t, double f) {
        if (u == t) return f;
        for (int& i = iter[u]; i < static_cast<int>(adj[u].size()); ++i) {
            Arc& a = adj[u][i];
            if (a.cap > 1e-15 && level[a.to] == level[u] + 1) {
                double got = dfs(a.to, t, std::min(f, a.cap));
                if (got > 0.0) {
                    a.cap -= got;
                    adj[a.to][a.rev].cap += got;
                    return got;
                }
            }
        }
        return 0.0;
    }

    double max_flow(int s, int t) {
        double flow = 0.0;
        while (bfs(s, t)) {
            std::fill(iter.begin(), iter.end(), 0);
            double f;
            while ((f = dfs(s, t, 1e30)) > 0.0) flow += f;
        }
        return flow;
    }
};

}  // namespace

StochasticOrderResult stochastic_order(const std::vector<double>& rho_low,
                                       const std::vector<double>& rho_high,
                                       const std::vector<std::uint64_t>& order_mask,
                                       double slack) {
    if (rho_low.size() != order_mask.size() || rho_high.size() != order_mask.size())
        throw std::invalid_argument("stochastic_order: size mismatch");
    int k = static_cast<int>(order_mask.size());
    int S = 0, T = 2 * k + 1;
    FlowNet net(2 * k + 2);
    std::vector<std::vector<int>> arc_idx(k, std::vector<int>(k, -1));
    for (int i = 0; i < k; ++i) net.add(S, 1 + i, rho_low[i]);
    for (int j = 0; j < k; ++j) net.add(1 + k + j, T, rho_high[j]);
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j)
            if ((order_mask[i] & ~order_mask[j]) == 0) {
                arc_idx[i][j] = static_cast<int>(net.adj[1 + i].size());
                net.add(1 + i, 1 + k + j, 2.0);
            }
    double want = std::accumulate(rho_low.begin(), rho_low.end(), 0.0);
    double flow = net.max_flow(S, T);
    StochasticOrderResult out;
    out.mass_shortfall = std::max(0.0, want - flow);
    out.feasible = out.mass_shortfall <= slack;
    if (out.feasible) {
        out.coupling.assign(k, std::vector<double>(k, 0.0));
        for (int i = 0; i < k; ++i)
            for (int j = 0; j < k; ++j)
                if (arc_idx[i][j] >= 0)
                    out.coupling[i][j] = 2.0 - net.adj[1 + i][arc_idx[i][j]].cap;
    }
    return out;
}

// --- field-decay probe -----------------------------------------------------------

double ghost_decay_probe(int d, int t, int s, const Params& p) {
    if (t < 1 || s < 1) throw std::invalid_argument("ghost_decay_probe: need t, s >= 1");
    TreeIndex ball = tree_index(d, t + s);
    int N = ball.n;
    int m_tree = N - 1;
    check_cap(std::uint64_t{1} << m_tree, "ghost_decay_probe");

    int u = ball.level_start[t];
    int v = u + 1;
    auto leftmost_descendant = [&](int x) {
        for (int k = 0; k < s; ++k) x = ball.children(x).first;
        return x;
    };
    int u2 = leftmost_descendant(u), v2 = leftmost_descendant(v);

    int first_deep = ball.level_start[t + 1];
    double pe = p.p_edge();
    std::vector<double> decay(N + 1), attach(N + 1);
    for (int k = 0; k <= N; ++k) {
        decay[k] = std::exp(-p.B * k);
        attach[k] = 1.0 + (p.q - 1) * decay[k];
    }

    UnionFind uf_all(N), uf_out(N);
    std::vector<int> size(N);
    double num = 0.0, den = 0.0;
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << m_tree); ++mask) {
        double w = 1.0;
        uf_all.reset();
        uf_all.unite(u2, v2);  // the imposed boundary pairing
        for (int e = 0; e < m_tree; ++e) {
            if (mask >> e & 1) {
                w *= pe;
                uf_all.unite(ball.edges[e].first, ball.edges[e].second);
            } else {
                w *= 1.0 - pe;
            }
        }
        // ghost bonds summed out per cluster: a component of k vertices either
        // joins the ghost or stays separate with weight q e^{-Bk}
        std::fill(size.begin(), size.end(), 0);
        for (int x = 0; x < N; ++x) ++size[uf_all.find(x)];
        for (int x = 0; x < N; ++x)
            if (size[x] > 0) w *= attach[size[x]];
        den += w;

        uf_out.reset();
        uf_out.unite(u2, v2);
        for (int e = first_deep - 1; e < m_tree; ++e)
            if (mask >> e & 1) uf_out.unite(ball.edges[e].first, ball.edges[e].second);
        if (!uf_out.connected(u, v)) continue;
        // the outside cluster of u must keep every one of its deep-vertex
        // ghost bonds closed, while the rest of its full cluster stays free
        int ru = uf_out.find(u);
        int forced = 0;
        for (int x = first_deep; x < N; ++x)
            if (uf_out.find(x) == ru) ++forced;
        int full = size[uf_all.find(u)];
        num += w * decay[forced] * attach[full - forced] / attach[full];
    }
    return num / den;
}

// --- cluster-coloring uniformity ---------------------------------------------------

namespace {

void sim_unif_recurse(int item, int M, int q, std::vector<int>& slot,
                      std::vector<int>& remaining, double p_assignment,
                      const std::vector<std::vector<int>>& perms,
                      const std::vector<std::vector<int>>& inv_perms,
                      std::vector<double>& law) {
    if (item == M) {
        double contrib = p_assignment / perms.size();
        for (std::size_t g = 0; g < perms.size(); ++g) {
            std::uint64_t code = 0;
            for (int i = 0; i < M; ++i) {
                int label = slot[i] < q ? slot[i] : inv_perms[g][slot[i] - q];
                code = code * q + label;
            }
            law[code] += contrib;
        }
        return;
    }
    for (int b = 0; b < 2 * q; ++b) {
        if (remaining[b] == 0) continue;
        --remaining[b];
        slot[item] = b;
        sim_unif_recurse(item + 1, M, q, slot, remaining, p_assignment, perms,
                         inv_perms, law);
        ++remaining[b];
    }
}

}  // namespace

double sim_unif_check(int M, int q) {
    if (M < 0 || q < 2) throw std::invalid_argument("sim_unif_check: need M >= 0, q >= 2");
    std::uint64_t n_out = pow_u64(q, M);
    check_cap(n_out, "sim_unif_check");
    std::vector<double> law(n_out, 0.0);

    std::vector<std::vector<int>> perms, inv_perms;
    std::vector<int> perm(q);
    std::iota(perm.begin(), perm.end(), 0);
    do {
        perms.push_back(perm);
        std::vector<int> inv(q);
        for (int i = 0; i < q; ++i) inv[perm[i]] = i;
        inv_perms.push_back(inv);
    } while (std::next_permutation(perm.begin(), perm.end()));

    std::vector<double> fact(M + 1, 1.0);
    for (int k = 1; k <= M; ++k) fact[k] = fact[k - 1] * k;

    // enumerate the q-part compositions of M (the multinomial counts)
    std::vector<int> counts(q, 0);
    std::vector<int> slot(M), remaining(2 * q);
    double qm = std::pow(static_cast<double>(q), M);
    auto recurse_counts = [&](auto&& self, int cat, int left) -> void {
        if (cat == q - 1) {
            counts[cat] = left;
            double p_counts = fact[M] / qm;
            for (int k = 0; k < q; ++k) p_counts /= fact[counts[k]];
            int m_star = *std::min_element(counts.begin(), counts.end());
            double n_assign = fact[M];
            for (int k = 0; k < q; ++k) {
                remaining[k] = m_star;
                remaining[q + k] = counts[k] - m_star;
                n_assign /= fact[m_star] * fact[counts[k] - m_star];
            }
            sim_unif_recurse(0, M, q, slot, remaining, p_counts / n_assign, perms,
                             inv_perms, law);
            return;
        }
        for (int c = 0; c <= left; ++c) {
            counts[cat] = c;
            self(self, cat + 1, left - c);
        }
    };
    recurse_counts(recurse_counts, 0, M);

    double dev = 0.0;
    for (double x : law) dev = std::max(dev, std::abs(x - 1.0 / static_cast<double>(n_out)));
    return dev;
}

// --- suite --------------------------------------------------------------------------

namespace {

std::string describe(const char* kind, int idx, int n, int m, const Params& p) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%s#%d n=%d m=%d q=%d beta=%.4f B=%.4f", kind, idx,
                  n, m, p.q, p.beta, p.B);
    return buf;
}

void push(std::vector<OracleCheck>& out, const std::string& name,
          const std::string& instance, double residual, double tol = 1e-9) {
    out.push_back({name, instance, residual, residual < tol});
}

}  // namespace

std::vector<OracleCheck> run_oracle_suite(int n_random_graphs, std::uint64_t seed) {
    std::vector<OracleCheck> out;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    for (int i = 0; i < n_random_graphs; ++i) {
        int n = 2 + static_cast<int>(rng() % 4);
        std::vector<std::pair<int, int>> edges;
        for (int u = 0; u < n; ++u)
            for (int v = u + 1; v < n; ++v)
                if (rng() & 1) edges.emplace_back(u, v);
        Graph g(n, edges);
        GhostGraph gg(g);
        double beta = 1.5 * unif(rng);
        double B = (i % 3 == 0) ? 0.0 : unif(rng);
        int q = (pow_u64(3, n) << gg.num_edges()) <= (std::uint64_t{1} << 23) ? 3 : 2;
        Params p(q, 3, beta, B);
        std::string inst = describe("random_graph", i, n, g.num_edges(), p);

        push(out, "es_coupling", inst, es_consistency(gg, p));
        push(out, "correlation_identity", inst, correlation_identity_residual(gg, p));
        push(out, "rcm_marginal_dual", inst, marginal_rcm_residual(g, p));

        int wsize = std::min(4, gg.num_edges());
        std::vector<int> all_e(gg.num_edges());
        std::iota(all_e.begin(), all_e.end(), 0);
        std::shuffle(all_e.begin(), all_e.end(), rng);
        std::vector<int> W(all_e.begin(), all_e.begin() + wsize);
        double Zp = enumerate_potts(gg, p).Z;
        double zsum = 0.0;
        for (std::uint64_t y = 0; y < (std::uint64_t{1} << wsize); ++y)
            zsum += restricted_Z(gg, W, y, p);
        push(out, "restricted_Z_total", inst, std::abs(zsum / Zp - 1.0));
    }

    // designated tree balls
    {
        TreeIndex b1 = tree_index(3, 1);
        GhostGraph gg{b1.to_graph()};
        for (Params p : {Params(3, 3, 1.0, 0.5), Params(2, 3, 0.8, 0.0)}) {
            std::string inst = describe("tree_ball_t1", 0, b1.n, gg.num_edges(), p);
            push(out, "es_coupling", inst, es_consistency(gg, p));
            push(out, "correlation_identity", inst, correlation_identity_residual(gg, p));
            push(out, "rcm_marginal_dual", inst, marginal_rcm_residual(gg.base, p));
        }
    }
    {
        TreeIndex b2 = tree_index(3, 2);
        GhostGraph gg{b2.to_graph()};
        Params p(3, 3, 1.0, 0.3);
        std::string inst = describe("tree_ball_t2", 0, b2.n, gg.num_edges(), p);
        push(out, "correlation_identity", inst, correlation_identity_residual(gg, p));
        push(out, "rcm_marginal_dual", inst, marginal_rcm_residual(gg.base, p));
        std::vector<int> W = {0, 3, 9, 12};
        double Zp = enumerate_potts(gg, p).Z;
        double zsum = 0.0;
        for (std::uint64_t y = 0; y < 16; ++y) zsum += restricted_Z(gg, W, y, p);
        push(out, "restricted_Z_total", inst, std::abs(zsum / Zp - 1.0));
    }

    // root-removal and rewiring identities on the 4-regular depth-2 ball
    {
        Params p(3, 4, 0.8, 0.3);
        TreeIndex ball = tree_index(4, 2);
        int nb = 2 * (ball.n - ball.level_start[2]);
        double rvx = 0.0, re = 0.0;
        std::vector<int> pi = {0, 1, 2, 3};
        for (int k = 0; k < 20; ++k) {
            std::uint64_t y = rng() & ((std::uint64_t{1} << nb) - 1);
            if (k >= 10) std::shuffle(pi.begin(), pi.end(), rng);
            SurgeryCheck c = surgery_ratio_check(4, 2, 1, y, p, pi);
            rvx = std::max(rvx, c.residual_vx);
            re = std::max(re, *c.residual_e);
        }
        std::string inst = describe("surgery_d4_r2_t1", 0, ball.n, nb, p);
        push(out, "surgery_vertex_identity", inst, rvx);
        push(out, "surgery_rewiring_identity", inst, re);
    }

    // strict monotonicity of the boundary-connectivity functional
    {
        Params p(3, 3, 1.0, 0.2);
        TreeIndex ball = tree_index(3, 2);
        int mb = ball.num_leaves();
        std::vector<int> fine(mb + 1), coarse(mb + 1);
        std::iota(fine.begin(), fine.end(), 0);
        std::iota(coarse.begin(), coarse.end(), 0);
        coarse[2] = 1;  // merge the first two boundary vertices
        for (int i = 3; i <= mb; ++i) coarse[i] = i - 1;
        double lo = gF_expectation(3, 1, BoundaryPartition{fine}, p);
        double hi = gF_expectation(3, 1, BoundaryPartition{coarse}, p);
        std::string inst = describe("gF_d3_s1", 0, ball.n, mb, p);
        push(out, "gF_strict_ordering", inst, std::max(0.0, 1e-6 - (hi - lo)));
    }

    // monotone coupling of the free below the wired boundary law
    {
        Params p(3, 3, 1.0, 0.2);
        std::vector<double> lo = boundary_law_free(3, 1, p);
        std::vector<double> hi = boundary_law_wired(3, 1, p);
        std::vector<BoundaryPartition> parts = enumerate_boundary_partitions(3);
        std::vector<std::uint64_t> masks;
        for (const auto& C : parts) masks.push_back(boundary_edge_mask(C));
        StochasticOrderResult r = stochastic_order(lo, hi, masks);
        double residual = r.mass_shortfall;
        if (r.feasible) {
            for (std::size_t i = 0; i < parts.size(); ++i) {
                double row = std::accumulate(r.coupling[i].begin(), r.coupling[i].end(), 0.0);
                residual = std::max(residual, std::abs(row - lo[i]));
                double col = 0.0;
                for (std::size_t j = 0; j < parts.size(); ++j) col += r.coupling[j][i];
                residual = std::max(residual, std::abs(col - hi[i]));
            }
        } else {
            residual = 1.0;
        }
        push(out, "strassen_free_below_wired", describe("boundary_law_t1", 0, 4, 6, p),
             residual);
    }

    // field decay of boundary pairings that dodge the ghost
    for (int s : {1, 2}) {
        Params p(3, 3, 1.0, 2.0);
        double prob = ghost_decay_probe(3, 1, s, p);
        double bound = p.q * p.q * std::exp(-2.0 * p.B * s);
        char buf[120];
        std::snprintf(buf, sizeof buf, "ghost_decay t=1 s=%d prob=%.6g bound=%.6g", s,
                      prob, bound);
        push(out, "ghost_decay_bound", buf, std::max(0.0, prob - bound));
    }

    // uniformity of the multinomial split-and-permute coloring
    for (int q : {2, 3})
        for (int M = 1; M <= 6; ++M) {
            char buf[64];
            std::snprintf(buf, sizeof buf, "sim_unif M=%d q=%d", M, q);
            push(out, "sim_unif_uniform", buf, sim_unif_check(M, q));
        }

    return out;
}

}  // namespace potts
