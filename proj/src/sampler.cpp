#include "potts/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "potts/graphgen.hpp"
#include "potts/tree_index.hpp"
#include "potts/union_find.hpp"

namespace potts {

namespace {

// Seed-splitting for independent chains: a few rounds of the standard
// 64-bit finalizer so nearby (seed, index) pairs land far apart.
std::uint64_t split_seed(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t x = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace

void ChainBudget::validate() const {
    if (burn_in < 0) throw std::invalid_argument("ChainBudget: negative burn_in");
    if (n_samples < 1) throw std::invalid_argument("ChainBudget: need at least one sample");
    if (thin < 1) throw std::invalid_argument("ChainBudget: thin must be >= 1");
}

double conditional_open_probability(const GhostGraph& gg, const Params& p,
                                    const SpinConfig& spins, int edge) {
    auto [u, v] = gg.edge(edge);
    if (gg.is_ghost_edge(edge)) return spins.colors[u] == 0 ? p.p_ghost() : 0.0;
    return spins.colors[u] == spins.colors[v] ? p.p_edge() : 0.0;
}

std::vector<int> cluster_labels(const GhostGraph& gg, const BondConfig& bonds) {
    if (bonds.size() != gg.num_edges())
        throw std::invalid_argument("cluster_labels: bond count mismatch");
    UnionFind uf(gg.base.n + 1);
    for (int e = 0; e < gg.num_edges(); ++e) {
        if (!bonds.open[e]) continue;
        auto [u, v] = gg.edge(e);
        uf.unite(u, v);
    }
    std::vector<int> labels(gg.base.n + 1);
    for (int v = 0; v <= gg.base.n; ++v) labels[v] = uf.find(v);
    return labels;
}

BondConfig bonds_given_spins(const SpinConfig& spins, const GhostGraph& gg, const Params& p,
                             std::mt19937_64& rng) {
    if (spins.size() != gg.base.n + 1)
        throw std::invalid_argument("bonds_given_spins: spin count mismatch");
    BondConfig bonds(gg.num_edges());
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int e = 0; e < gg.num_edges(); ++e) {
        double pe = conditional_open_probability(gg, p, spins, e);
        if (pe > 0.0 && unif(rng) < pe) bonds.open[e] = 1;
    }
    return bonds;
}

SpinConfig spins_given_bonds(const BondConfig& bonds, const GhostGraph& gg, const Params& p,
                             std::mt19937_64& rng) {
    std::vector<int> labels = cluster_labels(gg, bonds);
    int n = gg.base.n;
    SpinConfig spins(n + 1, 0);
    std::vector<int> color_of(n + 1, -1);
    color_of[labels[n]] = 0;  // the ghost cluster keeps the field color
    std::uniform_int_distribution<int> pick(0, p.q - 1);
    for (int v = 0; v < n; ++v) {
        int r = labels[v];
        if (color_of[r] < 0) color_of[r] = pick(rng);
        spins.colors[v] = static_cast<std::uint8_t>(color_of[r]);
    }
    return spins;
}

ChainState make_chain(const GhostGraph& gg, const Params& p, std::uint64_t seed) {
    ChainState st;
    st.rng.seed(seed);
    int n = gg.base.n;
    st.spins = SpinConfig(n + 1, 0);
    // Exact single-site equilibrium at coupling zero: the field color with
    // probability e^B / (e^B + q - 1), the rest uniform.
    double a = std::exp(p.B) / (std::exp(p.B) + p.q - 1);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::uniform_int_distribution<int> others(1, std::max(1, p.q - 1));
    for (int v = 0; v < n; ++v)
        st.spins.colors[v] =
            unif(st.rng) < a ? 0 : static_cast<std::uint8_t>(p.q == 2 ? 1 : others(st.rng));
    st.bonds = bonds_given_spins(st.spins, gg, p, st.rng);
    st.sweep = 0;
    return st;
}

void sw_sweep(ChainState& st, const GhostGraph& gg, const Params& p) {
    st.bonds = bonds_given_spins(st.spins, gg, p, st.rng);
    st.spins = spins_given_bonds(st.bonds, gg, p, st.rng);
    ++st.sweep;
}

std::vector<Snapshot> run_chain_from(ChainState& st, const GhostGraph& gg, const Params& p,
                                     const ChainBudget& budget) {
    budget.validate();
    for (int i = 0; i < budget.burn_in; ++i) sw_sweep(st, gg, p);
    std::vector<Snapshot> out;
    out.reserve(budget.n_samples);
    for (int s = 0; s < budget.n_samples; ++s) {
        for (int i = 0; i < budget.thin; ++i) sw_sweep(st, gg, p);
        out.push_back({st.spins, st.bonds});
    }
    return out;
}

std::vector<Snapshot> run_chain(const GhostGraph& gg, const Params& p, const ChainBudget& budget) {
    ChainState st = make_chain(gg, p, budget.seed);
    return run_chain_from(st, gg, p, budget);
}

std::vector<std::vector<Snapshot>> run_chains(const GhostGraph& gg, const Params& p,
                                              const ChainBudget& budget, int n_chains) {
    if (n_chains < 1) throw std::invalid_argument("run_chains: need at least one chain");
    std::vector<std::vector<Snapshot>> out(n_chains);
    std::vector<std::thread> workers;
    workers.reserve(n_chains);
    for (int c = 0; c < n_chains; ++c) {
        workers.emplace_back([&, c] {
            ChainBudget b = budget;
            b.seed = split_seed(budget.seed, static_cast<std::uint64_t>(c));
            out[c] = run_chain(gg, p, b);
        });
    }
    for (auto& w : workers) w.join();
    return out;
}

EstimatorReport batch_means(const std::vector<double>& values, int n_batches) {
    if (n_batches < 2) throw std::invalid_argument("batch_means: need at least two batches");
    auto n = static_cast<std::int64_t>(values.size());
    if (n < n_batches)
        throw std::invalid_argument("batch_means: fewer samples than batches");
    EstimatorReport rep;
    rep.n_samples = n;
    rep.n_batches = n_batches;
    rep.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(n);
    // Contiguous batches of near-equal size; the first n % n_batches batches
    // take one extra value.
    std::int64_t base = n / n_batches, rem = n % n_batches, pos = 0;
    double ss = 0.0;
    for (int b = 0; b < n_batches; ++b) {
        std::int64_t len = base + (b < rem ? 1 : 0);
        double m = std::accumulate(values.begin() + pos, values.begin() + pos + len, 0.0) /
                   static_cast<double>(len);
        ss += (m - rep.mean) * (m - rep.mean);
        pos += len;
    }
    rep.std_error = std::sqrt(ss / (static_cast<double>(n_batches) * (n_batches - 1)));
    return rep;
}

EstimatorReport internal_energy(const std::vector<Snapshot>& snaps, const Graph& g,
                                int n_batches) {
    if (snaps.empty()) throw std::invalid_argument("internal_energy: no snapshots");
    std::vector<double> vals;
    vals.reserve(snaps.size());
    for (const Snapshot& s : snaps) {
        std::int64_t agree = 0;
        for (auto [u, v] : g.edges) agree += s.spins.colors[u] == s.spins.colors[v];
        vals.push_back(static_cast<double>(agree) / g.n);
    }
    return batch_means(vals, n_batches);
}

EstimatorReport color_density(const std::vector<Snapshot>& snaps, int n_base, int color,
                              int n_batches) {
    if (snaps.empty()) throw std::invalid_argument("color_density: no snapshots");
    std::vector<double> vals;
    vals.reserve(snaps.size());
    for (const Snapshot& s : snaps) {
        std::int64_t cnt = 0;
        for (int v = 0; v < n_base; ++v) cnt += s.spins.colors[v] == color;
        vals.push_back(static_cast<double>(cnt) / n_base);
    }
    return batch_means(vals, n_batches);
}

namespace {

// Trapezoid rule with propagated per-point standard errors and a
// second-difference estimate of the quadrature error.
void integrate_grid(TiResult& out, double start_value) {
    const std::vector<double>& x = out.grid;
    const std::vector<double>& f = out.derivative;
    const std::vector<double>& se = out.derivative_se;
    auto n = static_cast<std::int64_t>(x.size());
    double phi = start_value, var = 0.0, quad = 0.0;
    for (std::int64_t i = 0; i + 1 < n; ++i)
        phi += 0.5 * (x[i + 1] - x[i]) * (f[i] + f[i + 1]);
    for (std::int64_t i = 0; i < n; ++i) {
        double w = 0.0;
        if (i > 0) w += 0.5 * (x[i] - x[i - 1]);
        if (i + 1 < n) w += 0.5 * (x[i + 1] - x[i]);
        var += (w * se[i]) * (w * se[i]);
    }
    for (std::int64_t i = 1; i + 1 < n; ++i) {
        double h1 = x[i] - x[i - 1], h2 = x[i + 1] - x[i];
        double fpp = 2.0 * ((f[i + 1] - f[i]) / h2 - (f[i] - f[i - 1]) / h1) / (h1 + h2);
        quad += std::abs(fpp) * (0.5 * (h1 + h2)) * (h1 + h2) * (h1 + h2) / 48.0;
    }
    out.phi = phi;
    out.mc_error = std::sqrt(var);
    out.quad_error = quad;
}

void check_grid(const std::vector<double>& grid, const char* who) {
    if (grid.empty()) throw std::invalid_argument(std::string(who) + ": empty grid");
    if (grid.front() != 0.0)
        throw std::invalid_argument(std::string(who) + ": grid must start at 0");
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (grid[i] <= grid[i - 1])
            throw std::invalid_argument(std::string(who) + ": grid must increase");
}

}  // namespace

TiResult free_energy_ti(const Graph& g, const Params& base, const std::vector<double>& beta_grid,
                        const ChainBudget& per_point, double boost_lo, double boost_hi) {
    check_grid(beta_grid, "free_energy_ti");
    per_point.validate();
    GhostGraph gg(g);
    TiResult out;
    out.grid = beta_grid;
    ChainState st = make_chain(gg, base.with_beta(0.0), per_point.seed);
    for (double beta : beta_grid) {
        Params p = base.with_beta(beta);
        ChainBudget b = per_point;
        bool boost = beta >= boost_lo && beta <= boost_hi;
        if (boost) {
            b.burn_in *= 4;
            b.n_samples *= 4;
        }
        std::vector<Snapshot> snaps = run_chain_from(st, gg, p, b);
        EstimatorReport rep = internal_energy(snaps, g);
        out.derivative.push_back(rep.mean);
        out.derivative_se.push_back(rep.std_error);
        out.boosted.push_back(boost);
    }
    integrate_grid(out, std::log(std::exp(base.B) + base.q - 1));
    return out;
}

TiResult ti_prefix(const TiResult& full, double target, double start_value) {
    std::size_t m = full.grid.size();
    for (std::size_t i = 0; i < full.grid.size(); ++i)
        if (std::abs(full.grid[i] - target) < 1e-9) {
            m = i;
            break;
        }
    if (m == full.grid.size())
        throw std::invalid_argument("ti_prefix: target is not a grid point");
    TiResult out;
    out.grid.assign(full.grid.begin(), full.grid.begin() + m + 1);
    out.derivative.assign(full.derivative.begin(), full.derivative.begin() + m + 1);
    out.derivative_se.assign(full.derivative_se.begin(), full.derivative_se.begin() + m + 1);
    out.boosted.assign(full.boosted.begin(), full.boosted.begin() + m + 1);
    integrate_grid(out, start_value);
    return out;
}

TiResult field_integral(const Graph& g, const Params& base, const std::vector<double>& B_grid,
                        double phi_at_field_zero, const ChainBudget& per_point) {
    check_grid(B_grid, "field_integral");
    per_point.validate();
    GhostGraph gg(g);
    TiResult out;
    out.grid = B_grid;
    ChainState st = make_chain(gg, base.with_B(0.0), per_point.seed);
    bool first = true;
    for (double B : B_grid) {
        Params p = base.with_B(B);
        ChainBudget b = per_point;
        if (first) {
            // The chain starts at the coupling-zero product law, not at
            // equilibrium for (beta, 0): give the first point extra burn-in.
            b.burn_in *= 4;
            first = false;
        }
        std::vector<Snapshot> snaps = run_chain_from(st, gg, p, b);
        EstimatorReport rep = color_density(snaps, g.n, 0);
        out.derivative.push_back(rep.mean);
        out.derivative_se.push_back(rep.std_error);
        out.boosted.push_back(false);
    }
    integrate_grid(out, phi_at_field_zero);
    return out;
}

std::vector<char> tree_iso_flags(const Graph& g, int t) {
    std::vector<char> flags(g.n, 0);
    for (int v = 0; v < g.n; ++v) flags[v] = ball(g, v, t).is_tree_isomorphic ? 1 : 0;
    return flags;
}

NeighborhoodLaw neighborhood_law_estimate(const Graph& g, const std::vector<Snapshot>& snaps,
                                          const Params& p, int t, std::int64_t cap) {
    if (snaps.empty()) throw std::invalid_argument("neighborhood_law_estimate: no snapshots");
    NeighborhoodLaw law(p.q, p.d, t, cap);

    // Roots qualify when the double-radius ball is tree-isomorphic; their
    // radius-t BFS order then matches the canonical tree indexing level by
    // level, parents before children.
    std::vector<char> iso = tree_iso_flags(g, 2 * t);
    std::vector<std::vector<int>> root_vertices;
    for (int v = 0; v < g.n; ++v) {
        if (!iso[v]) continue;
        root_vertices.push_back(ball(g, v, t).vertices);
    }
    if (root_vertices.empty())
        throw std::runtime_error("neighborhood_law_estimate: no tree-isomorphic roots");

    std::vector<std::uint8_t> colors(law.n_vertices);
    for (const Snapshot& s : snaps) {
        for (const std::vector<int>& verts : root_vertices) {
            for (std::size_t i = 0; i < verts.size(); ++i) colors[i] = s.spins.colors[verts[i]];
            law.prob[encode_pattern(colors, p.q)] += 1.0;
        }
    }
    law.normalize();
    return law;
}

std::vector<int> color_count_maximizers(const SpinConfig& spins, int n_base, int q) {
    std::vector<std::int64_t> count(q, 0);
    for (int v = 0; v < n_base; ++v) ++count[spins.colors[v]];
    std::int64_t best = *std::max_element(count.begin(), count.end());
    std::vector<int> arg;
    for (int k = 0; k < q; ++k)
        if (count[k] == best) arg.push_back(k);
    return arg;
}

int dominant_color(const SpinConfig& spins, int n_base, int q, std::mt19937_64& tie_rng) {
    std::vector<int> arg = color_count_maximizers(spins, n_base, q);
    if (arg.size() == 1) return arg[0];
    std::uniform_int_distribution<std::size_t> pick(0, arg.size() - 1);
    return arg[pick(tie_rng)];
}

SpinConfig condition_on_dominant(const SpinConfig& spins, const Params& p, int n_base, int k,
                                 std::mt19937_64& tie_rng) {
    if (p.B > 0.0)
        throw std::invalid_argument(
            "condition_on_dominant: conditioning uses the global color symmetry, "
            "which the field breaks; requires B = 0");
    if (k < 0 || k >= p.q) throw std::invalid_argument("condition_on_dominant: color out of range");
    int dom = dominant_color(spins, n_base, p.q, tie_rng);
    SpinConfig out = spins;
    if (dom == k) return out;
    for (int v = 0; v < n_base; ++v) {
        if (out.colors[v] == dom)
            out.colors[v] = static_cast<std::uint8_t>(k);
        else if (out.colors[v] == k)
            out.colors[v] = static_cast<std::uint8_t>(dom);
    }
    return out;
}

LocalDominant local_dominant(const Graph& g, const SpinConfig& spins, int v, int ell, int q,
                             const std::vector<char>& iso2ell, std::mt19937_64& tie_rng) {
    if (ell < 1) throw std::invalid_argument("local_dominant: ell must be >= 1");
    BallResult b = ball(g, v, ell);
    std::vector<double> score(q, 0.0);
    for (int u : b.vertices)
        if (iso2ell[u]) score[spins.colors[u]] += 1.0;
    for (double& s : score) s /= static_cast<double>(b.vertices.size());

    double n1 = *std::max_element(score.begin(), score.end());
    std::vector<int> arg;
    for (int k = 0; k < q; ++k)
        if (score[k] == n1) arg.push_back(k);
    int k_ell = arg[0];
    if (arg.size() > 1) {
        std::uniform_int_distribution<std::size_t> pick(0, arg.size() - 1);
        k_ell = arg[pick(tie_rng)];
    }
    double n2 = 0.0;
    for (int k = 0; k < q; ++k)
        if (k != k_ell) n2 = std::max(n2, score[k]);
    return {k_ell, n1, n2};
}

std::map<int, std::int64_t> cluster_histogram(const BondConfig& bonds, const GhostGraph& gg) {
    std::vector<int> labels = cluster_labels(gg, bonds);
    int n = gg.base.n;
    int ghost_root = labels[n];
    std::vector<std::int64_t> size_of(n + 1, 0);
    for (int v = 0; v < n; ++v) ++size_of[labels[v]];
    std::map<int, std::int64_t> hist;
    for (int v = 0; v < n; ++v) {
        if (labels[v] != v) continue;  // count each root once
        if (v == ghost_root) continue;
        ++hist[static_cast<int>(size_of[v])];
    }
    return hist;
}

SimUnifColors sim_unif_colors(int M, int q, std::mt19937_64& rng) {
    if (M < 0 || q < 2) throw std::invalid_argument("sim_unif_colors: need M >= 0, q >= 2");
    SimUnifColors out;
    out.color.resize(M);
    out.block.resize(M);
    out.in_excess.assign(M, 0);

    // Multinomial block sizes: M iid uniform category draws.
    std::vector<int> counts(q, 0);
    std::uniform_int_distribution<int> cat(0, q - 1);
    for (int i = 0; i < M; ++i) ++counts[cat(rng)];
    int mstar = *std::min_element(counts.begin(), counts.end());

    // Uniform labeled partition with the prescribed sizes: shuffle the items
    // and deal them out, base blocks (size mstar each) first, then the
    // excess blocks (size counts[k] - mstar).
    std::vector<int> items(M);
    std::iota(items.begin(), items.end(), 0);
    std::shuffle(items.begin(), items.end(), rng);

    // The uniform color permutation: the excess block labeled gamma[k] is
    // colored k, so excess items take the inverse permutation of their label.
    out.gamma.resize(q);
    std::iota(out.gamma.begin(), out.gamma.end(), 0);
    std::shuffle(out.gamma.begin(), out.gamma.end(), rng);
    std::vector<int> inv(q);
    for (int k = 0; k < q; ++k) inv[out.gamma[k]] = k;

    std::size_t pos = 0;
    for (int k = 0; k < q; ++k)
        for (int j = 0; j < mstar; ++j) {
            int i = items[pos++];
            out.block[i] = static_cast<std::uint8_t>(k);
            out.color[i] = static_cast<std::uint8_t>(k);
        }
    for (int k = 0; k < q; ++k)
        for (int j = 0; j < counts[k] - mstar; ++j) {
            int i = items[pos++];
            out.block[i] = static_cast<std::uint8_t>(k);
            out.in_excess[i] = 1;
            out.color[i] = static_cast<std::uint8_t>(inv[k]);
        }
    return out;
}

std::vector<std::uint8_t> sim_unif_recolor(const SimUnifColors& a, const std::vector<int>& gamma2) {
    int q = static_cast<int>(a.gamma.size());
    if (static_cast<int>(gamma2.size()) != q)
        throw std::invalid_argument("sim_unif_recolor: permutation size mismatch");
    std::vector<int> inv(q, -1);
    for (int k = 0; k < q; ++k) {
        if (gamma2[k] < 0 || gamma2[k] >= q || inv[gamma2[k]] >= 0)
            throw std::invalid_argument("sim_unif_recolor: not a permutation");
        inv[gamma2[k]] = k;
    }
    std::vector<std::uint8_t> out(a.color.size());
    for (std::size_t i = 0; i < a.color.size(); ++i)
        out[i] = a.in_excess[i] ? static_cast<std::uint8_t>(inv[a.block[i]]) : a.block[i];
    return out;
}

std::vector<double> sw_exact_pushforward(const GhostGraph& gg, const Params& p,
                                         const std::vector<double>& mu) {
    int n = gg.base.n;
    int m = gg.num_edges();
    auto n_codes = static_cast<std::uint64_t>(pow_u64(p.q, n));
    if (mu.size() != n_codes)
        throw std::invalid_argument("sw_exact_pushforward: distribution size mismatch");
    if (m >= 26 || n_codes > (std::uint64_t{1} << 26) / (std::uint64_t{1} << m))
        throw std::length_error("sw_exact_pushforward: state space too large");

    // Decode every spin pattern once (ghost entry appended, fixed at 0).
    std::vector<SpinConfig> spin_of(n_codes);
    for (std::uint64_t code = 0; code < n_codes; ++code) {
        SpinConfig s(n + 1, 0);
        auto base = decode_pattern(code, n, p.q);
        std::copy(base.begin(), base.end(), s.colors.begin());
        spin_of[code] = std::move(s);
    }

    std::vector<double> out(n_codes, 0.0);
    BondConfig bonds(m);
    std::vector<std::uint8_t> pattern(n);
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << m); ++mask) {
        for (int e = 0; e < m; ++e) bonds.open[e] = (mask >> e) & 1;

        // Total inbound weight of this bond configuration.
        double w = 0.0;
        for (std::uint64_t code = 0; code < n_codes; ++code) {
            if (mu[code] == 0.0) continue;
            double pr = mu[code];
            for (int e = 0; e < m && pr > 0.0; ++e) {
                double pe = conditional_open_probability(gg, p, spin_of[code], e);
                pr *= bonds.open[e] ? pe : 1.0 - pe;
            }
            w += pr;
        }
        if (w == 0.0) continue;

        // Resampling spreads that weight uniformly over the per-cluster
        // colorings, the ghost cluster pinned to the field color.
        std::vector<int> labels = cluster_labels(gg, bonds);
        int ghost_root = labels[n];
        std::vector<int> free_roots;
        for (int v = 0; v < n; ++v)
            if (labels[v] == v && v != ghost_root) free_roots.push_back(v);
        auto n_colorings = static_cast<double>(pow_u64(p.q, static_cast<int>(free_roots.size())));

        std::vector<std::uint8_t> root_color(n + 1, 0);
        std::vector<std::uint8_t> odo(free_roots.size(), 0);
        while (true) {
            for (std::size_t i = 0; i < free_roots.size(); ++i) root_color[free_roots[i]] = odo[i];
            for (int v = 0; v < n; ++v)
                pattern[v] = labels[v] == ghost_root ? 0 : root_color[labels[v]];
            out[encode_pattern(pattern, p.q)] += w / n_colorings;

            std::size_t k = 0;
            while (k < odo.size() && ++odo[k] == p.q) odo[k++] = 0;
            if (k == odo.size()) break;
        }
    }
    return out;
}

}  // namespace potts
