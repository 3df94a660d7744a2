#include "potts/graphgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <queue>
#include <random>
#include <stdexcept>
#include <string>
#include <unordered_set>

namespace potts {

void GenSpec::validate() const {
    if (n <= 0) throw std::invalid_argument("GenSpec: n must be positive");
    if (d <= 0) throw std::invalid_argument("GenSpec: d must be positive");
    if (model == GenModel::CONFIGURATION) {
        if ((static_cast<std::int64_t>(n) * d) % 2 != 0)
            throw std::invalid_argument("GenSpec: CONFIGURATION needs n*d even");
    } else {
        if (d % 2 != 0)
            throw std::invalid_argument("GenSpec: PERMUTATION needs d even");
    }
}

namespace {

// Packed undirected edge key for duplicate detection.
std::uint64_t edge_key(int u, int v, int n) {
    auto [lo, hi] = std::minmax(u, v);
    return static_cast<std::uint64_t>(lo) * static_cast<std::uint64_t>(n) +
           static_cast<std::uint64_t>(hi);
}

// One configuration-model draw: shuffle the n*d half-edge stubs and pair
// them consecutively.  Returns false (leaving `edges` unusable) as soon as
// a self-loop or parallel edge shows up, so failed draws abort early.
bool try_configuration(int n, int d, std::mt19937_64& rng,
                       std::vector<std::pair<int, int>>& edges) {
    std::vector<int> stubs(static_cast<std::size_t>(n) * d);
    for (int v = 0; v < n; ++v)
        for (int k = 0; k < d; ++k) stubs[static_cast<std::size_t>(v) * d + k] = v;
    std::shuffle(stubs.begin(), stubs.end(), rng);

    edges.clear();
    std::unordered_set<std::uint64_t> seen;
    seen.reserve(stubs.size());
    for (std::size_t i = 0; i + 1 < stubs.size(); i += 2) {
        int u = stubs[i], v = stubs[i + 1];
        if (u == v) return false;
        if (!seen.insert(edge_key(u, v, n)).second) return false;
        edges.emplace_back(u, v);
    }
    return true;
}

// One permutation-model draw: d/2 independent uniform permutations of [n],
// each contributing the edges (i, sigma(i)).  A fixed point is a self-loop,
// a 2-cycle repeats an edge, and any cross-permutation collision is a
// parallel edge; all three reject the draw.
bool try_permutation(int n, int d, std::mt19937_64& rng,
                     std::vector<std::pair<int, int>>& edges) {
    edges.clear();
    std::unordered_set<std::uint64_t> seen;
    seen.reserve(static_cast<std::size_t>(n) * d / 2);
    std::vector<int> sigma(n);
    for (int j = 0; j < d / 2; ++j) {
        std::iota(sigma.begin(), sigma.end(), 0);
        std::shuffle(sigma.begin(), sigma.end(), rng);
        for (int i = 0; i < n; ++i) {
            if (sigma[i] == i) return false;            // fixed point
            if (sigma[sigma[i]] == i) return false;     // 2-cycle
            if (!seen.insert(edge_key(i, sigma[i], n)).second) return false;
            edges.emplace_back(i, sigma[i]);
        }
    }
    return true;
}

}  // namespace

Graph random_regular(const GenSpec& spec, int max_attempts) {
    spec.validate();
    std::mt19937_64 rng(spec.seed);
    std::vector<std::pair<int, int>> edges;
    for (int attempt = 0; attempt < max_attempts; ++attempt) {
        bool ok = spec.model == GenModel::CONFIGURATION
                      ? try_configuration(spec.n, spec.d, rng, edges)
                      : try_permutation(spec.n, spec.d, rng, edges);
        if (!ok) continue;
        Graph g(spec.n, std::move(edges));
        // Uniform sparsity is automatic for regular graphs; assert it anyway
        // so every generated instance carries the guarantee.
        if (g.max_degree() != spec.d)
            throw std::logic_error("random_regular: generated graph is not d-regular");
        return g;
    }
    throw std::runtime_error(
        "random_regular: retry budget exhausted after " + std::to_string(max_attempts) +
        " attempts (n=" + std::to_string(spec.n) + " too small for a simple " +
        std::to_string(spec.d) + "-regular graph?)");
}

BallResult ball(const Graph& g, int v, int t) {
    if (v < 0 || v >= g.n) throw std::invalid_argument("ball: center out of range");
    if (t < 0) throw std::invalid_argument("ball: negative radius");

    BallResult out;
    std::vector<int> local(g.n, -1);  // local[u] = BFS position of u, -1 if outside
    std::vector<int> depth_of;
    out.vertices.push_back(v);
    depth_of.push_back(0);
    local[v] = 0;
    for (std::size_t head = 0; head < out.vertices.size(); ++head) {
        int u = out.vertices[head];
        if (depth_of[head] == t) break;  // BFS order: all later vertices are at depth >= t
        for (int w : g.neighbors(u)) {
            if (local[w] >= 0) continue;
            local[w] = static_cast<int>(out.vertices.size());
            out.vertices.push_back(w);
            depth_of.push_back(depth_of[head] + 1);
        }
    }

    std::vector<std::pair<int, int>> induced_edges;
    for (int lu = 0; lu < static_cast<int>(out.vertices.size()); ++lu) {
        for (int w : g.neighbors(out.vertices[lu])) {
            int lw = local[w];
            if (lw > lu) induced_edges.emplace_back(lu, lw);
        }
    }
    out.induced = Graph(static_cast<int>(out.vertices.size()), std::move(induced_edges));

    // Tree test against the regular tree whose branching matches the center's
    // degree: full vertex count plus tree edge count.  The edge condition is
    // essential -- a radius-1 ball in K_4 has |T_3(1)| = 4 vertices but six
    // edges, so vertex count alone would misclassify it.  The count is
    // computed inline so degree-2 centers (cycles, used in tests) work too.
    int dc = g.degree(v);
    std::int64_t want = 1, level = 1;
    for (int l = 1; l <= t && level > 0; ++l) {
        level *= (l == 1) ? dc : std::max(dc - 1, 0);
        want += level;
    }
    out.is_tree_isomorphic =
        static_cast<std::int64_t>(out.vertices.size()) == want &&
        out.induced.num_edges() == static_cast<int>(out.vertices.size()) - 1;
    return out;
}

namespace {

// Shared removal core: drops w, compacts indices, and returns the kept-edge
// list in `edges` plus the new->old vertex mapping.
std::vector<int> removal_mapping(const Graph& g, int w,
                                 std::vector<std::pair<int, int>>& edges) {
    if (w < 0 || w >= g.n) throw std::invalid_argument("remove_vertex: vertex out of range");
    edges.clear();
    for (auto [u, v] : g.edges) {
        if (u == w || v == w) continue;
        edges.emplace_back(u > w ? u - 1 : u, v > w ? v - 1 : v);
    }
    std::vector<int> old_of_new(g.n - 1);
    for (int i = 0; i < g.n - 1; ++i) old_of_new[i] = i < w ? i : i + 1;
    return old_of_new;
}

}  // namespace

SurgeryResult remove_vertex(const Graph& g, int w) {
    std::vector<std::pair<int, int>> edges;
    std::vector<int> mapping = removal_mapping(g, w, edges);
    SurgeryResult out{Graph(g.n - 1, std::move(edges)), std::move(mapping), false};
    return out;
}

SurgeryResult rewire(const Graph& g, int w, const std::vector<int>& pi) {
    if (w < 0 || w >= g.n) throw std::invalid_argument("rewire: vertex out of range");
    int deg = g.degree(w);
    if (deg % 2 != 0)
        throw std::invalid_argument("rewire: vertex degree " + std::to_string(deg) +
                                    " is odd; pairwise reconnection needs even degree");
    if (static_cast<int>(pi.size()) != deg)
        throw std::invalid_argument("rewire: pi must permute 0..deg(w)-1");
    {
        std::vector<bool> hit(deg, false);
        for (int x : pi) {
            if (x < 0 || x >= deg || hit[x])
                throw std::invalid_argument("rewire: pi is not a permutation of 0..deg(w)-1");
            hit[x] = true;
        }
    }

    auto nb = g.neighbors(w);  // sorted ascending by the Graph invariant
    std::vector<std::pair<int, int>> edges;
    std::vector<int> mapping = removal_mapping(g, w, edges);

    std::unordered_set<std::uint64_t> seen;
    seen.reserve(edges.size() + deg / 2);
    for (auto [u, v] : edges) seen.insert(edge_key(u, v, g.n - 1));
    for (int i = 0; i < deg / 2; ++i) {
        int a = nb[pi[2 * i]], b = nb[pi[2 * i + 1]];
        int na = a > w ? a - 1 : a;
        int nb2 = b > w ? b - 1 : b;
        if (!seen.insert(edge_key(na, nb2, g.n - 1)).second)
            throw std::runtime_error("rewire: reconnection (" + std::to_string(a) + "," +
                                     std::to_string(b) + ") creates a parallel edge");
        edges.emplace_back(na, nb2);
    }
    SurgeryResult out{Graph(g.n - 1, std::move(edges)), std::move(mapping), false};
    return out;
}

double expansion_estimate(const Graph& g) {
    if (g.n <= 1) throw std::invalid_argument("expansion_estimate: graph too small");

    // Connectivity check (BFS from 0).
    {
        std::vector<char> vis(g.n, 0);
        std::queue<int> bfs;
        bfs.push(0);
        vis[0] = 1;
        int count = 1;
        while (!bfs.empty()) {
            int u = bfs.front();
            bfs.pop();
            for (int w : g.neighbors(u))
                if (!vis[w]) {
                    vis[w] = 1;
                    ++count;
                    bfs.push(w);
                }
        }
        if (count != g.n)
            throw std::invalid_argument("expansion_estimate: graph is disconnected");
    }

    int d = g.max_degree();
    double nd = static_cast<double>(g.n);

    // Power iteration on the nonnegative shift A + d*I.  For a d-regular
    // graph the top eigenpair is (2d, all-ones); projecting the ones vector
    // out each step makes the iteration converge to d + lambda_2, where
    // lambda_2 is the *signed* second-largest adjacency eigenvalue (the
    // shift stops the most negative eigenvalue from winning the magnitude
    // race, e.g. on near-bipartite graphs).
    std::mt19937_64 rng(0x9e3779b97f4a7c15ULL);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    std::vector<double> x(g.n), y(g.n);
    for (double& xi : x) xi = unif(rng);

    auto deflate_and_normalize = [&](std::vector<double>& v) {
        double mean = std::accumulate(v.begin(), v.end(), 0.0) / nd;
        for (double& vi : v) vi -= mean;
        double norm = std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
        if (norm < 1e-300) {
            // Degenerate start (or exact top-eigenvector input): reseed.
            for (double& vi : v) vi = unif(rng);
            double m2 = std::accumulate(v.begin(), v.end(), 0.0) / nd;
            for (double& vi : v) vi -= m2;
            norm = std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
        }
        for (double& vi : v) vi /= norm;
    };
    deflate_and_normalize(x);

    double lambda = 0.0;
    for (int iter = 0; iter < 20000; ++iter) {
        for (int u = 0; u < g.n; ++u) {
            double s = static_cast<double>(d) * x[u];
            for (int w : g.neighbors(u)) s += x[w];
            y[u] = s;
        }
        double rayleigh = std::inner_product(x.begin(), x.end(), y.begin(), 0.0);
        x.swap(y);
        deflate_and_normalize(x);
        if (iter > 10 && std::abs(rayleigh - lambda) < 1e-12 * std::max(1.0, std::abs(rayleigh))) {
            lambda = rayleigh;
            break;
        }
        lambda = rayleigh;
    }
    double lambda2 = lambda - d;
    return (d - lambda2) / 2.0;
}

}  // namespace potts
