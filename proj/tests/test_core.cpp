#include "doctest.h"

#include <cmath>
#include <sstream>

#include "potts/graph.hpp"
#include "potts/neighborhood_law.hpp"
#include "potts/params.hpp"
#include "potts/symmetric_measure.hpp"
#include "potts/tree_index.hpp"
#include "potts/union_find.hpp"

using namespace potts;

TEST_CASE("params validation and derived quantities") {
    CHECK_THROWS_AS(Params(1, 3, 1.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(Params(2, 2, 1.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(Params(2, 3, -0.1, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(Params(2, 3, 1.0, -0.1), std::invalid_argument);
    Params p(3, 4, 1.25, 0.5);
    CHECK(p.p_edge() == doctest::Approx(1.0 - std::exp(-1.25)).epsilon(1e-15));
    CHECK(p.p_ghost() == doctest::Approx(1.0 - std::exp(-0.5)).epsilon(1e-15));
    CHECK(p.gamma() ==
          doctest::Approx((std::exp(1.25) - 1.0) / (std::exp(1.25) + 2.0)).epsilon(1e-15));
    // gamma equals p/(p + q(1-p)) with p = 1 - e^{-beta}
    double pe = p.p_edge();
    CHECK(p.gamma() == doctest::Approx(pe / (pe + 3 * (1 - pe))).epsilon(1e-14));
    CHECK(Params(3, 4, 0.0, 0.0).p_edge() == 0.0);
}

TEST_CASE("symmetric measure coordinate maps round-trip") {
    for (int q : {2, 3, 5, 30}) {
        for (double a : {0.01, 0.2, 1.0 / q, 0.5, 0.9, 0.99}) {
            if (a >= 1.0) continue;
            SymmetricMeasure nu(a, q);
            CHECK(std::abs(nu.a + (q - 1) * nu.off() - 1.0) < 1e-15);
            SymmetricMeasure back = SymmetricMeasure::from_r(nu.r(), q);
            CHECK(std::abs(back.a - a) < 1e-14);
            SymmetricMeasure back_b = SymmetricMeasure::from_b(nu.b(), q);
            CHECK(std::abs(back_b.a - a) < 1e-14);
        }
        CHECK(std::abs(SymmetricMeasure::uniform(q).b()) < 1e-15);
        CHECK(SymmetricMeasure::dirac1(q).b() == doctest::Approx(1.0).epsilon(1e-15));
        CHECK(SymmetricMeasure::uniform(q).r() == doctest::Approx(0.0).epsilon(1e-15));
        // extreme tails of from_r
        CHECK(SymmetricMeasure::from_r(800.0, q).a == doctest::Approx(1.0));
        CHECK(SymmetricMeasure::from_r(-800.0, q).a == doctest::Approx(0.0));
    }
}

TEST_CASE("tree index sizes, parents and edges") {
    CHECK(tree_ball_size(3, 0) == 1);
    CHECK(tree_ball_size(3, 1) == 4);
    CHECK(tree_ball_size(3, 2) == 10);
    CHECK(tree_ball_size(4, 2) == 17);
    CHECK(tree_ball_size(3, 3) == 22);
    TreeIndex ti = tree_index(3, 2);
    CHECK(ti.n == 10);
    CHECK(ti.parent[0] == -1);
    CHECK(ti.parent[1] == 0);
    CHECK(ti.parent[3] == 0);
    CHECK(ti.parent[4] == 1);
    CHECK(ti.parent[9] == 3);
    CHECK(ti.depth_of(0) == 0);
    CHECK(ti.depth_of(3) == 1);
    CHECK(ti.depth_of(4) == 2);
    CHECK(ti.num_leaves() == 6);
    CHECK(static_cast<int>(ti.edges.size()) == 9);
    // edge i connects parent[i+1] with i+1
    for (std::size_t i = 0; i < ti.edges.size(); ++i) {
        CHECK(ti.edges[i].first == ti.parent[i + 1]);
        CHECK(ti.edges[i].second == static_cast<int>(i + 1));
    }
    auto [c_lo, c_hi] = ti.children(1);
    CHECK(c_lo == 4);
    CHECK(c_hi == 6);
    Graph g = ti.to_graph();
    CHECK(g.n == 10);
    CHECK(static_cast<int>(g.edges.size()) == 9);
    CHECK(g.neighbors(0).size() == 3);
    CHECK(g.neighbors(1).size() == 3);
    CHECK(g.neighbors(9).size() == 1);
}

TEST_CASE("pattern codes are big-endian with the root most significant") {
    // colors (1,2,3,1) one-based on T_3(1) with q = 3 encode (0,1,2,0) zero-based
    std::vector<std::uint8_t> colors = {0, 1, 2, 0};
    CHECK(encode_pattern(colors, 3) == 15);
    CHECK(decode_pattern(15, 4, 3) == colors);
    for (std::uint64_t code = 0; code < 16; ++code) {
        CHECK(encode_pattern(decode_pattern(code, 4, 2), 2) == code);
    }
    CHECK_THROWS(encode_pattern({3, 0, 0, 0}, 3));
}

TEST_CASE("graph validation, CSR adjacency, text round-trip") {
    Graph g(4, {{0, 1}, {1, 2}, {2, 3}, {3, 0}, {0, 2}});
    CHECK(g.neighbors(0).size() == 3);
    CHECK(g.neighbors(1).size() == 2);
    auto nb0 = g.neighbors(0);
    CHECK(std::vector<int>(nb0.begin(), nb0.end()) == std::vector<int>{1, 2, 3});
    CHECK_THROWS_AS(Graph(3, {{0, 0}}), std::invalid_argument);
    CHECK_THROWS_AS(Graph(3, {{0, 1}, {1, 0}}), std::invalid_argument);
    CHECK_THROWS_AS(Graph(3, {{0, 5}}), std::invalid_argument);
    std::ostringstream txt;
    g.to_text(txt);
    std::istringstream tin(txt.str());
    Graph h = Graph::from_text(tin);
    CHECK(h.n == g.n);
    CHECK(h.edges == g.edges);

    GhostGraph gg{g};
    CHECK(gg.num_vertices() == 5);
    CHECK(gg.num_edges() == 9);
    CHECK(gg.ghost() == 4);
    CHECK(!gg.is_ghost_edge(4));
    CHECK(gg.is_ghost_edge(5));
    auto [u, v] = gg.edge(7);
    CHECK(u == 2);
    CHECK(v == 4);
}

TEST_CASE("union-find merges and counts components") {
    UnionFind uf(6);
    CHECK(uf.components == 6);
    CHECK(uf.unite(0, 1));
    CHECK(uf.unite(2, 3));
    CHECK(!uf.unite(1, 0));
    CHECK(uf.components == 4);
    CHECK(uf.connected(0, 1));
    CHECK(!uf.connected(0, 2));
    uf.unite(1, 2);
    CHECK(uf.connected(0, 3));
    CHECK(uf.components == 3);
    uf.reset();
    CHECK(uf.components == 6);
    CHECK(!uf.connected(0, 1));
}

TEST_CASE("neighborhood law normalization, marginals, permutation, csv") {
    NeighborhoodLaw law(2, 3, 1);  // T_3(1): 4 vertices, 16 patterns
    CHECK(law.n_vertices == 4);
    CHECK(law.prob.size() == 16);
    for (std::size_t i = 0; i < 16; ++i) law.prob[i] = static_cast<double>(i + 1);
    law.normalize();
    CHECK(law.sum() == doctest::Approx(1.0).epsilon(1e-14));

    // marginal to depth 0 groups blocks of q^{n-1} = 8 consecutive codes
    NeighborhoodLaw root = law.marginal_to_depth(0);
    CHECK(root.prob.size() == 2);
    double s0 = 0, s1 = 0;
    for (int i = 0; i < 8; ++i) s0 += law.prob[i];
    for (int i = 8; i < 16; ++i) s1 += law.prob[i];
    CHECK(root.prob[0] == doctest::Approx(s0).epsilon(1e-14));
    CHECK(root.prob[1] == doctest::Approx(s1).epsilon(1e-14));

    // color swap is an involution acting on codes
    NeighborhoodLaw swapped = law.permuted_colors({1, 0});
    CHECK(swapped.prob[0] == doctest::Approx(law.prob[15]).epsilon(1e-14));
    CHECK(swapped.prob[1] == doctest::Approx(law.prob[14]).epsilon(1e-14));
    NeighborhoodLaw twice = swapped.permuted_colors({1, 0});
    CHECK(twice.max_abs_diff(law) < 1e-16);
    CHECK(law.tv_distance(law) == 0.0);
    CHECK(law.tv_distance(swapped) > 0.0);

    std::ostringstream os;
    law.to_csv(os);
    std::istringstream is(os.str());
    NeighborhoodLaw back = NeighborhoodLaw::from_csv(is, 2, 3, 1);
    CHECK(back.max_abs_diff(law) < 1e-18);

    CHECK_THROWS(NeighborhoodLaw(3, 3, 4));  // 3^22 exceeds the default cap
}
