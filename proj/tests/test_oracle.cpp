#include <cmath>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "potts/bethe.hpp"
#include "potts/oracle.hpp"

using namespace potts;
using doctest::Approx;

namespace {

Graph single_vertex() { return Graph(1, {}); }
Graph single_edge() { return Graph(2, {{0, 1}}); }
Graph path2() { return Graph(3, {{0, 1}, {1, 2}}); }
Graph triangle() { return Graph(3, {{0, 1}, {0, 2}, {1, 2}}); }

}  // namespace

TEST_CASE("spin law on a single vertex reproduces the field bias") {
    Params p(3, 3, 1.0, 1.0);
    ExactDistribution d = enumerate_potts(single_vertex(), p);
    REQUIRE(d.prob.size() == 3);
    double e = std::exp(1.0);
    CHECK(d.prob[0] == Approx(e / (e + 2.0)).epsilon(1e-14));
    CHECK(d.prob[1] == Approx(1.0 / (e + 2.0)).epsilon(1e-14));
    CHECK(d.total() == Approx(1.0).epsilon(1e-14));
}

TEST_CASE("edge agreement probability on a single edge without field") {
    for (double beta : {0.3, 1.0, 2.0}) {
        Params p(2, 3, beta, 0.0);
        ExactDistribution d = enumerate_potts(single_edge(), p);
        double agree = d.prob[0] + d.prob[3];  // codes 00 and 11
        CHECK(agree == Approx(std::exp(beta) / (std::exp(beta) + 1.0)).epsilon(1e-14));
    }
}

TEST_CASE("ghosted and plain spin enumerations define the same law") {
    Params p(3, 3, 0.7, 0.4);
    Graph g = triangle();
    ExactDistribution plain = enumerate_potts(g, p);
    ExactDistribution ghosted = enumerate_potts(GhostGraph(g), p);
    REQUIRE(plain.prob.size() == ghosted.prob.size());
    CHECK(ghosted.Z == Approx(plain.Z).epsilon(1e-13));
    for (std::size_t c = 0; c < plain.prob.size(); ++c)
        CHECK(ghosted.prob[c] == Approx(plain.prob[c]).epsilon(1e-13));
}

TEST_CASE("bond law closes every ghost bond when the field vanishes") {
    Params p(3, 3, 0.9, 0.0);
    GhostGraph gg(path2());
    ExactDistribution d = enumerate_rcm(gg, p);
    std::uint64_t base_masks = std::uint64_t{1} << gg.base.num_edges();
    for (std::uint64_t mask = 0; mask < d.prob.size(); ++mask)
        if (mask >= base_masks) CHECK(d.prob[mask] == 0.0);
}

TEST_CASE("single-bond opening probability matches the percolation factor") {
    for (int q : {2, 3}) {
        for (double beta : {0.5, 1.3}) {
            Params p(q, 3, beta, 0.0);
            ExactDistribution d = enumerate_rcm(GhostGraph(single_edge()), p);
            double open = 0.0;
            for (std::uint64_t mask = 0; mask < d.prob.size(); ++mask)
                if (mask & 1) open += d.prob[mask];
            double gamma = std::expm1(beta) / (std::exp(beta) + q - 1);
            CHECK(open == Approx(gamma).epsilon(1e-13));
        }
    }
}

TEST_CASE("spin, bond, and coupled partition functions coincide") {
    Params p(3, 3, 1.1, 0.6);
    Graph g = triangle();
    GhostGraph gg(g);
    double Zs = enumerate_potts(g, p).Z;
    CHECK(enumerate_rcm(gg, p).Z == Approx(Zs).epsilon(1e-12));
    CHECK(marginal_rcm(g, p).Z == Approx(Zs).epsilon(1e-12));
    CHECK(enumerate_es(gg, p).Z == Approx(Zs).epsilon(1e-12));
}

TEST_CASE("per-cluster field marginalization agrees with the summed ghost bonds") {
    CHECK(marginal_rcm_residual(triangle(), Params(3, 3, 1.0, 0.5)) < 1e-12);
    CHECK(marginal_rcm_residual(path2(), Params(2, 3, 0.4, 1.2)) < 1e-12);
    CHECK(marginal_rcm_residual(single_edge(), Params(4, 3, 2.0, 0.1)) < 1e-12);
}

TEST_CASE("coupled law has the right marginals and cluster-uniform colors") {
    CHECK(es_consistency(GhostGraph(path2()), Params(2, 3, 0.8, 0.3)) < 1e-12);
    CHECK(es_consistency(GhostGraph(triangle()), Params(3, 3, 1.2, 0.7)) < 1e-12);
    GhostGraph ball{tree_index(3, 1).to_graph()};
    CHECK(es_consistency(ball, Params(3, 3, 1.0, 0.5)) < 1e-12);
}

TEST_CASE("infinite-temperature zero-field law is a product of uniforms") {
    Params p(2, 3, 0.0, 0.0);
    ExactDistribution d = enumerate_potts(path2(), p);
    for (double pr : d.prob) CHECK(pr == Approx(0.125).epsilon(1e-14));
    CHECK(es_consistency(GhostGraph(path2()), p) < 1e-12);
}

TEST_CASE("two-point agreement ties to bond connectivity") {
    CHECK(correlation_identity_residual(GhostGraph(triangle()), Params(3, 3, 0.9, 0.4)) <
          1e-12);
    CHECK(correlation_identity_residual(GhostGraph(path2()), Params(2, 3, 1.5, 0.0)) <
          1e-12);
}

TEST_CASE("restricted partition functions resum to the full one") {
    Params p(3, 3, 0.8, 0.5);
    GhostGraph gg(triangle());
    double Z = enumerate_potts(gg, p).Z;

    SUBCASE("no frozen bonds") {
        CHECK(restricted_Z(gg, {}, 0, p) == Approx(Z).epsilon(1e-12));
    }
    SUBCASE("one frozen bond") {
        double z0 = restricted_Z(gg, {1}, 0, p);
        double z1 = restricted_Z(gg, {1}, 1, p);
        CHECK(z0 + z1 == Approx(Z).epsilon(1e-12));
    }
    SUBCASE("mixed tree and ghost bonds frozen") {
        std::vector<int> W = {0, 2, 4};  // two base edges and one ghost edge
        double sum = 0.0;
        for (std::uint64_t y = 0; y < 8; ++y) sum += restricted_Z(gg, W, y, p);
        CHECK(sum == Approx(Z).epsilon(1e-12));
    }
}

TEST_CASE("leaf message without subtree equals the closed-form field bias") {
    // with the bond to the root closed and nothing frozen, a leaf joins the
    // ghost only through its own ghost bond
    Params p(3, 3, 1.0, 0.8);
    GhostGraph ball{tree_index(3, 1).to_graph()};
    double s = pre_message(ball, 1, 0, {}, 0, p);
    double expect = std::expm1(p.B) / (std::exp(p.B) + p.q - 1);
    CHECK(s == Approx(expect).epsilon(1e-12));
}

TEST_CASE("root removal and rewiring identities hold on the 4-regular ball") {
    Params p(3, 4, 0.8, 0.3);
    std::vector<int> identity = {0, 1, 2, 3};
    std::vector<int> swapped = {1, 0, 2, 3};  // transposition inside a pair
    std::vector<int> crossed = {0, 2, 1, 3};  // changes the pairing itself
    for (std::uint64_t y : {std::uint64_t{0}, std::uint64_t{0x5a5a5a}, std::uint64_t{0xffffff}}) {
        SurgeryCheck c = surgery_ratio_check(4, 2, 1, y, p, identity);
        CHECK(c.residual_vx < 1e-9);
        REQUIRE(c.residual_e.has_value());
        CHECK(*c.residual_e < 1e-9);
        SurgeryCheck cs = surgery_ratio_check(4, 2, 1, y, p, swapped);
        CHECK(*cs.residual_e < 1e-9);
        SurgeryCheck cx = surgery_ratio_check(4, 2, 1, y, p, crossed);
        CHECK(*cx.residual_e < 1e-9);
    }
}

TEST_CASE("surgery identities at infinite temperature reduce to constants") {
    // with all bonds independent the ratios lose their y-dependence:
    // the vertex functional becomes e^B + q - 1 and the edge one becomes 1
    Params p(3, 4, 0.0, 0.7);
    std::vector<int> identity = {0, 1, 2, 3};
    // only ghost bonds may be frozen open here: an open tree bond is a
    // null event at infinite temperature
    SurgeryCheck c = surgery_ratio_check(4, 2, 1, std::uint64_t{0x5a5} << 12, p, identity);
    CHECK(c.residual_vx < 1e-12);
    CHECK(*c.residual_e < 1e-12);
    std::vector<double> s(4, 0.123);
    CHECK(psi_vx(s, p) == Approx(std::exp(p.B) + p.q - 1).epsilon(1e-13));
    CHECK(psi_e(s, p) == Approx(1.0).epsilon(1e-13));
}

TEST_CASE("boundary partition enumeration counts and masks") {
    CHECK(enumerate_boundary_partitions(2).size() == 5);    // Bell(3)
    CHECK(enumerate_boundary_partitions(3).size() == 15);   // Bell(4)
    CHECK(enumerate_boundary_partitions(4).size() == 52);   // Bell(5)

    std::vector<BoundaryPartition> parts = enumerate_boundary_partitions(2);
    CHECK(parts.front().block == std::vector<int>{0, 0, 0});  // fully wired
    CHECK(parts.back().block == std::vector<int>{0, 1, 2});   // free

    CHECK(boundary_edge_mask(BoundaryPartition{{0, 0, 0}}) == 0b111);
    CHECK(boundary_edge_mask(BoundaryPartition{{0, 1, 2}}) == 0);
    CHECK(boundary_edge_mask(BoundaryPartition{{0, 1, 1}}) == 0b001);
    CHECK(boundary_edge_mask(BoundaryPartition{{0, 0, 1}}) == 0b010);

    CHECK(BoundaryPartition{{0, 1, 2}}.refines(BoundaryPartition{{0, 1, 1}}));
    CHECK(BoundaryPartition{{0, 1, 1}}.refines(BoundaryPartition{{0, 0, 0}}));
    CHECK_FALSE(BoundaryPartition{{0, 0, 1}}.refines(BoundaryPartition{{0, 1, 1}}));
    CHECK(BoundaryPartition{{0, 1, 2}}.ghost_isolated());
    CHECK_FALSE(BoundaryPartition{{0, 0, 1}}.ghost_isolated());
    CHECK(all_singletons_outside_ghost(BoundaryPartition{{0, 0, 1}}));
    CHECK_FALSE(all_singletons_outside_ghost(BoundaryPartition{{0, 1, 1}}));
}

TEST_CASE("boundary connectivity count responds to bonds and wiring") {
    TreeIndex ball = tree_index(3, 2);
    std::vector<int> singles(ball.num_leaves() + 1);
    std::iota(singles.begin(), singles.end(), 0);
    BoundaryPartition free{singles};

    CHECK(gF_value(ball, 1, 0, free) == 0);
    std::uint64_t tree_open = (std::uint64_t{1} << (ball.n - 1)) - 1;
    CHECK(gF_value(ball, 1, tree_open, free) == 9);

    // pairing the leaves 4 and 6 links the depth-1 vertices 1 and 2 once the
    // bonds (1,4) and (2,6) open, giving exactly those two incidences
    BoundaryPartition paired{{0, 1, 2, 1, 3, 4, 5}};
    std::uint64_t mask = (std::uint64_t{1} << 3) | (std::uint64_t{1} << 5);
    CHECK(gF_value(ball, 1, mask, paired) == 2);
    CHECK(gF_value(ball, 1, 0, paired) == 0);
}

TEST_CASE("coarser boundary wiring strictly raises expected connectivity") {
    Params p(3, 3, 1.0, 0.2);
    TreeIndex ball = tree_index(3, 2);
    std::vector<int> fine(ball.num_leaves() + 1), coarse(ball.num_leaves() + 1);
    std::iota(fine.begin(), fine.end(), 0);
    std::iota(coarse.begin(), coarse.end(), 0);
    coarse[2] = 1;
    for (int i = 3; i <= ball.num_leaves(); ++i) coarse[i] = i - 1;
    double lo = gF_expectation(3, 1, BoundaryPartition{fine}, p);
    double hi = gF_expectation(3, 1, BoundaryPartition{coarse}, p);
    CHECK(lo > 0.0);
    CHECK(hi > lo + 1e-6);
}

TEST_CASE("monotone coupling feasibility on hand-built laws") {
    std::vector<std::uint64_t> masks = {0b00, 0b01, 0b11};

    SUBCASE("identical laws couple diagonally") {
        std::vector<double> rho = {0.2, 0.3, 0.5};
        StochasticOrderResult r = stochastic_order(rho, rho, masks);
        CHECK(r.feasible);
        CHECK(r.mass_shortfall < 1e-12);
    }
    SUBCASE("point mass below a larger point mass") {
        std::vector<double> lo = {1.0, 0.0, 0.0}, hi = {0.0, 0.0, 1.0};
        CHECK(stochastic_order(lo, hi, masks).feasible);
        CHECK_FALSE(stochastic_order(hi, lo, masks).feasible);
    }
    SUBCASE("incomparable point masses") {
        std::vector<std::uint64_t> m2 = {0b01, 0b10};
        std::vector<double> a = {1.0, 0.0}, b = {0.0, 1.0};
        CHECK_FALSE(stochastic_order(a, b, m2).feasible);
        CHECK_FALSE(stochastic_order(b, a, m2).feasible);
    }
}

TEST_CASE("free boundary law lies below the wired one") {
    Params p(3, 3, 1.0, 0.2);
    std::vector<double> lo = boundary_law_free(3, 1, p);
    std::vector<double> hi = boundary_law_wired(3, 1, p);
    CHECK(std::accumulate(lo.begin(), lo.end(), 0.0) == Approx(1.0).epsilon(1e-12));
    CHECK(std::accumulate(hi.begin(), hi.end(), 0.0) == Approx(1.0).epsilon(1e-12));
    std::vector<BoundaryPartition> parts = enumerate_boundary_partitions(3);
    std::vector<std::uint64_t> masks;
    for (const auto& C : parts) masks.push_back(boundary_edge_mask(C));
    StochasticOrderResult r = stochastic_order(lo, hi, masks);
    CHECK(r.feasible);
    double row_err = 0.0;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        double row = std::accumulate(r.coupling[i].begin(), r.coupling[i].end(), 0.0);
        row_err = std::max(row_err, std::abs(row - lo[i]));
    }
    CHECK(row_err < 1e-10);
}

TEST_CASE("induced boundary law at infinite temperature is all singletons") {
    Params p(3, 3, 0.0, 0.0);
    std::vector<double> law = boundary_law_free(3, 1, p);
    std::vector<BoundaryPartition> parts = enumerate_boundary_partitions(3);
    REQUIRE(law.size() == parts.size());
    for (std::size_t i = 0; i < parts.size(); ++i) {
        bool is_free = parts[i].block == std::vector<int>{0, 1, 2, 3};
        CHECK(law[i] == Approx(is_free ? 1.0 : 0.0).epsilon(1e-14));
    }
}

TEST_CASE("ghost-avoiding boundary connection obeys the field-decay bound") {
    Params p(3, 3, 1.0, 2.0);
    for (int s : {1, 2}) {
        double prob = ghost_decay_probe(3, 1, s, p);
        CHECK(prob > 0.0);
        CHECK(prob <= p.q * p.q * std::exp(-2.0 * p.B * s));
    }
}

TEST_CASE("split-and-permute coloring is exactly uniform") {
    CHECK(sim_unif_check(0, 2) < 1e-15);
    CHECK(sim_unif_check(1, 3) < 1e-15);
    CHECK(sim_unif_check(3, 2) < 1e-14);
    CHECK(sim_unif_check(4, 3) < 1e-14);
}

TEST_CASE("ground-truth suite passes end to end on a small draw") {
    std::vector<OracleCheck> checks = run_oracle_suite(3, 20260815);
    CHECK(checks.size() >= 30);
    for (const OracleCheck& c : checks) {
        INFO(c.check_name << " on " << c.instance << " residual " << c.max_residual);
        CHECK(c.pass);
    }
}
