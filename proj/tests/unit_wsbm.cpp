#include "ccme/wsbm.hpp"

#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <set>

using namespace ccme;

TEST_CASE("truncated power law mean") {
    CHECK(truncated_power_law_mean(-1.0, 1.0, std::exp(1.0)) == doctest::Approx(std::exp(1.0) - 1.0));
    CHECK(truncated_power_law_mean(-2.0, 1.0, 2.0) == doctest::Approx(2.0 * std::log(2.0)));
    CHECK(truncated_power_law_mean(0.0, 1.0, 3.0) == doctest::Approx(2.0));
    // x^-3 on [1, 2]: (1 - 1/2) / ((1 - 1/4) / 2)
    CHECK(truncated_power_law_mean(-3.0, 1.0, 2.0) == doctest::Approx(4.0 / 3.0));
}

TEST_CASE("power law sampler") {
    const auto x = sample_truncated_power_law(-1.0, 4.0, 60.0, 100000, 3);
    const double want = truncated_power_law_mean(-1.0, 4.0, 60.0);
    CHECK(std::abs(testing::mean(x) / want - 1.0) < 0.02);
    for (double v : x) {
        REQUIRE(v >= 4.0);
        REQUIRE(v <= 60.0);
    }
    for (double v : sample_truncated_power_law(-2.0, 5.0, 5.0, 10, 1))
        CHECK(v == 5.0);
    CHECK_THROWS_AS(sample_truncated_power_law(-2.0, 6.0, 5.0, 10, 1), DomainError);

    const double lo = power_law_lower_bound_for_mean(-1.0, 20.0, 60.0);
    CHECK(truncated_power_law_mean(-1.0, lo, 60.0) == doctest::Approx(20.0).epsilon(1e-6));
}

TEST_CASE("membership cover") {
    SUBCASE("partition") {
        BenchmarkConfig cfg;
        cfg.n = 500;
        const auto m = build_membership_cover(cfg.resolved(), 2);
        std::size_t total = 0;
        for (const auto& c : m.communities)
            total += c.size();
        CHECK(total == 500);
        for (const auto& b : m.of_node)
            CHECK(b.size() == 1);
    }
    SUBCASE("overlap") {
        BenchmarkConfig cfg;
        cfg.n = 100;
        cfg.o_n = 10;
        cfg.o_m = 2;
        CHECK(cfg.memberships() == 110);
        const auto m = build_membership_cover(cfg.resolved(), 8);
        std::size_t total = 0, doubles = 0;
        for (const auto& c : m.communities) {
            total += c.size();
            CHECK(std::set<NodeId>(c.begin(), c.end()).size() == c.size());
        }
        for (const auto& b : m.of_node)
            doubles += b.size() == 2;
        CHECK(total == 110);
        CHECK(doubles == 10);
    }
}

TEST_CASE("config validation names the field") {
    BenchmarkConfig cfg;
    cfg.s_e = -1.0;
    CHECK_THROWS_WITH_AS(cfg.validate(), doctest::Contains("s_e"), ValidationError);
    BenchmarkConfig c2;
    c2.o_n = 5000;
    CHECK_THROWS_AS(c2.validate(), ValidationError);
}

TEST_CASE("linear strength law when beta is zero") {
    BenchmarkConfig cfg;
    cfg.beta = 0.0;
    const auto p = draw_propensities(cfg.resolved(), 50, 4);
    for (std::size_t i = 0; i < 50; ++i)
        CHECK(p.psi[i] == doctest::Approx(p.phi[i]));
}

TEST_CASE("wsbm totals and normalisation") {
    BenchmarkConfig cfg;
    cfg.n = 1000;
    const auto r = cfg.resolved();
    const auto m = build_membership_cover(r, 1);
    const auto prop = draw_propensities(r, r.n, 2);
    const auto w = build_wsbm_config(r, m, prop.phi, prop.psi);
    CHECK(testing::mean(w.phi) == doctest::Approx(1.0));
    CHECK(testing::mean(w.psi) == doctest::Approx(1.0));
    const auto t = expected_totals(w);
    CHECK(t.degree / testing::mean(prop.phi) / 1000.0 == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(t.strength / testing::mean(prop.psi) / 1000.0 == doctest::Approx(1.0).epsilon(1e-9));

    const auto a = generate_wsbm(w, 6);
    const auto b = generate_wsbm(w, 6);
    CHECK(a.net.num_edges() == b.net.num_edges());
    // edge count within 5 sd of its expectation
    const double expected_edges = t.degree / 2.0;
    CHECK(std::abs(a.net.num_edges() - expected_edges) < 5.0 * std::sqrt(expected_edges));
}

TEST_CASE("all-ones blocks reduce to the configuration model") {
    BenchmarkConfig cfg;
    cfg.n = 2000;
    cfg.s_e = 1.0;
    cfg.s_w = 1.0;
    const auto r = cfg.resolved();
    const auto bench = generate_benchmark(r, 12);
    const auto k = estimate_kappa(bench.net);
    CHECK(k > 0.4);
    CHECK(k < 0.6);
}

TEST_CASE("adjusted total") {
    CHECK(adjusted_total(250.0, 300.0, 0.0) == doctest::Approx(250.0));
    // x^2 - (b + d) x - c b = 0 with d = 10, c = 20, b = 5
    const double x = adjusted_total(10.0, 20.0, 5.0);
    CHECK(x * x - 15.0 * x - 100.0 == doctest::Approx(0.0).scale(1.0));
    CHECK(x == doctest::Approx(20.0));
}

TEST_CASE("consistency condition") {
    BlockMatrix ones(2, 1.0);
    const std::vector<double> pi = {0.5, 0.5};
    const auto flat = consistency_condition(ones, ones, pi);
    CHECK_FALSE(flat.satisfied);
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j)
            CHECK(flat.matrix(i, j) == doctest::Approx(0.0).scale(1.0));

    const auto P = BlockMatrix::assortative(2, 3.0, 1.0);
    const auto c = consistency_condition(P, ones, pi);
    CHECK(c.satisfied);
    CHECK(c.matrix(0, 0) == doctest::Approx(1.0));
    CHECK(c.matrix(0, 1) == doctest::Approx(-1.0));
    CHECK(c.matrix(1, 0) == doctest::Approx(-1.0));
    CHECK(c.matrix(1, 1) == doctest::Approx(1.0));

    BlockMatrix zero(2, 0.0);
    CHECK_THROWS_AS(consistency_condition(zero, ones, pi), DomainError);
}

TEST_CASE("background nodes are appended") {
    BenchmarkConfig cfg;
    cfg.n = 600;
    cfg.n_b = 200;
    const auto bench = generate_benchmark(cfg, 3);
    CHECK(bench.net.num_nodes() == 800);
    CHECK(bench.truth.background.size() == 200);
    CHECK(bench.truth.cover.num_nodes == 800);
    for (NodeId b : bench.truth.background)
        CHECK(b >= 600);
    CHECK(bench.background.phi_residual < 1e-6 * bench.background.phi_prime_total);
}
