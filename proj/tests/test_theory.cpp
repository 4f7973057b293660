// Copyright (c) 2026, The facade-sim Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include "doctest.h"
#include "facade/theory.hpp"

using namespace facade;
using namespace facade::theory;

namespace {

ProtocolConfig theory_config(std::size_t k = 2) {
    ProtocolConfig c;
    c.algorithm = Algorithm::facade;
    c.k = k;
    c.eta = 0.1;
    c.local_steps = 2;
    c.degree = 2;
    c.seed = 3;
    return c;
}

double dist(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
}

}  // namespace

TEST_CASE("optima are placed at pairwise distance Delta") {
    const auto net = build_quadratic_network(2, {3, 1}, 4.0, 0.0, 2, 1);
    CHECK(std::abs(dist(net.optima[0], net.optima[1]) - 4.0) < 1e-12);
    CHECK(net.min_separation() == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(net.min_cluster_fraction() == 0.25);
    const auto three = build_quadratic_network(3, {2, 2, 2}, 5.0, 0.0, 4, 9);
    for (std::size_t a = 0; a < 3; ++a)
        for (std::size_t b = a + 1; b < 3; ++b) CHECK(std::abs(dist(three.optima[a], three.optima[b]) - 5.0) < 1e-12);
}

TEST_CASE("infeasible placements are rejected") {
    CHECK_THROWS_AS(build_quadratic_network(3, {1, 1, 1}, 4.0, 0.0, 2, 1), ConfigError);
    CHECK_THROWS_AS(build_quadratic_network(2, {1, 1}, 4.0, 0.0, 2, 1, 0.5), ConfigError);
    CHECK_THROWS_AS(build_quadratic_network(2, {1}, 4.0, 0.0, 2, 1), ConfigError);
}

TEST_CASE("offsets are zero-mean, bounded, and keep the cluster optimum") {
    const auto net = build_quadratic_network(2, {5, 3}, 4.0, 0.0, 3, 2, 0.2);
    for (std::size_t j = 0; j < 2; ++j) {
        std::vector<double> mean(3, 0.0);
        const auto members = net.clusters.nodes_in(j);
        for (auto i : members) {
            CHECK(dist(net.centers[i], net.optima[j]) <= 0.4 + 1e-12);
            for (std::size_t d = 0; d < 3; ++d) mean[d] += net.centers[i][d] / static_cast<double>(members.size());
        }
        CHECK(dist(mean, net.optima[j]) < 1e-12);
    }
}

TEST_CASE("zero noise, zero offset: gradients vanish at the optima") {
    const auto net = build_quadratic_network(2, {2, 2}, 4.0, 0.0, 2, 5);
    const auto obj = make_objectives(net);
    Rng rng(1);
    for (std::size_t i = 0; i < 4; ++i) {
        const auto j = net.clusters.cluster_of(i);
        std::vector<double> p{0.7};
        p.insert(p.end(), net.optima[j].begin(), net.optima[j].end());
        std::vector<double> g(p.size());
        obj[i]->draw_batch(rng);
        CHECK(obj[i]->loss_and_grad(p, g) == 0.0);
        for (double v : g) CHECK(v == 0.0);
    }
}

TEST_CASE("gradient noise variance is noise^2 per coordinate") {
    QuadraticObjective q({0.0, 0.0, 0.0}, 0.3);
    Rng rng(8);
    std::vector<double> sum(3, 0.0), sq(3, 0.0);
    const int draws = 10000;
    for (int r = 0; r < draws; ++r) {
        q.draw_batch(rng);
        const auto e = q.perturbation();
        for (std::size_t d = 0; d < 3; ++d) {
            sum[d] += e[d];
            sq[d] += e[d] * e[d];
        }
    }
    for (std::size_t d = 0; d < 3; ++d) {
        const double mean = sum[d] / draws;
        const double var = sq[d] / draws - mean * mean;
        CHECK(var == doctest::Approx(0.09).epsilon(0.1));
    }
}

TEST_CASE("settling time and contraction factor") {
    CHECK(settling_rounds(0.25, 1, 1, 4.0, 0.01) == static_cast<std::size_t>(std::ceil(32.0 * std::log(800.0))));
    CHECK(contraction_factor(0.25, 1, 1) == 1.0 - 1.0 / 32.0);
    CHECK(settling_rounds(0.5, 1, 1, 0.001, 0.01) == 0);
}

TEST_CASE("compliant initialization sits on the boundary") {
    const auto net = build_quadratic_network(2, {3, 1}, 4.0, 0.0, 2, 1);
    TheoryParams params;
    const auto heads = compliant_initial_heads(net, params, 7);
    for (std::size_t j = 0; j < 2; ++j) CHECK(dist(heads[j], net.optima[j]) == doctest::Approx(0.25 * 4.0));
    CHECK(initialization_compliant(net, params, heads));
    auto bad = heads;
    bad[0] = net.optima[1];
    CHECK_FALSE(initialization_compliant(net, params, bad));
}

TEST_CASE("zero noise: exact geometric decay and immediate identification") {
    const auto net = build_quadratic_network(2, {3, 1}, 4.0, 0.0, 2, 1);
    const TheoryParams params;
    const auto cfg = theory_config();
    const auto rep = contraction_check(net, cfg, params);
    CHECK(rep.pass);
    REQUIRE(rep.identified_from.has_value());
    CHECK(*rep.identified_from == 1);
    CHECK(rep.max_exact_deviation <= 1e-9);
    CHECK(rep.exact_rate == doctest::Approx(0.81));
    for (std::size_t j = 0; j < 2; ++j) {
        CHECK(rep.noise_floor[j] == 0.0);
        CHECK(rep.terminal[j] < 1e-10);
    }
    // Brute-force oracle: with the compliant heads each node's own head has the
    // lowest loss.
    const auto heads = compliant_initial_heads(net, params, derive_seed(cfg.seed, stream::init, 0));
    for (std::size_t i = 0; i < 4; ++i) {
        const auto j = net.clusters.cluster_of(i);
        CHECK(dist(heads[j], net.centers[i]) < dist(heads[1 - j], net.centers[i]));
    }
    for (const auto& reported : rep.trajectory.reported) CHECK(reported == net.clusters.assignment());
}

TEST_CASE("noisy network: terminal distance within eps plus the noise floor by T-hat") {
    const auto net = build_quadratic_network(2, {3, 1}, 4.0, 4.0 / 20.0, 2, 1);
    const auto rep = contraction_check(net, theory_config(), TheoryParams{});
    CHECK(rep.pass);
    CHECK(rep.rounds == rep.t_hat);
    for (std::size_t j = 0; j < 2; ++j) {
        CHECK(rep.noise_floor[j] > 0.0);
        CHECK(rep.at_t_hat[j] <= 0.01 + rep.noise_floor[j]);
        if (!std::isnan(rep.fitted_ratio[j])) CHECK(rep.fitted_ratio[j] >= rep.exact_rate * (1.0 - 1e-6));
    }
}

TEST_CASE("Delta = 0 fails with a diagnostic and recovery is not applicable") {
    const auto net = build_quadratic_network(2, {3, 1}, 0.0, 0.0, 2, 1);
    const auto rep = contraction_check(net, theory_config(), TheoryParams{});
    CHECK_FALSE(rep.pass);
    CHECK_FALSE(rep.diagnostics.empty());
    CHECK_FALSE(cluster_recovery_rate(net, theory_config(), TheoryParams{}, 5).has_value());
}

TEST_CASE("cluster recovery") {
    auto cfg = theory_config();
    cfg.rounds = 60;
    const auto clean = build_quadratic_network(2, {3, 1}, 4.0, 0.0, 2, 1);
    CHECK(cluster_recovery_rate(clean, cfg, TheoryParams{}, 10) == 1.0);
    const auto noisy = build_quadratic_network(2, {3, 1}, 4.0, 0.2, 2, 1);
    const auto rate = cluster_recovery_rate(noisy, cfg, TheoryParams{}, 50);
    REQUIRE(rate.has_value());
    CHECK(*rate >= 0.95);
}

TEST_CASE("reported clusters partition the nodes every round") {
    const auto net = build_quadratic_network(3, {2, 2, 2}, 4.0, 0.5, 3, 4);
    auto cfg = theory_config(3);
    const auto heads = compliant_initial_heads(net, TheoryParams{}, 1);
    const auto tr = simulate(net, cfg, heads, 20);
    CHECK(tr.reported.size() == 20);
    for (const auto& r : tr.reported) {
        CHECK(r.size() == 6);
        for (auto j : r) CHECK(j < 3);
    }
}
