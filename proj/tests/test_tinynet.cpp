// Copyright (c) 2026, The facade-sim Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "doctest.h"
#include "facade/tinynet.hpp"

using namespace facade;

namespace {

Batch random_batch(const Architecture& arch, std::size_t b, Rng& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    std::uniform_int_distribution<int> lab(0, static_cast<int>(arch.num_classes) - 1);
    Batch batch;
    batch.dim = arch.input_dim;
    for (std::size_t i = 0; i < b * arch.input_dim; ++i) batch.features.push_back(g(rng));
    for (std::size_t i = 0; i < b; ++i) batch.labels.push_back(lab(rng));
    return batch;
}

// Straightforward scalar forward pass, independent of the library's Eigen path.
double reference_loss(const Architecture& arch, const std::vector<double>& p, const Batch& batch) {
    std::vector<std::size_t> widths{arch.input_dim};
    for (auto h : arch.hidden_dims) widths.push_back(h);
    widths.push_back(arch.num_classes);
    double total = 0.0;
    for (std::size_t s = 0; s < batch.size(); ++s) {
        std::vector<double> a(batch.row(s).begin(), batch.row(s).end());
        std::size_t off = 0;
        for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
            const auto in = widths[l], out = widths[l + 1];
            std::vector<double> z(out);
            for (std::size_t o = 0; o < out; ++o) {
                double acc = p[off + in * out + o];
                for (std::size_t i = 0; i < in; ++i) acc += p[off + o * in + i] * a[i];
                z[o] = (l + 2 < widths.size()) ? std::max(0.0, acc) : acc;
            }
            off += in * out + out;
            a = std::move(z);
        }
        const double mx = *std::max_element(a.begin(), a.end());
        double se = 0.0;
        for (double v : a) se += std::exp(v - mx);
        total += -(a[static_cast<std::size_t>(batch.labels[s])] - mx - std::log(se));
    }
    return total / static_cast<double>(batch.size());
}

}  // namespace

TEST_CASE("parameter counting") {
    const Architecture arch{4, {8}, 3};
    CHECK(arch.param_count() == 67);
    CHECK(arch.core_len() == 40);
    CHECK(arch.head_len() == 27);
    const auto p = init_params(arch, 1);
    CHECK(p.size() == 67);
    CHECK(p.core_len() == 40);
}

TEST_CASE("invalid architectures") {
    CHECK_THROWS_AS(Architecture({0, {8}, 3}).validate(), ConfigError);
    CHECK_THROWS_AS(Architecture({4, {0}, 3}).validate(), ConfigError);
    CHECK_THROWS_AS(Architecture({4, {}, 3}).validate(), ConfigError);
}

TEST_CASE("init is deterministic and bounded by the layer's Glorot limit") {
    const Architecture arch{16, {32, 24}, 4};
    const auto a = init_params(arch, 42), b = init_params(arch, 42), c = init_params(arch, 43);
    CHECK(a == b);
    CHECK_FALSE(a == c);
    std::size_t off = 0;
    for (std::size_t l = 0; l < arch.num_layers(); ++l) {
        const double lim = std::sqrt(6.0 / static_cast<double>(arch.fan_in(l) + arch.fan_out(l)));
        const auto len = arch.fan_in(l) * arch.fan_out(l) + arch.fan_out(l);
        for (std::size_t i = off; i < off + len; ++i) CHECK(std::abs(a[i]) <= lim);
        off += len;
    }
    CHECK(off == a.size());
}

TEST_CASE("init mean is zero within three standard errors") {
    const Architecture arch{100, {100}, 2};
    const auto p = init_params(arch, 9);
    REQUIRE(p.size() >= 10000);
    // Per-layer variance lim^2/3; the standard error of the pooled mean follows.
    double var_sum = 0.0, sum = 0.0;
    std::size_t off = 0;
    for (std::size_t l = 0; l < arch.num_layers(); ++l) {
        const double lim = std::sqrt(6.0 / static_cast<double>(arch.fan_in(l) + arch.fan_out(l)));
        const auto len = arch.fan_in(l) * arch.fan_out(l) + arch.fan_out(l);
        var_sum += static_cast<double>(len) * lim * lim / 3.0;
        for (std::size_t i = off; i < off + len; ++i) sum += p[i];
        off += len;
    }
    const double n = static_cast<double>(p.size());
    CHECK(std::abs(sum / n) <= 3.0 * std::sqrt(var_sum) / n);
}

TEST_CASE("zero weights give ln C") {
    const Architecture arch{5, {4}, 3};
    ParamVector p(std::vector<double>(arch.param_count(), 0.0), arch.core_len());
    Rng rng(3);
    const auto batch = random_batch(arch, 6, rng);
    CHECK(loss_and_grad(arch, p, batch).loss == doctest::Approx(std::log(3.0)).epsilon(1e-12));
}

TEST_CASE("loss agrees with a scalar reference forward pass") {
    Rng rng(5);
    for (const Architecture& arch : {Architecture{3, {5}, 4}, Architecture{6, {7, 3}, 2}}) {
        const auto p = init_params(arch, 17);
        const auto batch = random_batch(arch, 9, rng);
        const std::vector<double> pv(p.values().begin(), p.values().end());
        CHECK(loss(arch, p.values(), batch) == doctest::Approx(reference_loss(arch, pv, batch)).epsilon(1e-12));
    }
}

TEST_CASE("gradient matches central finite differences") {
    Rng rng(2024);
    std::uniform_int_distribution<int> width(2, 6);
    for (int trial = 0; trial < 20; ++trial) {
        const Architecture arch{static_cast<std::size_t>(width(rng)), {static_cast<std::size_t>(width(rng))},
                                static_cast<std::size_t>(width(rng))};
        const auto p = init_params(arch, 100 + trial);
        const auto batch = random_batch(arch, 5, rng);
        const auto lg = loss_and_grad(arch, p, batch);
        const std::vector<double> base(p.values().begin(), p.values().end());
        double worst = 0.0;
        for (std::size_t i = 0; i < base.size(); ++i) {
            auto plus = base, minus = base;
            plus[i] += 1e-4;
            minus[i] -= 1e-4;
            const double fd = (reference_loss(arch, plus, batch) - reference_loss(arch, minus, batch)) / 2e-4;
            const double g = lg.grad[i];
            worst = std::max(worst, std::abs(g - fd) / std::max({std::abs(g), std::abs(fd), 1e-6}));
        }
        CHECK(worst <= 1e-3);
    }
}

TEST_CASE("duplicated sample batch gives the single-sample gradient") {
    const Architecture arch{4, {6}, 3};
    const auto p = init_params(arch, 8);
    Rng rng(1);
    const auto one = random_batch(arch, 1, rng);
    Batch dup = one;
    for (int r = 0; r < 3; ++r) {
        dup.features.insert(dup.features.end(), one.features.begin(), one.features.end());
        dup.labels.push_back(one.labels[0]);
    }
    const auto a = loss_and_grad(arch, p, one), b = loss_and_grad(arch, p, dup);
    CHECK(a.loss == doctest::Approx(b.loss).epsilon(1e-12));
    for (std::size_t i = 0; i < p.size(); ++i) CHECK(a.grad[i] == doctest::Approx(b.grad[i]).epsilon(1e-10));
}

TEST_CASE("loss is invariant to batch order") {
    const Architecture arch{4, {6}, 3};
    const auto p = init_params(arch, 8);
    Rng rng(11);
    const auto batch = random_batch(arch, 7, rng);
    Batch rev;
    rev.dim = batch.dim;
    for (std::size_t s = batch.size(); s-- > 0;) {
        rev.features.insert(rev.features.end(), batch.row(s).begin(), batch.row(s).end());
        rev.labels.push_back(batch.labels[s]);
    }
    CHECK(loss(arch, p.values(), batch) == doctest::Approx(loss(arch, p.values(), rev)).epsilon(1e-12));
}

TEST_CASE("dimension mismatches") {
    const Architecture arch{4, {6}, 3};
    ParamVector wrong(std::vector<double>(10, 0.0), 5);
    Rng rng(1);
    const auto batch = random_batch(arch, 2, rng);
    CHECK_THROWS_AS(loss_and_grad(arch, wrong, batch), DimensionMismatch);
    Batch bad = batch;
    bad.dim = 3;
    CHECK_THROWS_AS(loss_and_grad(arch, init_params(arch, 1), bad), DimensionMismatch);
}

TEST_CASE("sgd steps") {
    const Architecture arch{4, {6}, 3};
    const auto p = init_params(arch, 21);
    Rng rng(4);
    const auto batch = random_batch(arch, 5, rng);
    CHECK(sgd_steps(arch, p, batch, 0.0, 1) == p);
    const auto two = sgd_steps(arch, p, batch, 0.1, 2);
    CHECK(two == sgd_steps(arch, sgd_steps(arch, p, batch, 0.1, 1), batch, 0.1, 1));
    // One manual step.
    const auto g = loss_and_grad(arch, p, batch).grad;
    const auto one = sgd_steps(arch, p, batch, 0.1, 1);
    for (std::size_t i = 0; i < p.size(); ++i) CHECK(one[i] == p[i] - 0.1 * g[i]);
    CHECK(loss(arch, two.values(), batch) < loss(arch, p.values(), batch));
}

TEST_CASE("split and assemble are inverse") {
    const std::vector<double> c{1, 2, 3}, h{4, 5};
    const auto p = assemble(c, h);
    CHECK(p.core_len() == 3);
    const auto [c2, h2] = split(p);
    CHECK(c2 == c);
    CHECK(h2 == h);
    CHECK(assemble(c2, h2) == p);
    CHECK_THROWS(ParamVector({1.0, 2.0}, 2));
    CHECK_THROWS(ParamVector({1.0, 2.0}, 0));
}

TEST_CASE("binary serialization round-trips with a 16-byte header") {
    const auto p = init_params(Architecture{4, {8}, 3}, 2);
    std::ostringstream os(std::ios::binary);
    write_params(os, p);
    const auto bytes = os.str();
    CHECK(bytes.size() == serialized_bytes(67));
    CHECK(bytes.size() == 16 + 67 * 8);
    CHECK(static_cast<unsigned char>(bytes[0]) == 67);
    CHECK(static_cast<unsigned char>(bytes[8]) == 40);
    std::istringstream is(bytes, std::ios::binary);
    CHECK(read_params(is) == p);
    std::istringstream truncated(bytes.substr(0, 30), std::ios::binary);
    CHECK_THROWS_AS(read_params(truncated), IoError);
}

TEST_CASE("predict picks the argmax class") {
    // No hidden ReLU effect: identity-like head on positive features.
    const Architecture arch{2, {2}, 2};
    // Hidden: W = I, b = 0. Head: W = I, b = 0.
    ParamVector p({1, 0, 0, 1, 0, 0, 1, 0, 0, 1, 0, 0}, 6);
    const std::vector<double> x{3, 1, 0.5, 2};
    CHECK(predict(arch, p.values(), x, 2) == std::vector<int>{0, 1});
}
