// Copyright (c) 2026, The facade-sim Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <future>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "facade/experiment.hpp"
#include "facade/fairness.hpp"
#include "facade/protocols.hpp"
#include "facade/theory.hpp"
#include "facade/tinynet.hpp"

using namespace facade;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

ExperimentConfig desk(const std::string& algorithm, std::size_t k, std::vector<std::size_t> sizes) {
    nlohmann::json j{{"algorithm", algorithm}, {"k", k}};
    j["clusters"] = {{"sizes", sizes}};
    return parse_experiment_config(j);
}

std::vector<RunResult> run_seeds(const ExperimentConfig& cfg, const ExperimentData& data,
                                 const std::vector<std::uint64_t>& seeds) {
    std::vector<std::future<RunResult>> jobs;
    for (auto s : seeds)
        jobs.push_back(std::async(std::launch::async, [&, s] {
            auto pc = cfg.protocol;
            pc.seed = s;
            RunOptions opts;
            opts.fairness_weight = cfg.fairness_weight;
            return run(pc, cfg.clusters, cfg.arch, data.nodes, data.tests, opts);
        }));
    std::vector<RunResult> out;
    for (auto& j : jobs) out.push_back(j.get());
    return out;
}

// 1 ---------------------------------------------------------------------------
Outcome equivalence() {
    const auto t0 = Clock::now();
    auto fc = desk("facade", 1, {12, 4});
    auto ec = desk("el", 1, {12, 4});
    fc.protocol.rounds = ec.protocol.rounds = 50;
    fc.protocol.eval_every = ec.protocol.eval_every = 5;
    const auto data = build_datasets(fc);
    const std::size_t n = 16;
    double worst = 0.0;
    bool metrics_equal = true;
    for (std::uint64_t seed : {1, 2, 3}) {
        auto f = fc.protocol, e = ec.protocol;
        f.seed = e.seed = seed;
        auto fs = init_states(f, fc.arch, n), es = init_states(e, ec.arch, n);
        Objectives fo, eo;
        for (const auto& d : data.nodes) {
            fo.push_back(std::make_unique<NetObjective>(fc.arch, d.train, f.batch_size));
            eo.push_back(std::make_unique<NetObjective>(ec.arch, d.train, e.batch_size));
        }
        for (std::uint64_t t = 0; t < 50; ++t) {
            facade_round(fs, round_topology(f, n, t), t, f, fo);
            el_round(es, round_topology(e, n, t), t, e, eo);
            for (std::size_t i = 0; i < n; ++i) {
                const auto a = fs[i].effective_model(), b = es[i].effective_model();
                for (std::size_t d = 0; d < a.size(); ++d) worst = std::max(worst, std::abs(a[d] - b[d]));
            }
        }
        const auto rf = run(f, fc.clusters, fc.arch, data.nodes, data.tests);
        const auto re = run(e, ec.clusters, ec.arch, data.nodes, data.tests);
        if (rf.records.size() != re.records.size()) metrics_equal = false;
        for (std::size_t r = 0; metrics_equal && r < rf.records.size(); ++r) {
            auto jf = to_json(rf.records[r], Algorithm::el).dump();
            auto je = to_json(re.records[r], Algorithm::el).dump();
            metrics_equal = jf == je;
        }
        metrics_equal = metrics_equal && rf.final_predictions == re.final_predictions;
    }
    const double secs = seconds_since(t0);
    return {worst <= 1e-12 && metrics_equal && secs < 60.0,
            fmt("max |param diff| = %.3g over 3 seeds x 50 rounds, metric streams %s, %.1fs", worst,
                metrics_equal ? "identical" : "DIFFER", secs)};
}

// 2 ---------------------------------------------------------------------------
Outcome fair_accuracy_table() {
    const double a = fair_accuracy(std::vector<double>{0.7332, 0.5996}, 2.0 / 3.0);
    const double b = fair_accuracy(std::vector<double>{0.7199, 0.3877}, 2.0 / 3.0);
    return {std::abs(a - 0.7331) <= 1e-4 && std::abs(b - 0.5918) <= 1e-4,
            fmt("(0.7332, 0.5996) -> %.5f (want 0.7331), (0.7199, 0.3877) -> %.5f (want 0.5918)", a, b)};
}

// 3 ---------------------------------------------------------------------------
Outcome gradient_check() {
    Rng rng(20240607);
    std::uniform_int_distribution<std::size_t> width(2, 12), depth(1, 2), bsz(1, 8);
    std::normal_distribution<double> g;
    double worst = 0.0;
    std::size_t coords = 0;
    for (int pair = 0; pair < 20; ++pair) {
        Architecture arch;
        arch.input_dim = width(rng);
        for (std::size_t l = depth(rng); l > 0; --l) arch.hidden_dims.push_back(width(rng));
        arch.num_classes = width(rng);
        auto params = init_params(arch, rng());
        for (auto& v : params.values()) v += 0.1 * g(rng);
        Batch batch;
        batch.dim = arch.input_dim;
        const auto b = bsz(rng);
        std::uniform_int_distribution<int> lab(0, static_cast<int>(arch.num_classes) - 1);
        for (std::size_t i = 0; i < b * arch.input_dim; ++i) batch.features.push_back(g(rng));
        for (std::size_t i = 0; i < b; ++i) batch.labels.push_back(lab(rng));
        const auto lg = loss_and_grad(arch, params, batch);
        std::vector<double> p(params.values().begin(), params.values().end());
        for (std::size_t d = 0; d < p.size(); ++d, ++coords) {
            const double keep = p[d];
            p[d] = keep + 1e-4;
            const double up = loss(arch, p, batch);
            p[d] = keep - 1e-4;
            const double down = loss(arch, p, batch);
            p[d] = keep;
            const double fd = (up - down) / 2e-4;
            const double scale = std::max({std::abs(fd), std::abs(lg.grad[d]), 1e-8});
            worst = std::max(worst, std::abs(fd - lg.grad[d]) / scale);
        }
    }
    return {worst <= 1e-3, fmt("20 pairs, %zu coordinates, max relative deviation %.3g", coords, worst)};
}

// 4 ---------------------------------------------------------------------------
Outcome theory_contraction() {
    const auto t0 = Clock::now();
    ProtocolConfig cfg;
    cfg.algorithm = Algorithm::facade;
    cfg.k = 2;
    cfg.eta = 0.1;
    cfg.local_steps = 2;
    cfg.degree = 2;
    cfg.seed = 1;
    const theory::TheoryParams params;

    const auto clean = theory::build_quadratic_network(2, {3, 1}, 4.0, 0.0, 2, 1);
    const auto heads = theory::compliant_initial_heads(clean, params, derive_seed(cfg.seed, stream::init, 0));
    const bool compliant = theory::initialization_compliant(clean, params, heads);
    const auto r0 = theory::contraction_check(clean, cfg, params);
    bool all_true = !r0.trajectory.reported.empty();
    for (const auto& rep : r0.trajectory.reported) all_true = all_true && rep == clean.clusters.assignment();
    const bool zero_ok = compliant && all_true && r0.identified_from == 1 && r0.max_exact_deviation <= 1e-9;

    const auto noisy = theory::build_quadratic_network(2, {3, 1}, 4.0, 4.0 / 20.0, 2, 1);
    const auto r1 = theory::contraction_check(noisy, cfg, params);
    bool noisy_ok = r1.populated && r1.rate_ok;
    double worst_excess = -1e300;
    for (std::size_t j = 0; j < 2; ++j) {
        const double limit = params.eps + r1.noise_floor[j];
        noisy_ok = noisy_ok && r1.at_t_hat[j] <= limit;
        worst_excess = std::max(worst_excess, r1.at_t_hat[j] - limit);
    }
    const double secs = seconds_since(t0);
    return {zero_ok && noisy_ok && secs < 60.0,
            fmt("zero noise: reports true from round %zu, max |d-(1-eta)^tH d0| = %.2g; noise Delta/20: "
                "T-hat = %zu, max d(T-hat) - (eps + floor) = %.3g, floor = %.3g/%.3g; %.1fs",
                r0.identified_from.value_or(0), r0.max_exact_deviation, r1.t_hat, worst_excess,
                r1.noise_floor[0], r1.noise_floor[1], secs)};
}

// 5 and 7 share the desk-scale runs.
struct DeskRuns {
    std::vector<RunResult> facade, el;
    std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
    double seconds = 0.0;
    std::size_t rounds = 0, n = 0, degree = 0;
};

DeskRuns desk_runs() {
    DeskRuns d;
    const auto t0 = Clock::now();
    const auto fc = desk("facade", 2, {12, 4});
    const auto ec = desk("el", 1, {12, 4});
    const auto data = build_datasets(fc);
    auto ff = std::async(std::launch::async, [&] { return run_seeds(fc, data, d.seeds); });
    d.el = run_seeds(ec, data, d.seeds);
    d.facade = ff.get();
    d.seconds = seconds_since(t0);
    d.rounds = fc.protocol.rounds;
    d.n = fc.clusters.num_nodes();
    d.degree = fc.protocol.degree;
    return d;
}

Outcome fairness_effect(const DeskRuns& d) {
    int good = 0;
    std::ostringstream os;
    for (std::size_t s = 0; s < d.seeds.size(); ++s) {
        const std::vector<std::size_t> sizes{12, 4};
        const auto f = fairness_report(d.facade[s].final_predictions, sizes);
        const auto e = fairness_report(d.el[s].final_predictions, sizes);
        const bool ok = f.acc_minority >= e.acc_minority + 0.05 && f.fair_acc > e.fair_acc;
        good += ok;
        os << fmt(" s%llu:min %+.1fpp fair %+.3f%s", static_cast<unsigned long long>(d.seeds[s]),
                  100.0 * (f.acc_minority - e.acc_minority), f.fair_acc - e.fair_acc, ok ? "" : "(x)");
    }
    return {good >= 4 && d.seconds < 600.0, fmt("%d/5 seeds;", good) + os.str() + fmt("; %.1fs", d.seconds)};
}

// 6 ---------------------------------------------------------------------------
Outcome settlement_rate() {
    const auto t0 = Clock::now();
    auto cfg = desk("facade", 3, {8, 5, 2});
    cfg.protocol.warmup_rounds = 20;
    const auto data = build_datasets(cfg);
    std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    const auto runs = run_seeds(cfg, data, seeds);
    int settled = 0;
    bool flagged = true;
    std::ostringstream os;
    for (std::size_t s = 0; s < seeds.size(); ++s) {
        std::vector<std::vector<std::size_t>> hist;
        for (const auto& st : runs[s].final_states) hist.push_back(st.selection_history);
        const auto rep = settlement(hist, cfg.clusters, cfg.settlement_window, 3);
        const bool in_time = rep.settled && *rep.settle_round + cfg.settlement_window <= 100;
        settled += in_time;
        if (in_time) {
            os << fmt(" s%llu:%zu", static_cast<unsigned long long>(seeds[s]), *rep.settle_round);
        } else {
            // Unsettled: the unused-head flags must agree with a direct scan of the histories.
            std::vector<bool> ever(3, false), late(3, false);
            const std::size_t rounds = hist.front().size();
            for (const auto& h : hist)
                for (std::size_t t = 0; t < rounds; ++t) {
                    ever[h[t]] = true;
                    if (t + cfg.settlement_window >= rounds) late[h[t]] = true;
                }
            std::vector<std::size_t> never, gone;
            for (std::size_t h = 0; h < 3; ++h) {
                if (!ever[h]) never.push_back(h);
                if (!late[h]) gone.push_back(h);
            }
            flagged = flagged && never == rep.never_selected && gone == rep.abandoned;
            std::string modal;
            for (const auto& m : rep.modal_head) modal += m ? std::to_string(*m) : std::string("-");
            os << fmt(" s%llu:unsettled(modal=%s never=%zu abandoned=%zu)",
                      static_cast<unsigned long long>(seeds[s]), modal.c_str(), rep.never_selected.size(),
                      rep.abandoned.size());
        }
    }
    return {settled >= 8 && flagged,
            fmt("%d/10 settled within 100 rounds (window %zu);", settled, cfg.settlement_window) + os.str() +
                fmt("; %.1fs", seconds_since(t0))};
}

// 7 ---------------------------------------------------------------------------
Outcome communication(const DeskRuns& d) {
    bool ok = true;
    std::uint64_t fb = 0, eb = 0;
    const std::uint64_t overhead = static_cast<std::uint64_t>(d.rounds * d.n * d.degree * 4);
    for (std::size_t s = 0; s < d.seeds.size(); ++s) {
        fb = d.facade[s].records.back().cumulative_bytes;
        eb = d.el[s].records.back().cumulative_bytes;
        ok = ok && fb == eb + overhead;
        // Per round as well.
        for (std::size_t r = 1; r + 1 < d.facade[s].records.size(); ++r)
            ok = ok && d.facade[s].records[r].bytes == d.el[s].records[r].bytes + d.n * d.degree * 4;
    }
    return {ok, fmt("facade %llu = el %llu + T*n*r*4 (%llu) in all seeds and rounds: %s",
                    static_cast<unsigned long long>(fb), static_cast<unsigned long long>(eb),
                    static_cast<unsigned long long>(overhead), ok ? "yes" : "NO")};
}

// 8 ---------------------------------------------------------------------------
Outcome fairness_metric_properties() {
    auto preds = [](std::vector<int> g0, std::vector<int> g1) {
        PredictionLog log;
        for (int p : g0) log.push_back({0, p, 0});
        for (int p : g1) log.push_back({0, p, 1});
        return log;
    };
    bool ok = demographic_parity(preds({0, 1, 2}, {2, 1, 0})) == 0.0 &&
              demographic_parity(preds({0, 0, 0}, {1, 1, 1})) == 2.0 &&
              demographic_parity(preds({0, 0, 1, 1}, {0, 1, 1, 1})) == 0.5;
    const PredictionLog same{{0, 0, 0}, {1, 1, 0}, {0, 0, 1}, {1, 1, 1}};
    const PredictionLog half{{0, 0, 0}, {1, 1, 0}, {0, 0, 1}, {0, 1, 1}, {1, 1, 1}, {1, 0, 1}};
    const PredictionLog missing{{0, 0, 0}, {2, 2, 0}, {0, 0, 1}};
    const auto em = equalized_odds(missing);
    ok = ok && equalized_odds(same).value == 0.0 && equalized_odds(half).value == 1.0 &&
         em.skipped_labels == std::vector<int>{2};
    const bool examples = ok;

    Rng rng(77);
    int trials = 0;
    for (; trials < 500; ++trials) {
        const int c = 2 + trials % 7;
        std::uniform_int_distribution<int> lab(0, c - 1);
        std::uniform_int_distribution<std::size_t> grp(0, 1);
        PredictionLog log;
        for (int i = 0; i < 150; ++i) log.push_back({lab(rng), lab(rng), grp(rng)});
        log.push_back({0, 0, 0});
        log.push_back({0, 0, 1});
        auto swapped = log;
        for (auto& r : swapped) r.group = 1 - r.group;
        std::vector<int> perm(static_cast<std::size_t>(c));
        for (int i = 0; i < c; ++i) perm[static_cast<std::size_t>(i)] = i;
        std::shuffle(perm.begin(), perm.end(), rng);
        auto relabeled = log;
        for (auto& r : relabeled) {
            r.truth = perm[static_cast<std::size_t>(r.truth)];
            r.predicted = perm[static_cast<std::size_t>(r.predicted)];
        }
        const double dp = demographic_parity(log);
        const double eo = equalized_odds(log).value;
        ok = ok && dp == demographic_parity(swapped) && eo == equalized_odds(swapped).value &&
             dp == demographic_parity(relabeled) && eo == equalized_odds(relabeled).value;
    }
    return {ok, fmt("hand examples %s; swap and relabel invariance exact over %d random logs",
                    examples ? "exact" : "WRONG", trials)};
}

}  // namespace

int main() {
    struct Line {
        const char* name;
        std::function<Outcome()> check;
    };
    int failures = 0;
    auto report = [&](int id, const char* name, const Outcome& o) {
        std::printf("[%s] %d %s: %s\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str());
        std::fflush(stdout);
        failures += !o.pass;
    };
    auto guarded = [](const std::function<Outcome()>& f) {
        try {
            return f();
        } catch (const std::exception& e) {
            return Outcome{false, std::string("exception: ") + e.what()};
        }
    };

    report(1, "facade k=1 equals el", guarded(equivalence));
    report(2, "fair accuracy table values", guarded(fair_accuracy_table));
    report(3, "gradient vs finite differences", guarded(gradient_check));
    report(4, "theory contraction", guarded(theory_contraction));
    DeskRuns desk;
    std::string desk_error;
    try {
        desk = desk_runs();
    } catch (const std::exception& e) {
        desk_error = e.what();
    }
    report(5, "desk-scale fairness effect",
           desk_error.empty() ? guarded([&] { return fairness_effect(desk); })
                              : Outcome{false, "exception: " + desk_error});
    report(6, "settlement 8:5:2", guarded(settlement_rate));
    report(7, "communication accounting",
           desk_error.empty() ? guarded([&] { return communication(desk); })
                              : Outcome{false, "exception: " + desk_error});
    report(8, "DP/EO properties", guarded(fairness_metric_properties));
    std::printf("%d/8 criteria passed\n", 8 - failures);
    return failures == 0 ? 0 : 1;
}
