// Copyright (c) 2026, The facade-sim Authors
// SPDX-License-Identifier: Apache-2.0

#include "facade/theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace facade::theory {

namespace {

double distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t d = 0; d < a.size(); ++d) s += (a[d] - b[d]) * (a[d] - b[d]);
    return std::sqrt(s);
}

std::vector<double> random_direction(std::size_t dim, Rng& rng) {
    std::normal_distribution<double> normal;
    std::vector<double> u(dim);
    double norm = 0.0;
    do {
        for (auto& v : u) v = normal(rng);
        norm = std::sqrt(std::inner_product(u.begin(), u.end(), u.begin(), 0.0));
    } while (norm < 1e-12);
    for (auto& v : u) v /= norm;
    return u;
}

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace

void TheoryParams::validate() const {
    if (!(lambda_cvx > 0.0) || !(smoothness >= lambda_cvx))
        throw ConfigError("theory: need 0 < lambda <= L");
    if (alpha < 0.0 || alpha > 0.5) throw ConfigError("theory: alpha must lie in [0, 1/2]");
    if (!(delta_prob > 0.0 && delta_prob < 1.0)) throw ConfigError("theory: delta_prob must lie in (0, 1)");
    if (!(eps > 0.0)) throw ConfigError("theory: eps must be positive");
}

double QuadraticNetwork::min_separation() const {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < optima.size(); ++a)
        for (std::size_t b = a + 1; b < optima.size(); ++b) best = std::min(best, distance(optima[a], optima[b]));
    return optima.size() < 2 ? 0.0 : best;
}

double QuadraticNetwork::min_cluster_fraction() const {
    const auto smallest = *std::min_element(clusters.sizes.begin(), clusters.sizes.end());
    return static_cast<double>(smallest) / static_cast<double>(clusters.num_nodes());
}

QuadraticNetwork build_quadratic_network(std::size_t k, const std::vector<std::size_t>& sizes, double delta,
                                         double noise, std::size_t dim, std::uint64_t seed, double offset) {
    if (sizes.size() != k) throw ConfigError("theory: need one size per cluster");
    if (delta < 0.0 || noise < 0.0 || offset < 0.0) throw ConfigError("theory: Delta, noise and offset must be >= 0");
    if (dim < 1 || (k > 1 && dim < k))
        throw ConfigError("theory: cannot place " + std::to_string(k) + " optima at pairwise distance Delta in " +
                          std::to_string(dim) + " dimensions (need dim >= k)");
    if (offset > delta / 20.0) throw ConfigError("theory: offset must not exceed Delta/20");

    QuadraticNetwork net;
    net.clusters.sizes = sizes;
    net.clusters.transform_seeds.assign(k, 0);
    net.clusters.validate();
    net.dim = dim;
    net.noise = noise;

    // Scaled simplex vertices Δ/√2 e_j, rotated.
    const auto rot = random_rotation(dim, derive_seed(seed, stream::init, 1));
    for (std::size_t j = 0; j < k; ++j) {
        std::vector<double> opt(dim, 0.0);
        if (k > 1)
            for (std::size_t r = 0; r < dim; ++r) opt[r] = rot[r * dim + j] * delta / std::sqrt(2.0);
        net.optima.push_back(std::move(opt));
    }

    Rng rng(derive_seed(seed, stream::init, 2));
    std::uniform_real_distribution<double> radius(0.0, offset);
    net.centers.resize(net.clusters.num_nodes());
    for (std::size_t j = 0; j < k; ++j) {
        const auto members = net.clusters.nodes_in(j);
        std::vector<std::vector<double>> offs;
        std::vector<double> mean(dim, 0.0);
        for (std::size_t m = 0; m < members.size(); ++m) {
            auto u = random_direction(dim, rng);
            const double r = offset > 0.0 ? radius(rng) : 0.0;
            for (std::size_t d = 0; d < dim; ++d) {
                u[d] *= r;
                mean[d] += u[d] / static_cast<double>(members.size());
            }
            offs.push_back(std::move(u));
        }
        for (std::size_t m = 0; m < members.size(); ++m) {
            std::vector<double> c(dim);
            for (std::size_t d = 0; d < dim; ++d)
                c[d] = offset > 0.0 ? net.optima[j][d] + (offs[m][d] - mean[d]) : net.optima[j][d];
            net.centers[members[m]] = std::move(c);
        }
    }
    return net;
}

QuadraticObjective::QuadraticObjective(std::vector<double> center, double noise)
    : center_(std::move(center)), noise_(noise), perturbation_(center_.size(), 0.0) {}

void QuadraticObjective::draw_batch(Rng& rng) {
    if (noise_ == 0.0) return;
    std::normal_distribution<double> normal(0.0, noise_);
    for (auto& v : perturbation_) v = normal(rng);
}

double QuadraticObjective::loss(std::span<const double> params) const {
    if (params.size() != kInertCoreLen + center_.size()) throw DimensionMismatch("quadratic objective: bad length");
    double s = 0.0;
    for (std::size_t d = 0; d < center_.size(); ++d) {
        const double r = params[kInertCoreLen + d] - center_[d] + perturbation_[d];
        s += r * r;
    }
    return 0.5 * s;
}

double QuadraticObjective::loss_and_grad(std::span<const double> params, std::span<double> grad) const {
    const double l = loss(params);
    std::fill(grad.begin(), grad.begin() + kInertCoreLen, 0.0);
    for (std::size_t d = 0; d < center_.size(); ++d)
        grad[kInertCoreLen + d] = params[kInertCoreLen + d] - center_[d] + perturbation_[d];
    return l;
}

Objectives make_objectives(const QuadraticNetwork& net) {
    Objectives out;
    for (const auto& c : net.centers) out.push_back(std::make_unique<QuadraticObjective>(c, net.noise));
    return out;
}

std::vector<std::vector<double>> compliant_initial_heads(const QuadraticNetwork& net, const TheoryParams& params,
                                                         std::uint64_t seed) {
    params.validate();
    const double radius =
        (0.5 - params.alpha) * std::sqrt(params.lambda_cvx / params.smoothness) * net.min_separation();
    Rng rng(seed);
    std::vector<std::vector<double>> heads;
    for (const auto& opt : net.optima) {
        const auto u = random_direction(net.dim, rng);
        std::vector<double> h(net.dim);
        for (std::size_t d = 0; d < net.dim; ++d) h[d] = opt[d] + radius * u[d];
        heads.push_back(std::move(h));
    }
    return heads;
}

bool initialization_compliant(const QuadraticNetwork& net, const TheoryParams& params,
                              const std::vector<std::vector<double>>& heads) {
    const double bound =
        (0.5 - params.alpha) * std::sqrt(params.lambda_cvx / params.smoothness) * net.min_separation();
    for (std::size_t j = 0; j < net.optima.size(); ++j)
        if (distance(heads.at(j), net.optima[j]) > bound * (1.0 + 1e-12) + 1e-15) return false;
    return true;
}

std::vector<NodeState> make_states(const QuadraticNetwork& net, const ProtocolConfig& config,
                                   const std::vector<std::vector<double>>& heads) {
    if (heads.size() != config.k) throw DimensionMismatch("theory: one initial head per slot required");
    const ParamVector base = assemble(std::vector<double>(kInertCoreLen, 0.0), heads.front());
    std::vector<ParamVector> extra;
    for (std::size_t j = 1; j < heads.size(); ++j)
        extra.push_back(assemble(std::vector<double>(kInertCoreLen, 0.0), heads[j]));
    return init_states(config, base, extra, net.clusters.num_nodes());
}

std::size_t settling_rounds(double p, double lambda_cvx, double smoothness, double delta, double eps) {
    if (!(p > 0.0) || !(eps > 0.0)) throw ConfigError("theory: need p > 0 and eps > 0");
    if (delta <= eps / 2.0) return 0;
    return static_cast<std::size_t>(std::ceil(8.0 * smoothness / (p * lambda_cvx) * std::log(2.0 * delta / eps)));
}

double contraction_factor(double p, double lambda_cvx, double smoothness) {
    return 1.0 - p * lambda_cvx / (8.0 * smoothness);
}

Trajectory simulate(const QuadraticNetwork& net, const ProtocolConfig& config,
                    const std::vector<std::vector<double>>& heads, std::size_t rounds) {
    if (config.algorithm != Algorithm::facade) throw ConfigError("theory harness drives the facade protocol");
    auto states = make_states(net, config, heads);
    auto objectives = make_objectives(net);
    const std::size_t n = states.size();
    const std::size_t k = config.k;

    Trajectory tr;
    tr.distance.assign(k, {});
    tr.distance_true.assign(k, {});
    for (std::size_t j = 0; j < k; ++j) {
        const double d0 = j < net.optima.size() ? distance(heads[j], net.optima[j]) : kNaN;
        tr.distance[j].push_back(d0);
        tr.distance_true[j].push_back(d0);
    }

    std::vector<double> mean(net.dim);
    for (std::size_t t = 0; t < rounds; ++t) {
        const auto topo = gen_r_regular(n, config.degree, derive_seed(config.seed, stream::topology, t));
        facade_round(states, topo, t, config, objectives);
        std::vector<std::size_t> reported(n);
        for (std::size_t i = 0; i < n; ++i) reported[i] = states[i].active_head();
        for (std::size_t j = 0; j < k; ++j) {
            const bool has_optimum = j < net.optima.size();
            std::vector<std::span<const double>> inputs;
            for (std::size_t i = 0; i < n; ++i)
                if (reported[i] == j) inputs.push_back(states[i].head_bank[j]);
            if (inputs.empty() || !has_optimum) {
                tr.distance[j].push_back(kNaN);
            } else {
                mean_into(inputs, mean);
                tr.distance[j].push_back(distance(mean, net.optima[j]));
            }
            if (!has_optimum) {
                tr.distance_true[j].push_back(kNaN);
                continue;
            }
            inputs.clear();
            for (auto i : net.clusters.nodes_in(j)) inputs.push_back(states[i].head_bank[states[i].active_head()]);
            mean_into(inputs, mean);
            tr.distance_true[j].push_back(distance(mean, net.optima[j]));
        }
        tr.reported.push_back(std::move(reported));
    }
    return tr;
}

ContractionReport contraction_check(const QuadraticNetwork& net, const ProtocolConfig& config,
                                    const TheoryParams& params) {
    params.validate();
    ContractionReport rep;
    const std::size_t k = config.k;
    const double p = net.min_cluster_fraction();
    const double delta = net.min_separation();
    rep.factor = contraction_factor(p, params.lambda_cvx, params.smoothness);
    rep.exact_rate = std::pow(1.0 - config.eta, config.local_steps);

    if (k != net.optima.size()) {
        rep.populated = false;
        rep.diagnostics.push_back("k does not match the number of clusters");
        return rep;
    }
    if (delta <= 0.0) {
        rep.populated = false;
        rep.diagnostics.push_back("Delta = 0: cluster optima coincide, identities are not recoverable");
        return rep;
    }

    rep.t_hat = settling_rounds(p, params.lambda_cvx, params.smoothness, delta, params.eps);
    rep.rounds = std::max(config.rounds, rep.t_hat);
    const auto heads = compliant_initial_heads(net, params, derive_seed(config.seed, stream::init, 0));
    if (!initialization_compliant(net, params, heads)) rep.diagnostics.push_back("initialization not compliant");
    rep.trajectory = simulate(net, config, heads, rep.rounds);

    // Noise floor: same network and noise, started at the optima.
    const auto floor_run = simulate(net, config, net.optima, rep.rounds);
    const auto& dist = rep.trajectory.distance;
    for (std::size_t j = 0; j < k; ++j) {
        double floor = 0.0;
        for (double d : floor_run.distance[j])
            if (!std::isnan(d)) floor = std::max(floor, d);
        rep.noise_floor.push_back(floor);

        const auto& dj = dist[j];
        if (std::any_of(dj.begin() + 1, dj.end(), [](double d) { return std::isnan(d); })) {
            rep.populated = false;
            rep.diagnostics.push_back("cluster " + std::to_string(j) + " was not reported by any node in some round");
        }

        const double plateau_level = 2.0 * floor + 1e-12;
        std::size_t plateau = dj.size() - 1;
        for (std::size_t t = 0; t < dj.size(); ++t)
            if (!std::isnan(dj[t]) && dj[t] <= plateau_level) {
                plateau = t;
                break;
            }
        rep.plateau_start.push_back(plateau);

        double log_sum = 0.0;
        std::size_t steps = 0;
        for (std::size_t t = 0; t < plateau; ++t) {
            if (std::isnan(dj[t]) || std::isnan(dj[t + 1])) continue;
            if (dj[t + 1] > rep.factor * dj[t] + floor + 1e-12) {
                rep.rate_ok = false;
                rep.diagnostics.push_back("cluster " + std::to_string(j) + ": contraction bound violated at round " +
                                          std::to_string(t + 1));
            }
            if (dj[t] > std::max(10.0 * floor, 1e-6 * dj[0]) && dj[t + 1] > 0.0) {
                log_sum += std::log(dj[t + 1] / dj[t]);
                ++steps;
            }
        }
        const double ratio = steps > 0 ? std::exp(log_sum / static_cast<double>(steps)) : kNaN;
        rep.fitted_ratio.push_back(ratio);
        if (!std::isnan(ratio) && ratio < rep.exact_rate * (1.0 - 1e-6)) {
            rep.ratio_floor_ok = false;
            rep.diagnostics.push_back("cluster " + std::to_string(j) + ": contracted faster than exact gradient descent");
        }

        rep.terminal.push_back(dj.back());
        rep.at_t_hat.push_back(dj[rep.t_hat]);
        const double limit = params.eps + floor;
        if (std::isnan(dj.back()) || dj.back() > limit || std::isnan(dj[rep.t_hat]) || dj[rep.t_hat] > limit) {
            rep.terminal_ok = false;
            rep.diagnostics.push_back("cluster " + std::to_string(j) + ": terminal distance above eps + noise floor");
        }

        for (std::size_t t = 0; t < dj.size(); ++t) {
            if (std::isnan(dj[t])) continue;
            const double expected = std::pow(rep.exact_rate, static_cast<double>(t)) * dj[0];
            rep.max_exact_deviation = std::max(rep.max_exact_deviation, std::abs(dj[t] - expected));
        }
    }

    const auto truth = net.clusters.assignment();
    const auto& reported = rep.trajectory.reported;
    std::size_t from = reported.size();
    while (from > 0 && reported[from - 1] == truth) --from;
    if (from < reported.size()) rep.identified_from = from + 1;
    else rep.diagnostics.push_back("final round reports differ from the true clusters");

    rep.pass = rep.populated && rep.rate_ok && rep.terminal_ok && rep.ratio_floor_ok && rep.identified_from.has_value();
    return rep;
}

std::optional<double> cluster_recovery_rate(const QuadraticNetwork& net, const ProtocolConfig& config,
                                            const TheoryParams& params, std::size_t trials) {
    if (net.min_separation() <= 0.0 || trials == 0) return std::nullopt;
    params.validate();
    const auto truth = net.clusters.assignment();
    const std::size_t rounds =
        config.rounds > 0 ? config.rounds
                          : settling_rounds(net.min_cluster_fraction(), params.lambda_cvx, params.smoothness,
                                            net.min_separation(), params.eps);
    std::size_t hits = 0;
    for (std::size_t trial = 0; trial < trials; ++trial) {
        ProtocolConfig cfg = config;
        cfg.seed = derive_seed(config.seed, stream::trial, trial);
        const auto heads = compliant_initial_heads(net, params, derive_seed(cfg.seed, stream::init, 0));
        const auto tr = simulate(net, cfg, heads, rounds);
        const auto& last = tr.reported.empty() ? std::vector<std::size_t>{} : tr.reported.back();
        for (std::size_t i = 0; i < truth.size(); ++i) hits += !last.empty() && last[i] == truth[i];
    }
    return static_cast<double>(hits) / static_cast<double>(trials * truth.size());
}

}  // namespace facade::theory
