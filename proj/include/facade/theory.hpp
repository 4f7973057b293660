// Copyright (c) 2026, The facade-sim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "facade/dataset.hpp"
#include "facade/protocols.hpp"

namespace facade::theory {

/// Constants of the convergence analysis. With the quadratic family below
/// lambda_cvx = smoothness = 1.
struct TheoryParams {
    double lambda_cvx = 1.0;
    double smoothness = 1.0;  // L
    double sigma2 = 0.0;
    double nu2 = 0.0;
    double alpha = 0.25;       // initialization margin, in [0, 1/2]
    double delta_prob = 0.1;   // confidence parameter
    double eps = 0.01;         // target error

    void validate() const;
};

/// f_i(θ) = ½‖θ - c_i‖² for every node; cluster optimum = mean of its
/// members' centers. Batch gradients carry N(0, noise² I) perturbations.
struct QuadraticNetwork {
    ClusterSpec clusters;
    std::size_t dim = 0;
    double noise = 0.0;
    std::vector<std::vector<double>> optima;   // per cluster
    std::vector<std::vector<double>> centers;  // per node

    double min_separation() const;          // Δ
    double min_cluster_fraction() const;    // p
};

/// Optima at pairwise distance exactly Delta (scaled simplex vertices under a
/// seeded rotation); node centers get zero-mean offsets of norm <= 2*offset.
/// Throws ConfigError when dim < k or offset > Delta/20.
QuadraticNetwork build_quadratic_network(std::size_t k, const std::vector<std::size_t>& sizes, double delta,
                                         double noise, std::size_t dim, std::uint64_t seed, double offset = 0.0);

/// Parameter layout [1 inert core value, dim head values]; the core has zero
/// gradient so the shared-core averaging is a no-op.
class QuadraticObjective final : public LocalObjective {
public:
    QuadraticObjective(std::vector<double> center, double noise);

    void draw_batch(Rng& rng) override;
    double loss(std::span<const double> params) const override;
    double loss_and_grad(std::span<const double> params, std::span<double> grad) const override;
    std::span<const double> perturbation() const noexcept { return perturbation_; }

private:
    std::vector<double> center_;
    double noise_;
    std::vector<double> perturbation_;
};

inline constexpr std::size_t kInertCoreLen = 1;

Objectives make_objectives(const QuadraticNetwork& net);

/// Heads θ_j(0) = θ*_j + radius * u_j with radius = (½ - α) sqrt(λ/L) Δ, so the
/// initialization condition holds with equality.
std::vector<std::vector<double>> compliant_initial_heads(const QuadraticNetwork& net, const TheoryParams& params,
                                                         std::uint64_t seed);
bool initialization_compliant(const QuadraticNetwork& net, const TheoryParams& params,
                              const std::vector<std::vector<double>>& heads);

std::vector<NodeState> make_states(const QuadraticNetwork& net, const ProtocolConfig& config,
                                   const std::vector<std::vector<double>>& heads);

/// ceil((8L/(pλ)) ln(2Δ/ε))
std::size_t settling_rounds(double p, double lambda_cvx, double smoothness, double delta, double eps);
/// 1 - pλ/(8L)
double contraction_factor(double p, double lambda_cvx, double smoothness);

struct Trajectory {
    // distance[j][t] = ‖mean of heads reported as j after t rounds - θ*_j‖; NaN if nobody reported j.
    std::vector<std::vector<double>> distance;
    std::vector<std::vector<double>> distance_true;  // same, over true membership
    std::vector<std::vector<std::size_t>> reported;   // [round][node]
};

Trajectory simulate(const QuadraticNetwork& net, const ProtocolConfig& config,
                    const std::vector<std::vector<double>>& heads, std::size_t rounds);

struct ContractionReport {
    std::size_t rounds = 0;
    std::size_t t_hat = 0;
    double factor = 0.0;               // 1 - pλ/(8L)
    double exact_rate = 0.0;           // (1-η)^H
    std::vector<double> noise_floor;   // per cluster
    std::vector<double> fitted_ratio;  // per cluster, geometric mean of d(t+1)/d(t) before the plateau
    std::vector<std::size_t> plateau_start;
    std::vector<double> terminal;      // d_j(T)
    std::vector<double> at_t_hat;      // d_j(T̂)
    std::optional<std::size_t> identified_from;  // rounds after which every report is the true cluster
    double max_exact_deviation = 0.0;  // max |d_j(t) - (1-η)^{tH} d_j(0)|
    bool populated = true;
    bool rate_ok = true;
    bool terminal_ok = true;
    bool ratio_floor_ok = true;  // no faster than the exact-gradient rate
    bool pass = false;
    std::vector<std::string> diagnostics;
    Trajectory trajectory;
};

/// Runs FACADE on the quadratic network for max(config.rounds, T̂) rounds from
/// a compliant initialization and checks the per-round contraction bound, the
/// terminal error and the settling time. The noise floor comes from a
/// reference run started at the optima.
ContractionReport contraction_check(const QuadraticNetwork& net, const ProtocolConfig& config,
                                    const TheoryParams& params);

/// Fraction of (trial, node) pairs whose final report equals the true cluster;
/// empty when Δ = 0 (identities are meaningless).
std::optional<double> cluster_recovery_rate(const QuadraticNetwork& net, const ProtocolConfig& config,
                                            const TheoryParams& params, std::size_t trials);

}  // namespace facade::theory
