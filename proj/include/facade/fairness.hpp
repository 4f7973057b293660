// Copyright (c) 2026, The facade-sim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "facade/dataset.hpp"
#include "facade/prediction_log.hpp"
#include "facade/protocols.hpp"
#include "facade/tinynet.hpp"

namespace facade {

inline constexpr double kDefaultFairnessWeight = 2.0 / 3.0;

/// Sum over labels of |P[Ŷ=y | S=a] - P[Ŷ=y | S=b]|, empirical frequencies.
/// Throws std::invalid_argument if either group has no records.
double demographic_parity(const PredictionLog& log, std::size_t group_a = 0, std::size_t group_b = 1);

struct EqualizedOdds {
    double value = 0.0;
    std::vector<int> skipped_labels;  // labels missing from one group's ground truth
};

/// Sum over labels of the per-class recall gap between the two groups.
EqualizedOdds equalized_odds(const PredictionLog& log, std::size_t group_a = 0, std::size_t group_b = 1);

/// Not part of the two-group definition: largest DP over all group pairs.
double max_pairwise_demographic_parity(const PredictionLog& log);

/// weight * mean(acc) + (1 - weight) * (1 - (max acc - min acc)).
double fair_accuracy(std::span<const double> per_cluster_acc, double fairness_weight = kDefaultFairnessWeight);

/// Mean over a cluster's nodes of each node's test accuracy, using the node's
/// effective model on its cluster's shared test set.
std::vector<double> per_cluster_accuracy(const std::vector<NodeState>& states, const ClusterSpec& spec,
                                         const Architecture& arch, const std::vector<LabeledPool>& test_sets);

/// Every node's predictions on its cluster's test set, group = cluster id.
PredictionLog prediction_log(const std::vector<NodeState>& states, const ClusterSpec& spec, const Architecture& arch,
                             const std::vector<LabeledPool>& test_sets);

/// Per-cluster accuracy from pooled predictions (group = cluster id).
std::vector<double> accuracy_by_group(const PredictionLog& log, std::size_t num_groups);

/// Majority = largest cluster, minority = smallest (lowest / highest index on ties).
std::pair<std::size_t, std::size_t> majority_minority(std::span<const std::size_t> cluster_sizes);

struct FairnessReport {
    double dp = 0.0;
    double eo = 0.0;
    std::vector<int> eo_skipped_labels;
    std::vector<double> per_cluster_acc;
    double acc_majority = 0.0;
    double acc_minority = 0.0;
    double acc_all = 0.0;
    double fair_acc = 0.0;
    double fairness_weight = kDefaultFairnessWeight;
    std::size_t majority_group = 0;
    std::size_t minority_group = 0;
};

/// Builds the report from a prediction log whose groups are cluster ids.
FairnessReport fairness_report(const PredictionLog& log, std::span<const std::size_t> cluster_sizes,
                               double fairness_weight = kDefaultFairnessWeight);

/// CSV `true,pred,group`.
void write_prediction_log(const std::filesystem::path& path, const PredictionLog& log);
PredictionLog read_prediction_log(const std::filesystem::path& path);

// Communication accounting ---------------------------------------------------

inline constexpr std::size_t kClusterIdBytes = 4;

/// Bytes of one message: serialized core+head (DePRL-lite: core only), plus
/// the 32-bit head index for FACADE.
std::uint64_t message_bytes(Algorithm algorithm, std::size_t core_len, std::size_t head_len);

/// Σ_i deg(i) * message_bytes.
std::uint64_t comm_volume(Algorithm algorithm, const Topology& topology, std::size_t core_len, std::size_t head_len);

// Settlement -----------------------------------------------------------------

struct SettlementReport {
    bool settled = false;
    std::optional<std::size_t> settle_round;
    std::vector<std::optional<std::size_t>> modal_head;  // per cluster, over the whole history
    std::vector<std::size_t> never_selected;             // head slots nobody ever picked
    std::vector<std::size_t> abandoned;                  // slots nobody picked in the last `window` rounds
};

/// histories[node][round] = selected head. Settled when, for `window`
/// consecutive rounds starting at s, every cluster's nodes agree on one head,
/// the heads are distinct across clusters and unchanged; settle_round is the
/// smallest such s.
SettlementReport settlement(const std::vector<std::vector<std::size_t>>& histories, const ClusterSpec& spec,
                            std::size_t window, std::size_t num_heads);

}  // namespace facade
