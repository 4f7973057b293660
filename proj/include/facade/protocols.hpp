// Copyright (c) 2026, The facade-sim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "facade/common.hpp"
#include "facade/dataset.hpp"
#include "facade/prediction_log.hpp"
#include "facade/tinynet.hpp"
#include "facade/topology.hpp"

namespace facade {

enum class Algorithm { facade, el, dpsgd, deprl_lite };

std::string_view to_string(Algorithm a) noexcept;
Algorithm parse_algorithm(std::string_view name);

/// True for protocols that draw a fresh random regular graph every round.
constexpr bool uses_dynamic_topology(Algorithm a) noexcept { return a == Algorithm::facade || a == Algorithm::el; }

struct ProtocolConfig {
    Algorithm algorithm = Algorithm::facade;
    std::size_t k = 1;              // head slots (FACADE); 1 for the baselines
    double eta = 0.05;              // learning rate
    int local_steps = 10;           // H
    std::size_t batch_size = 8;     // B
    std::size_t rounds = 0;         // T
    std::size_t degree = 4;         // r
    std::size_t warmup_rounds = 0;  // FACADE rounds with tied heads
    std::size_t eval_every = 1;
    std::uint64_t seed = 0;

    void validate() const;
    std::size_t head_slots() const noexcept { return algorithm == Algorithm::facade ? k : 1; }
};

/// The per-node loss. Implementations hold the node's current batch; the
/// protocols call draw_batch() and then evaluate on that batch.
class LocalObjective {
public:
    virtual ~LocalObjective() = default;
    virtual void draw_batch(Rng& rng) = 0;
    virtual double loss(std::span<const double> params) const = 0;
    /// Writes the gradient into `grad` (same length as params) and returns the loss.
    virtual double loss_and_grad(std::span<const double> params, std::span<double> grad) const = 0;
};

/// Cross-entropy of the MLP on a node's training shard.
class NetObjective final : public LocalObjective {
public:
    NetObjective(Architecture arch, const LabeledPool& shard, std::size_t batch_size);

    void draw_batch(Rng& rng) override;
    double loss(std::span<const double> params) const override;
    double loss_and_grad(std::span<const double> params, std::span<double> grad) const override;
    const Batch& batch() const noexcept { return batch_; }

private:
    Architecture arch_;
    const LabeledPool* shard_;
    std::size_t batch_size_;
    Batch batch_;
};

using Objectives = std::vector<std::unique_ptr<LocalObjective>>;

struct NodeState {
    std::size_t id = 0;
    std::vector<double> core;
    std::vector<std::vector<double>> head_bank;
    std::optional<std::size_t> last_selected;
    std::vector<std::size_t> selection_history;
    Rng rng;

    std::size_t active_head() const noexcept { return last_selected.value_or(0); }
    /// core ∘ head[active_head]
    ParamVector effective_model() const;
};

/// What a node transmits at the end of a round.
struct Message {
    std::size_t sender = 0;
    std::span<const double> core;
    std::span<const double> head;
    std::optional<std::size_t> cluster_id;  // empty before the first selection
};

struct Evaluation {
    std::vector<double> per_cluster_acc;
    double acc_all = 0.0;
    double fair_acc = 0.0;
};

struct RoundRecord {
    std::uint64_t round = 0;
    bool trained = false;           // false for the initial and all-reduce records
    bool after_all_reduce = false;
    std::vector<std::size_t> selected;
    std::vector<double> node_loss;  // batch loss of the trained model before the local steps
    double mean_loss = 0.0;
    std::uint64_t bytes = 0;
    std::uint64_t cumulative_bytes = 0;
    bool connected = true;
    std::optional<Evaluation> eval;
};

/// All nodes start from the same model. Head slot 0 comes from the base
/// initialization; slots j > 0 get their own seeded heads. When warm-up is on
/// every slot starts as a copy of slot 0.
std::vector<NodeState> init_states(const ProtocolConfig& config, const ParamVector& base_model,
                                   const std::vector<ParamVector>& extra_heads, std::size_t n);
std::vector<NodeState> init_states(const ProtocolConfig& config, const Architecture& arch, std::size_t n);

/// Element-wise mean; computed as x0 + Σ(x_m - x0)/M so equal inputs return x0 bit-exactly.
void mean_into(std::span<const std::span<const double>> inputs, std::span<double> out);

/// Snapshot of what each node sends in a FACADE/EL round.
std::vector<Message> collect_messages(const std::vector<NodeState>& states);

RoundRecord facade_round(std::vector<NodeState>& states, const Topology& topology, std::uint64_t round_index,
                         const ProtocolConfig& config, const Objectives& objectives);
RoundRecord el_round(std::vector<NodeState>& states, const Topology& topology, std::uint64_t round_index,
                     const ProtocolConfig& config, const Objectives& objectives);
RoundRecord dpsgd_round(std::vector<NodeState>& states, const Topology& static_topology, const ProtocolConfig& config,
                        const Objectives& objectives);
RoundRecord deprl_lite_round(std::vector<NodeState>& states, const Topology& static_topology,
                             const ProtocolConfig& config, const Objectives& objectives);

/// Dispatches on config.algorithm.
RoundRecord run_round(std::vector<NodeState>& states, const Topology& topology, std::uint64_t round_index,
                      const ProtocolConfig& config, const Objectives& objectives);

void final_all_reduce(std::vector<NodeState>& states, const ProtocolConfig& config);

/// Topology used in round t. FACADE/EL redraw it each round; D-PSGD and
/// DePRL-lite keep one static graph (a ring when r is even).
Topology round_topology(const ProtocolConfig& config, std::size_t n, std::uint64_t round_index);

struct RunResult {
    std::vector<RoundRecord> records;
    std::vector<NodeState> final_states;
    PredictionLog final_predictions;  // after the all-reduce; group = cluster id
};

struct RunOptions {
    double fairness_weight = 2.0 / 3.0;
};

/// Full experiment: init, T rounds with topology refresh, evaluation every
/// eval_every rounds, final all-reduce and evaluation.
RunResult run(const ProtocolConfig& config, const ClusterSpec& spec, const Architecture& arch,
              const std::vector<NodeDataset>& datasets, const std::vector<LabeledPool>& test_sets,
              const RunOptions& options = {});

}  // namespace facade
