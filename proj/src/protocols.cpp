// Copyright (c) 2026, The facade-sim Authors
// SPDX-License-Identifier: Apache-2.0

#include "facade/protocols.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "facade/fairness.hpp"

namespace facade {

std::string_view to_string(Algorithm a) noexcept {
    switch (a) {
        case Algorithm::facade: return "facade";
        case Algorithm::el: return "el";
        case Algorithm::dpsgd: return "dpsgd";
        case Algorithm::deprl_lite: return "deprl_lite";
    }
    return "unknown";
}

Algorithm parse_algorithm(std::string_view name) {
    for (auto a : {Algorithm::facade, Algorithm::el, Algorithm::dpsgd, Algorithm::deprl_lite})
        if (name == to_string(a)) return a;
    throw ConfigError("unknown algorithm `" + std::string(name) + "` (expected facade, el, dpsgd or deprl_lite)");
}

void ProtocolConfig::validate() const {
    if (k < 1) throw ConfigError("k must be >= 1");
    if (algorithm != Algorithm::facade && k != 1) throw ConfigError("k > 1 is only meaningful for facade");
    if (!(eta >= 0.0)) throw ConfigError("eta must be non-negative");
    if (local_steps < 1) throw ConfigError("local_steps must be >= 1");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (eval_every < 1) throw ConfigError("eval_every must be >= 1");
    if (degree < 1) throw ConfigError("degree must be >= 1 (a node needs at least one neighbor)");
}

NetObjective::NetObjective(Architecture arch, const LabeledPool& shard, std::size_t batch_size)
    : arch_(std::move(arch)), shard_(&shard), batch_size_(batch_size) {}

void NetObjective::draw_batch(Rng& rng) { batch_ = sample_batch(*shard_, batch_size_, rng); }

double NetObjective::loss(std::span<const double> params) const { return facade::loss(arch_, params, batch_); }

double NetObjective::loss_and_grad(std::span<const double> params, std::span<double> grad) const {
    return facade::loss_and_grad(arch_, params, batch_, grad);
}

ParamVector NodeState::effective_model() const { return assemble(core, head_bank.at(active_head())); }

std::vector<NodeState> init_states(const ProtocolConfig& config, const ParamVector& base_model,
                                   const std::vector<ParamVector>& extra_heads, std::size_t n) {
    config.validate();
    const std::size_t slots = config.head_slots();
    const bool tied = config.algorithm == Algorithm::facade && config.warmup_rounds > 0;
    std::vector<std::vector<double>> bank;
    bank.emplace_back(base_model.head().begin(), base_model.head().end());
    for (std::size_t j = 1; j < slots; ++j) {
        if (tied) {
            bank.push_back(bank.front());
            continue;
        }
        if (j - 1 >= extra_heads.size()) throw std::invalid_argument("init_states: missing head initialization");
        const auto& h = extra_heads[j - 1].head();
        if (h.size() != base_model.head_len()) throw DimensionMismatch("init_states: head shapes differ");
        bank.emplace_back(h.begin(), h.end());
    }

    std::vector<NodeState> states(n);
    for (std::size_t i = 0; i < n; ++i) {
        states[i].id = i;
        states[i].core.assign(base_model.core().begin(), base_model.core().end());
        states[i].head_bank = bank;
        states[i].rng.seed(derive_seed(config.seed, stream::node, i));
    }
    return states;
}

std::vector<NodeState> init_states(const ProtocolConfig& config, const Architecture& arch, std::size_t n) {
    const auto base = init_params(arch, derive_seed(config.seed, stream::init, 0));
    std::vector<ParamVector> extra;
    for (std::size_t j = 1; j < config.head_slots(); ++j)
        extra.push_back(init_params(arch, derive_seed(config.seed, stream::init, j)));
    return init_states(config, base, extra, n);
}

void mean_into(std::span<const std::span<const double>> inputs, std::span<double> out) {
    if (inputs.empty()) throw std::invalid_argument("mean of an empty set");
    const auto& first = inputs.front();
    for (const auto& in : inputs)
        if (in.size() != out.size()) throw DimensionMismatch("aggregation: inconsistent parameter shapes");
    const double m = static_cast<double>(inputs.size());
    for (std::size_t d = 0; d < out.size(); ++d) {
        double acc = 0.0;
        for (std::size_t s = 1; s < inputs.size(); ++s) acc += inputs[s][d] - first[d];
        out[d] = first[d] + acc / m;
    }
}

std::vector<Message> collect_messages(const std::vector<NodeState>& states) {
    std::vector<Message> msgs;
    msgs.reserve(states.size());
    for (const auto& s : states)
        msgs.push_back(Message{s.id, s.core, s.head_bank.at(s.active_head()), s.last_selected});
    return msgs;
}

namespace {

void check_inputs(const std::vector<NodeState>& states, const Topology& topology, const ProtocolConfig& config,
                  const Objectives& objectives) {
    config.validate();
    if (states.empty()) throw std::invalid_argument("no nodes");
    if (topology.size() != states.size()) throw DimensionMismatch("topology size does not match node count");
    if (objectives.size() != states.size()) throw DimensionMismatch("one objective per node required");
    const std::size_t slots = config.head_slots();
    for (const auto& s : states) {
        if (s.head_bank.size() != slots)
            throw DimensionMismatch("node " + std::to_string(s.id) + " holds " + std::to_string(s.head_bank.size()) +
                                    " heads, expected " + std::to_string(slots));
        if (s.last_selected && *s.last_selected >= slots)
            throw DimensionMismatch("node " + std::to_string(s.id) + " reports an out-of-range head");
        if (s.core.size() != states.front().core.size()) throw DimensionMismatch("inconsistent core shapes");
        for (const auto& h : s.head_bank)
            if (h.size() != states.front().head_bank.front().size())
                throw DimensionMismatch("inconsistent head shapes");
    }
    for (std::size_t i = 0; i < states.size(); ++i)
        if (topology.node_degree(i) == 0)
            throw InfeasibleTopology("node " + std::to_string(i) + " has no neighbors");
}

// Self first, then neighbors in ascending order.
std::vector<std::size_t> closed_neighborhood(const Topology& topology, std::size_t i) {
    std::vector<std::size_t> v{i};
    const auto& nb = topology.neighbors(i);
    v.insert(v.end(), nb.begin(), nb.end());
    return v;
}

std::vector<double> concat(std::span<const double> a, std::span<const double> b) {
    std::vector<double> v(a.begin(), a.end());
    v.insert(v.end(), b.begin(), b.end());
    return v;
}

// Plain SGD on the objective's current batch; resample_rng redraws before every step.
void local_sgd(LocalObjective& objective, std::vector<double>& params, double eta, int steps, Rng* resample_rng,
               double* first_loss) {
    std::vector<double> grad(params.size());
    for (int h = 0; h < steps; ++h) {
        if (resample_rng) objective.draw_batch(*resample_rng);
        const double l = objective.loss_and_grad(params, grad);
        if (h == 0 && first_loss) *first_loss = l;
        for (std::size_t d = 0; d < params.size(); ++d) params[d] -= eta * grad[d];
    }
}

void finish_record(RoundRecord& rec, const Topology& topology) {
    rec.trained = true;
    rec.connected = topology.is_connected();
    rec.mean_loss = rec.node_loss.empty()
                        ? 0.0
                        : std::accumulate(rec.node_loss.begin(), rec.node_loss.end(), 0.0) /
                              static_cast<double>(rec.node_loss.size());
}

struct Update {
    std::vector<double> core;
    std::vector<std::vector<double>> heads;
    std::size_t selected = 0;
};

}  // namespace

RoundRecord facade_round(std::vector<NodeState>& states, const Topology& topology, std::uint64_t round_index,
                         const ProtocolConfig& config, const Objectives& objectives) {
    if (config.algorithm != Algorithm::facade) throw ConfigError("facade_round needs algorithm = facade");
    check_inputs(states, topology, config, objectives);
    const std::size_t n = states.size();
    const std::size_t k = config.k;
    const bool tied = round_index < config.warmup_rounds;
    const auto messages = collect_messages(states);
    for (const auto& m : messages)
        if (m.cluster_id && *m.cluster_id >= k) throw DimensionMismatch("message carries an out-of-range cluster id");

    RoundRecord rec;
    rec.round = round_index;
    rec.selected.resize(n);
    rec.node_loss.resize(n);
    std::vector<Update> updates(n);

    for (std::size_t i = 0; i < n; ++i) {
        const auto& self = states[i];
        const auto hood = closed_neighborhood(topology, i);
        Update& up = updates[i];

        std::vector<std::span<const double>> inputs;
        for (auto v : hood) inputs.push_back(messages[v].core);
        up.core.resize(self.core.size());
        mean_into(inputs, up.core);

        up.heads.assign(k, std::vector<double>(self.head_bank.front().size()));
        if (tied) {
            // Warm-up: one shared head, aggregated over the whole neighborhood.
            inputs.clear();
            for (auto v : hood) inputs.push_back(messages[v].head);
            mean_into(inputs, up.heads[0]);
            for (std::size_t j = 1; j < k; ++j) up.heads[j] = up.heads[0];
        } else {
            for (std::size_t j = 0; j < k; ++j) {
                inputs.assign(1, self.head_bank[j]);
                for (std::size_t p = 1; p < hood.size(); ++p)
                    if (messages[hood[p]].cluster_id == j) inputs.push_back(messages[hood[p]].head);
                mean_into(inputs, up.heads[j]);
            }
        }

        auto& objective = *objectives[i];
        objective.draw_batch(states[i].rng);

        // Cluster identification: lowest batch loss, ties to the lowest index.
        std::size_t best = 0;
        double best_loss = objective.loss(concat(up.core, up.heads[0]));
        if (!tied) {
            for (std::size_t j = 1; j < k; ++j) {
                const double l = objective.loss(concat(up.core, up.heads[j]));
                if (l < best_loss) {
                    best_loss = l;
                    best = j;
                }
            }
        }

        auto params = concat(up.core, up.heads[best]);
        local_sgd(objective, params, config.eta, config.local_steps, nullptr, nullptr);
        const auto core_len = up.core.size();
        std::copy(params.begin(), params.begin() + static_cast<std::ptrdiff_t>(core_len), up.core.begin());
        std::copy(params.begin() + static_cast<std::ptrdiff_t>(core_len), params.end(), up.heads[best].begin());
        if (tied)
            for (std::size_t j = 0; j < k; ++j) up.heads[j] = up.heads[best];
        up.selected = best;
        rec.selected[i] = best;
        rec.node_loss[i] = best_loss;
    }

    for (std::size_t i = 0; i < n; ++i) {
        states[i].core = std::move(updates[i].core);
        states[i].head_bank = std::move(updates[i].heads);
        states[i].last_selected = updates[i].selected;
        states[i].selection_history.push_back(updates[i].selected);
    }
    finish_record(rec, topology);
    return rec;
}

RoundRecord el_round(std::vector<NodeState>& states, const Topology& topology, std::uint64_t round_index,
                     const ProtocolConfig& config, const Objectives& objectives) {
    check_inputs(states, topology, config, objectives);
    const std::size_t n = states.size();
    std::vector<std::vector<double>> models(n);
    for (std::size_t i = 0; i < n; ++i) models[i] = concat(states[i].core, states[i].head_bank.front());

    RoundRecord rec;
    rec.round = round_index;
    rec.selected.assign(n, 0);
    rec.node_loss.resize(n);
    std::vector<std::vector<double>> updated(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<std::span<const double>> inputs;
        for (auto v : closed_neighborhood(topology, i)) inputs.push_back(models[v]);
        updated[i].resize(models[i].size());
        mean_into(inputs, updated[i]);
        auto& objective = *objectives[i];
        objective.draw_batch(states[i].rng);
        rec.node_loss[i] = objective.loss(updated[i]);
        local_sgd(objective, updated[i], config.eta, config.local_steps, nullptr, nullptr);
    }
    const auto core_len = states.front().core.size();
    for (std::size_t i = 0; i < n; ++i) {
        auto& s = states[i];
        std::copy(updated[i].begin(), updated[i].begin() + static_cast<std::ptrdiff_t>(core_len), s.core.begin());
        std::copy(updated[i].begin() + static_cast<std::ptrdiff_t>(core_len), updated[i].end(),
                  s.head_bank.front().begin());
        s.last_selected = 0;
        s.selection_history.push_back(0);
    }
    finish_record(rec, topology);
    return rec;
}

RoundRecord dpsgd_round(std::vector<NodeState>& states, const Topology& static_topology, const ProtocolConfig& config,
                        const Objectives& objectives) {
    check_inputs(states, static_topology, config, objectives);
    const std::size_t n = states.size();
    RoundRecord rec;
    rec.selected.assign(n, 0);
    rec.node_loss.resize(n);

    // Local steps with a fresh mini-batch per step, then exchange and average.
    std::vector<std::vector<double>> trained(n);
    for (std::size_t i = 0; i < n; ++i) {
        trained[i] = concat(states[i].core, states[i].head_bank.front());
        local_sgd(*objectives[i], trained[i], config.eta, config.local_steps, &states[i].rng, &rec.node_loss[i]);
    }
    const auto core_len = states.front().core.size();
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<std::span<const double>> inputs;
        for (auto v : closed_neighborhood(static_topology, i)) inputs.push_back(trained[v]);
        std::vector<double> agg(trained[i].size());
        mean_into(inputs, agg);
        auto& s = states[i];
        std::copy(agg.begin(), agg.begin() + static_cast<std::ptrdiff_t>(core_len), s.core.begin());
        std::copy(agg.begin() + static_cast<std::ptrdiff_t>(core_len), agg.end(), s.head_bank.front().begin());
    }
    for (auto& s : states) {
        s.last_selected = 0;
        s.selection_history.push_back(0);
    }
    finish_record(rec, static_topology);
    return rec;
}

RoundRecord deprl_lite_round(std::vector<NodeState>& states, const Topology& static_topology,
                             const ProtocolConfig& config, const Objectives& objectives) {
    check_inputs(states, static_topology, config, objectives);
    const std::size_t n = states.size();
    const auto core_len = states.front().core.size();
    RoundRecord rec;
    rec.selected.assign(n, 0);
    rec.node_loss.resize(n);

    std::vector<std::vector<double>> trained(n);
    for (std::size_t i = 0; i < n; ++i) {
        trained[i] = concat(states[i].core, states[i].head_bank.front());
        local_sgd(*objectives[i], trained[i], config.eta, config.local_steps, &states[i].rng, &rec.node_loss[i]);
    }
    // Only cores travel; heads stay personal.
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<std::span<const double>> inputs;
        for (auto v : closed_neighborhood(static_topology, i))
            inputs.push_back(std::span<const double>(trained[v]).first(core_len));
        mean_into(inputs, states[i].core);
        std::copy(trained[i].begin() + static_cast<std::ptrdiff_t>(core_len), trained[i].end(),
                  states[i].head_bank.front().begin());
        states[i].last_selected = 0;
        states[i].selection_history.push_back(0);
    }
    finish_record(rec, static_topology);
    return rec;
}

RoundRecord run_round(std::vector<NodeState>& states, const Topology& topology, std::uint64_t round_index,
                      const ProtocolConfig& config, const Objectives& objectives) {
    RoundRecord rec;
    switch (config.algorithm) {
        case Algorithm::facade: rec = facade_round(states, topology, round_index, config, objectives); break;
        case Algorithm::el: rec = el_round(states, topology, round_index, config, objectives); break;
        case Algorithm::dpsgd: rec = dpsgd_round(states, topology, config, objectives); break;
        case Algorithm::deprl_lite: rec = deprl_lite_round(states, topology, config, objectives); break;
    }
    rec.round = round_index;
    const auto core_len = states.front().core.size();
    const auto head_len = states.front().head_bank.front().size();
    rec.bytes = comm_volume(config.algorithm, topology, core_len, head_len);
    return rec;
}

void final_all_reduce(std::vector<NodeState>& states, const ProtocolConfig& config) {
    if (states.empty()) return;
    std::vector<std::span<const double>> inputs;
    for (const auto& s : states) inputs.push_back(s.core);
    std::vector<double> core(states.front().core.size());
    mean_into(inputs, core);
    for (auto& s : states) s.core = core;

    if (config.algorithm == Algorithm::deprl_lite) return;
    const std::size_t slots = states.front().head_bank.size();
    for (std::size_t j = 0; j < slots; ++j) {
        inputs.clear();
        for (const auto& s : states)
            if (s.active_head() == j) inputs.push_back(s.head_bank[j]);
        if (inputs.empty()) continue;
        std::vector<double> head(states.front().head_bank[j].size());
        mean_into(inputs, head);
        for (auto& s : states) s.head_bank[j] = head;
    }
}

Topology round_topology(const ProtocolConfig& config, std::size_t n, std::uint64_t round_index) {
    if (uses_dynamic_topology(config.algorithm)) {
        auto t = gen_r_regular(n, config.degree, derive_seed(config.seed, stream::topology, round_index));
        t.set_round_index(round_index);
        return t;
    }
    auto t = config.degree % 2 == 0 ? gen_static_ring(n, config.degree)
                                    : gen_r_regular(n, config.degree, derive_seed(config.seed, stream::topology, 0));
    t.set_round_index(round_index);
    return t;
}

namespace {

Evaluation evaluate(const std::vector<NodeState>& states, const ClusterSpec& spec, const Architecture& arch,
                    const std::vector<LabeledPool>& test_sets, double weight) {
    Evaluation ev;
    ev.per_cluster_acc = per_cluster_accuracy(states, spec, arch, test_sets);
    double total = 0.0;
    for (std::size_t j = 0; j < spec.k(); ++j) total += ev.per_cluster_acc[j] * static_cast<double>(spec.sizes[j]);
    ev.acc_all = total / static_cast<double>(spec.num_nodes());
    ev.fair_acc = fair_accuracy(ev.per_cluster_acc, weight);
    return ev;
}

}  // namespace

RunResult run(const ProtocolConfig& config, const ClusterSpec& spec, const Architecture& arch,
              const std::vector<NodeDataset>& datasets, const std::vector<LabeledPool>& test_sets,
              const RunOptions& options) {
    config.validate();
    spec.validate();
    arch.validate();
    const std::size_t n = spec.num_nodes();
    if (datasets.size() != n) throw ConfigError("need one dataset per node");
    if (test_sets.size() != spec.k()) throw ConfigError("need one test set per cluster");

    RunResult result;
    auto& states = result.final_states;
    states = init_states(config, arch, n);
    Objectives objectives;
    for (const auto& d : datasets) objectives.push_back(std::make_unique<NetObjective>(arch, d.train, config.batch_size));

    RoundRecord initial;
    initial.round = 0;
    initial.eval = evaluate(states, spec, arch, test_sets, options.fairness_weight);
    result.records.push_back(std::move(initial));

    std::uint64_t cumulative = 0;
    for (std::size_t t = 0; t < config.rounds; ++t) {
        const auto topology = round_topology(config, n, t);
        auto rec = run_round(states, topology, t, config, objectives);
        rec.round = t + 1;
        cumulative += rec.bytes;
        rec.cumulative_bytes = cumulative;
        if ((t + 1) % config.eval_every == 0)
            rec.eval = evaluate(states, spec, arch, test_sets, options.fairness_weight);
        result.records.push_back(std::move(rec));
    }

    if (config.rounds > 0) {
        final_all_reduce(states, config);
        RoundRecord fin;
        fin.round = config.rounds;
        fin.after_all_reduce = true;
        fin.cumulative_bytes = cumulative;
        fin.eval = evaluate(states, spec, arch, test_sets, options.fairness_weight);
        result.records.push_back(std::move(fin));
    }
    result.final_predictions = prediction_log(states, spec, arch, test_sets);
    return result;
}

}  // namespace facade
