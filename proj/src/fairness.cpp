// Copyright (c) 2026, The facade-sim Authors
// SPDX-License-Identifier: Apache-2.0

#include "facade/fairness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <stdexcept>
#include <string>

namespace facade {

namespace {

struct GroupCounts {
    std::size_t total = 0;
    std::map<int, std::size_t> predicted;          // label -> #predictions
    std::map<int, std::size_t> truth;              // label -> #ground truth
    std::map<int, std::size_t> correct_per_truth;  // label -> #correct among truth==label
};

GroupCounts count_group(const PredictionLog& log, std::size_t group) {
    GroupCounts c;
    for (const auto& r : log) {
        if (r.group != group) continue;
        ++c.total;
        ++c.predicted[r.predicted];
        ++c.truth[r.truth];
        if (r.predicted == r.truth) ++c.correct_per_truth[r.truth];
    }
    if (c.total == 0) throw std::invalid_argument("prediction log has no records for group " + std::to_string(group));
    return c;
}

double ratio(const std::map<int, std::size_t>& counts, int label, std::size_t denom) {
    auto it = counts.find(label);
    return it == counts.end() ? 0.0 : static_cast<double>(it->second) / static_cast<double>(denom);
}

// Summation in sorted order, so relabeling the label space gives bit-identical sums.
double ordered_sum(std::vector<double> terms) {
    std::sort(terms.begin(), terms.end());
    double s = 0.0;
    for (double t : terms) s += t;
    return s;
}

}  // namespace

double demographic_parity(const PredictionLog& log, std::size_t group_a, std::size_t group_b) {
    const auto a = count_group(log, group_a);
    const auto b = count_group(log, group_b);
    std::set<int> labels;
    for (const auto& [y, _] : a.predicted) labels.insert(y);
    for (const auto& [y, _] : b.predicted) labels.insert(y);
    std::vector<double> terms;
    for (int y : labels) terms.push_back(std::abs(ratio(a.predicted, y, a.total) - ratio(b.predicted, y, b.total)));
    return ordered_sum(std::move(terms));
}

EqualizedOdds equalized_odds(const PredictionLog& log, std::size_t group_a, std::size_t group_b) {
    const auto a = count_group(log, group_a);
    const auto b = count_group(log, group_b);
    std::set<int> labels;
    for (const auto& [y, _] : a.truth) labels.insert(y);
    for (const auto& [y, _] : b.truth) labels.insert(y);
    EqualizedOdds out;
    std::vector<double> terms;
    for (int y : labels) {
        auto ta = a.truth.find(y);
        auto tb = b.truth.find(y);
        if (ta == a.truth.end() || tb == b.truth.end()) {
            out.skipped_labels.push_back(y);
            continue;
        }
        terms.push_back(std::abs(ratio(b.correct_per_truth, y, tb->second) - ratio(a.correct_per_truth, y, ta->second)));
    }
    out.value = ordered_sum(std::move(terms));
    return out;
}

double max_pairwise_demographic_parity(const PredictionLog& log) {
    std::set<std::size_t> groups;
    for (const auto& r : log) groups.insert(r.group);
    double worst = 0.0;
    for (auto i = groups.begin(); i != groups.end(); ++i)
        for (auto j = std::next(i); j != groups.end(); ++j) worst = std::max(worst, demographic_parity(log, *i, *j));
    return worst;
}

double fair_accuracy(std::span<const double> per_cluster_acc, double fairness_weight) {
    if (per_cluster_acc.empty()) throw std::invalid_argument("fair accuracy needs at least one cluster accuracy");
    if (fairness_weight < 0.0 || fairness_weight > 1.0) throw std::invalid_argument("fairness weight must lie in [0, 1]");
    double sum = 0.0;
    for (double a : per_cluster_acc) sum += a;
    const auto [lo, hi] = std::minmax_element(per_cluster_acc.begin(), per_cluster_acc.end());
    const double mean = sum / static_cast<double>(per_cluster_acc.size());
    return fairness_weight * mean + (1.0 - fairness_weight) * (1.0 - (*hi - *lo));
}

std::vector<double> per_cluster_accuracy(const std::vector<NodeState>& states, const ClusterSpec& spec,
                                         const Architecture& arch, const std::vector<LabeledPool>& test_sets) {
    if (test_sets.size() != spec.k()) throw std::invalid_argument("need one test set per cluster");
    std::vector<double> acc(spec.k(), 0.0);
    for (const auto& s : states) {
        const auto j = spec.cluster_of(s.id);
        const auto& test = test_sets[j];
        if (test.size() == 0) throw std::invalid_argument("empty test set for cluster " + std::to_string(j));
        const auto model = s.effective_model();
        const auto pred = predict(arch, model.values(), test.features, test.dim);
        std::size_t correct = 0;
        for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == test.labels[i];
        acc[j] += static_cast<double>(correct) / static_cast<double>(test.size());
    }
    for (std::size_t j = 0; j < spec.k(); ++j) acc[j] /= static_cast<double>(spec.sizes[j]);
    return acc;
}

PredictionLog prediction_log(const std::vector<NodeState>& states, const ClusterSpec& spec, const Architecture& arch,
                             const std::vector<LabeledPool>& test_sets) {
    PredictionLog log;
    for (const auto& s : states) {
        const auto j = spec.cluster_of(s.id);
        const auto& test = test_sets.at(j);
        const auto pred = predict(arch, s.effective_model().values(), test.features, test.dim);
        for (std::size_t i = 0; i < pred.size(); ++i) log.push_back({test.labels[i], pred[i], j});
    }
    return log;
}

std::vector<double> accuracy_by_group(const PredictionLog& log, std::size_t num_groups) {
    std::vector<std::size_t> total(num_groups, 0), correct(num_groups, 0);
    for (const auto& r : log) {
        if (r.group >= num_groups) throw std::invalid_argument("group id outside range");
        ++total[r.group];
        correct[r.group] += r.truth == r.predicted;
    }
    std::vector<double> acc(num_groups, 0.0);
    for (std::size_t g = 0; g < num_groups; ++g) {
        if (total[g] == 0) throw std::invalid_argument("no predictions for group " + std::to_string(g));
        acc[g] = static_cast<double>(correct[g]) / static_cast<double>(total[g]);
    }
    return acc;
}

std::pair<std::size_t, std::size_t> majority_minority(std::span<const std::size_t> cluster_sizes) {
    if (cluster_sizes.empty()) throw std::invalid_argument("no clusters");
    std::size_t major = 0, minor = 0;
    for (std::size_t j = 1; j < cluster_sizes.size(); ++j) {
        if (cluster_sizes[j] > cluster_sizes[major]) major = j;
        if (cluster_sizes[j] <= cluster_sizes[minor]) minor = j;
    }
    return {major, minor};
}

FairnessReport fairness_report(const PredictionLog& log, std::span<const std::size_t> cluster_sizes,
                               double fairness_weight) {
    FairnessReport rep;
    rep.fairness_weight = fairness_weight;
    rep.per_cluster_acc = accuracy_by_group(log, cluster_sizes.size());
    std::tie(rep.majority_group, rep.minority_group) = majority_minority(cluster_sizes);
    rep.acc_majority = rep.per_cluster_acc[rep.majority_group];
    rep.acc_minority = rep.per_cluster_acc[rep.minority_group];
    std::size_t correct = 0;
    for (const auto& r : log) correct += r.truth == r.predicted;
    rep.acc_all = log.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(log.size());
    rep.dp = demographic_parity(log, rep.majority_group, rep.minority_group);
    auto eo = equalized_odds(log, rep.majority_group, rep.minority_group);
    rep.eo = eo.value;
    rep.eo_skipped_labels = std::move(eo.skipped_labels);
    rep.fair_acc = fair_accuracy(rep.per_cluster_acc, fairness_weight);
    return rep;
}

void write_prediction_log(const std::filesystem::path& path, const PredictionLog& log) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << "true,pred,group\n";
    for (const auto& r : log) out << r.truth << ',' << r.predicted << ',' << r.group << '\n';
    if (!out) throw IoError("failed writing " + path.string());
}

PredictionLog read_prediction_log(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::string line;
    std::size_t line_no = 1;
    if (!std::getline(in, line) || line.rfind("true,pred,group", 0) != 0)
        throw ParseError(path.string() + ": header must be `true,pred,group`", line_no);
    PredictionLog log;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        long long v[3];
        const char* p = line.data();
        const char* end = line.data() + line.size();
        for (int f = 0; f < 3; ++f) {
            auto [next, ec] = std::from_chars(p, end, v[f]);
            const bool sep_ok = f < 2 ? (next < end && *next == ',') : next == end;
            if (ec != std::errc{} || !sep_ok || v[f] < 0)
                throw ParseError(path.string() + ": expected three non-negative integers", line_no);
            p = next + 1;
        }
        log.push_back({static_cast<int>(v[0]), static_cast<int>(v[1]), static_cast<std::size_t>(v[2])});
    }
    return log;
}

std::uint64_t message_bytes(Algorithm algorithm, std::size_t core_len, std::size_t head_len) {
    switch (algorithm) {
        case Algorithm::facade: return serialized_bytes(core_len + head_len) + kClusterIdBytes;
        case Algorithm::el:
        case Algorithm::dpsgd: return serialized_bytes(core_len + head_len);
        case Algorithm::deprl_lite: return serialized_bytes(core_len);
    }
    return 0;
}

std::uint64_t comm_volume(Algorithm algorithm, const Topology& topology, std::size_t core_len, std::size_t head_len) {
    // Each undirected edge carries one message in each direction.
    return 2 * static_cast<std::uint64_t>(topology.edges().size()) * message_bytes(algorithm, core_len, head_len);
}

SettlementReport settlement(const std::vector<std::vector<std::size_t>>& histories, const ClusterSpec& spec,
                            std::size_t window, std::size_t num_heads) {
    if (histories.size() != spec.num_nodes()) throw std::invalid_argument("one selection history per node required");
    const std::size_t k = spec.k();
    std::size_t rounds = histories.empty() ? 0 : histories.front().size();
    for (const auto& h : histories) rounds = std::min(rounds, h.size());
    window = std::max<std::size_t>(window, 1);

    SettlementReport rep;
    std::vector<bool> used(num_heads, false);
    std::vector<std::vector<std::size_t>> freq(k, std::vector<std::size_t>(num_heads, 0));
    for (std::size_t i = 0; i < histories.size(); ++i)
        for (std::size_t t = 0; t < histories[i].size(); ++t) {
            const auto h = histories[i][t];
            if (h >= num_heads) throw std::invalid_argument("selection history names an unknown head");
            used[h] = true;
            ++freq[spec.cluster_of(i)][h];
        }
    for (std::size_t h = 0; h < num_heads; ++h)
        if (!used[h]) rep.never_selected.push_back(h);
    if (rounds > 0) {
        std::vector<bool> recent(num_heads, false);
        for (const auto& h : histories)
            for (std::size_t t = rounds - std::min(window, rounds); t < rounds; ++t) recent[h[t]] = true;
        for (std::size_t h = 0; h < num_heads; ++h)
            if (!recent[h]) rep.abandoned.push_back(h);
    }
    for (std::size_t j = 0; j < k; ++j) {
        const auto& f = freq[j];
        const auto it = std::max_element(f.begin(), f.end());
        if (it != f.end() && *it > 0) rep.modal_head.emplace_back(static_cast<std::size_t>(it - f.begin()));
        else rep.modal_head.emplace_back(std::nullopt);
    }

    // assignment[t] = per-cluster common head if round t is "settled-shaped".
    std::vector<std::optional<std::vector<std::size_t>>> assignment(rounds);
    for (std::size_t t = 0; t < rounds; ++t) {
        std::vector<std::size_t> heads(k);
        bool ok = true;
        for (std::size_t j = 0; j < k && ok; ++j) {
            const auto members = spec.nodes_in(j);
            heads[j] = histories[members.front()][t];
            for (auto i : members) ok = ok && histories[i][t] == heads[j];
        }
        if (ok) {
            auto sorted = heads;
            std::sort(sorted.begin(), sorted.end());
            ok = std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end();
        }
        if (ok) assignment[t] = std::move(heads);
    }

    std::size_t run_len = 0;
    for (std::size_t t = 0; t < rounds; ++t) {
        if (!assignment[t]) {
            run_len = 0;
            continue;
        }
        run_len = (run_len > 0 && assignment[t - 1] == assignment[t]) ? run_len + 1 : 1;
        if (run_len >= window) {
            rep.settled = true;
            rep.settle_round = t + 1 - window;
            break;
        }
    }
    return rep;
}

}  // namespace facade
