// Copyright (c) 2026, The facade-sim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "facade/dataset.hpp"
#include "facade/fairness.hpp"
#include "facade/protocols.hpp"
#include "facade/theory.hpp"

namespace facade {

struct DataConfig {
    std::size_t classes = 4;
    std::size_t dim = 16;
    std::size_t train_per_node = 200;
    double test_fraction = kDefaultTestFraction;
    std::uint64_t seed = 7;
    // Featurized input; when set, replaces the synthetic generator.
    std::optional<std::filesystem::path> train_csv;
    std::optional<std::filesystem::path> test_csv;
};

struct ExperimentConfig {
    ProtocolConfig protocol;
    ClusterSpec clusters;
    DataConfig data;
    Architecture arch;
    std::vector<std::uint64_t> seeds{1};
    double fairness_weight = kDefaultFairnessWeight;
    std::size_t settlement_window = 10;
    std::filesystem::path output_dir = "results";

    void validate() const;
};

/// Strict parse: unknown keys and type mismatches raise ConfigError. Missing
/// keys take the desk-scale defaults (n=16 as 12:4, k=2, d=16, C=4, T=300...).
ExperimentConfig parse_experiment_config(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
nlohmann::ordered_json to_json(const ExperimentConfig& cfg);

struct ExperimentData {
    std::vector<NodeDataset> nodes;
    std::vector<LabeledPool> tests;  // per cluster
};

ExperimentData build_datasets(const ExperimentConfig& cfg);

nlohmann::ordered_json to_json(const RoundRecord& rec, Algorithm algorithm);
nlohmann::ordered_json to_json(const FairnessReport& rep);
nlohmann::ordered_json to_json(const SettlementReport& rep);

/// Writes per-node train shards, per-cluster test sets and manifest.json.
void cmd_generate_data(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);

struct RunSummary {
    std::uint64_t seed = 0;
    std::filesystem::path dir;
    FairnessReport fairness;
    SettlementReport settlement;
    std::uint64_t cumulative_bytes = 0;
};

/// One result directory per seed (seed_<s>/), seeds run in parallel.
std::vector<RunSummary> cmd_run(const ExperimentConfig& cfg, const std::filesystem::path& out_dir, bool quiet);

/// Recomputes the summary table (mean and sample std over seeds) from the
/// prediction logs under results_dir; writes summary.csv and summary.json.
nlohmann::ordered_json cmd_metrics(const std::filesystem::path& results_dir);

struct TheoryConfig {
    std::size_t k = 2;
    std::vector<std::size_t> sizes{3, 1};
    double delta = 4.0;
    double noise = 0.0;
    double offset = 0.0;
    std::size_t dim = 2;
    double eta = 0.1;
    int local_steps = 2;
    std::size_t rounds = 0;  // 0: run exactly T̂ rounds
    std::size_t degree = 2;
    std::uint64_t seed = 1;
    std::size_t trials = 0;  // cluster-recovery Monte Carlo trials
    theory::TheoryParams params;
};

TheoryConfig parse_theory_config(const nlohmann::json& j);
TheoryConfig load_theory_config(const std::filesystem::path& path);

/// Runs the contraction check (and recovery trials when requested); the
/// returned JSON carries "pass".
nlohmann::ordered_json cmd_theory(const TheoryConfig& cfg);

}  // namespace facade
