// Copyright (c) 2026, The facade-sim Authors
// SPDX-License-Identifier: Apache-2.0

// facade-sim command line: generate-data, run, metrics, theory.

#include <cstdint>
#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "facade/facade.h"

namespace {

constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;

int exit_code(facade_status s) {
    if (s == FACADE_OK) return 0;
    std::cerr << "error: " << facade_last_error() << '\n';
    return s == FACADE_ERR_CONFIG || s == FACADE_ERR_ARGUMENT ? kExitConfig : kExitRuntime;
}

struct ConfigGuard {
    facade_config* cfg = nullptr;
    ~ConfigGuard() { facade_config_free(cfg); }
};

facade_status load(const std::string& path, const std::vector<std::uint64_t>& seeds, ConfigGuard& g) {
    auto s = facade_config_load(path.c_str(), &g.cfg);
    if (s != FACADE_OK || seeds.empty()) return s;
    return facade_config_set_seeds(g.cfg, seeds.data(), seeds.size());
}

void print_and_free(char* json) {
    if (!json) return;
    std::cout << json << '\n';
    facade_string_free(json);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Clustered decentralized learning simulator"};
    app.require_subcommand(1);
    app.set_version_flag("--version", facade_version());

    std::string config_path, out_dir;
    std::vector<std::uint64_t> seeds;
    bool quiet = false;

    auto* gen = app.add_subcommand("generate-data", "Write per-node shards, per-cluster test sets and a manifest");
    gen->add_option("--config", config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
    gen->add_option("--out", out_dir, "Output directory")->required();

    auto* run = app.add_subcommand("run", "Run an experiment, one result directory per seed");
    run->add_option("--config", config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
    run->add_option("--out", out_dir, "Results directory (default: output_dir from the config)");
    run->add_option("--seeds", seeds, "Seed list overriding the config, e.g. --seeds 1,2,3")->delimiter(',');
    run->add_flag("--quiet", quiet, "No progress output");

    auto* metrics = app.add_subcommand("metrics", "Summarize prediction logs across seeds");
    metrics->add_option("--out", out_dir, "Results directory written by `run`")->required();
    metrics->add_flag("--quiet", quiet, "Do not print the summary");

    auto* theory = app.add_subcommand("theory", "Contraction check on the quadratic network");
    theory->add_option("--config", config_path, "Theory config (JSON)")->required()->check(CLI::ExistingFile);
    theory->add_flag("--quiet", quiet, "Print only PASS/FAIL");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitConfig;
    }

    if (gen->parsed()) {
        ConfigGuard g;
        auto s = load(config_path, {}, g);
        if (s == FACADE_OK) s = facade_generate_data(g.cfg, out_dir.c_str());
        return exit_code(s);
    }
    if (run->parsed()) {
        ConfigGuard g;
        auto s = load(config_path, seeds, g);
        if (s == FACADE_OK) s = facade_run(g.cfg, out_dir.empty() ? nullptr : out_dir.c_str(), quiet ? 1 : 0);
        return exit_code(s);
    }
    if (metrics->parsed()) {
        char* json = nullptr;
        auto s = facade_metrics(out_dir.c_str(), &json);
        if (s == FACADE_OK && !quiet) print_and_free(json);
        else facade_string_free(json);
        return exit_code(s);
    }
    if (theory->parsed()) {
        char* json = nullptr;
        int pass = 0;
        auto s = facade_theory(config_path.c_str(), &json, &pass);
        if (s != FACADE_OK) return exit_code(s);
        if (quiet) facade_string_free(json);
        else print_and_free(json);
        std::cout << (pass ? "PASS" : "FAIL") << '\n';
        return pass ? 0 : kExitRuntime;
    }
    return kExitConfig;
}
