// Copyright (c) 2026, The facade-sim Authors
// SPDX-License-Identifier: Apache-2.0

#include "facade/facade.h"

#include <cstring>
#include <new>
#include <stdexcept>
#include <string>

#include "facade/experiment.hpp"
#include "facade/fairness.hpp"
#include "facade/topology.hpp"

struct facade_config {
    facade::ExperimentConfig cfg;
};

struct facade_topology {
    facade::Topology topo;
};

namespace {

thread_local std::string g_last_error;

facade_status fail(facade_status code, const char* msg) {
    g_last_error = msg ? msg : "unknown error";
    return code;
}

template <class F>
facade_status guarded(F&& f) {
    try {
        g_last_error.clear();
        f();
        return FACADE_OK;
    } catch (const facade::ConfigError& e) {
        return fail(FACADE_ERR_CONFIG, e.what());
    } catch (const facade::IoError& e) {
        return fail(FACADE_ERR_IO, e.what());
    } catch (const std::invalid_argument& e) {
        return fail(FACADE_ERR_ARGUMENT, e.what());
    } catch (const std::out_of_range& e) {
        return fail(FACADE_ERR_ARGUMENT, e.what());
    } catch (const std::bad_alloc&) {
        return fail(FACADE_ERR_RUNTIME, "out of memory");
    } catch (const std::exception& e) {
        return fail(FACADE_ERR_RUNTIME, e.what());
    } catch (...) {
        return fail(FACADE_ERR_RUNTIME, "unknown exception");
    }
}

char* dup_string(const std::string& s) {
    char* out = new char[s.size() + 1];
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

void require(bool cond, const char* what) {
    if (!cond) throw std::invalid_argument(what);
}

facade::PredictionLog make_log(const int* truth, const int* predicted, const size_t* group, size_t n) {
    require(n == 0 || (truth && predicted && group), "null prediction arrays");
    facade::PredictionLog log;
    log.reserve(n);
    for (size_t i = 0; i < n; ++i) log.push_back({truth[i], predicted[i], group[i]});
    return log;
}

}  // namespace

extern "C" {

const char* facade_last_error(void) { return g_last_error.c_str(); }

const char* facade_version(void) { return "0.1.0"; }

void facade_string_free(char* s) { delete[] s; }

facade_status facade_config_load(const char* path, facade_config** out) {
    return guarded([&] {
        require(path && out, "null argument");
        *out = nullptr;
        *out = new facade_config{facade::load_experiment_config(path)};
    });
}

facade_status facade_config_parse(const char* json_text, facade_config** out) {
    return guarded([&] {
        require(json_text && out, "null argument");
        *out = nullptr;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(json_text);
        } catch (const nlohmann::json::parse_error& e) {
            throw facade::ConfigError(std::string("malformed JSON: ") + e.what());
        }
        *out = new facade_config{facade::parse_experiment_config(j)};
    });
}

facade_status facade_config_set_seeds(facade_config* cfg, const uint64_t* seeds, size_t count) {
    return guarded([&] {
        require(cfg && (seeds || count == 0), "null argument");
        auto copy = cfg->cfg;
        copy.seeds.assign(seeds, seeds + count);
        copy.validate();
        cfg->cfg = std::move(copy);
    });
}

facade_status facade_config_to_json(const facade_config* cfg, char** out_json) {
    return guarded([&] {
        require(cfg && out_json, "null argument");
        *out_json = dup_string(facade::to_json(cfg->cfg).dump(2));
    });
}

void facade_config_free(facade_config* cfg) { delete cfg; }

facade_status facade_generate_data(const facade_config* cfg, const char* out_dir) {
    return guarded([&] {
        require(cfg && out_dir, "null argument");
        facade::cmd_generate_data(cfg->cfg, out_dir);
    });
}

facade_status facade_run(const facade_config* cfg, const char* out_dir, int quiet) {
    return guarded([&] {
        require(cfg, "null argument");
        const std::filesystem::path dir = out_dir ? std::filesystem::path(out_dir) : cfg->cfg.output_dir;
        facade::cmd_run(cfg->cfg, dir, quiet != 0);
    });
}

facade_status facade_metrics(const char* results_dir, char** out_json) {
    return guarded([&] {
        require(results_dir, "null argument");
        const auto summary = facade::cmd_metrics(results_dir);
        if (out_json) *out_json = dup_string(summary.dump(2));
    });
}

facade_status facade_theory(const char* config_path, char** out_json, int* out_pass) {
    return guarded([&] {
        require(config_path, "null argument");
        const auto report = facade::cmd_theory(facade::load_theory_config(config_path));
        if (out_pass) *out_pass = report.at("pass").get<bool>() ? 1 : 0;
        if (out_json) *out_json = dup_string(report.dump(2));
    });
}

facade_status facade_theory_parse(const char* json_text, char** out_json, int* out_pass) {
    return guarded([&] {
        require(json_text, "null argument");
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(json_text);
        } catch (const nlohmann::json::parse_error& e) {
            throw facade::ConfigError(std::string("malformed JSON: ") + e.what());
        }
        const auto report = facade::cmd_theory(facade::parse_theory_config(j));
        if (out_pass) *out_pass = report.at("pass").get<bool>() ? 1 : 0;
        if (out_json) *out_json = dup_string(report.dump(2));
    });
}

facade_status facade_topology_random_regular(size_t n, size_t degree, uint64_t seed, facade_topology** out) {
    return guarded([&] {
        require(out, "null argument");
        *out = nullptr;
        *out = new facade_topology{facade::gen_r_regular(n, degree, seed)};
    });
}

facade_status facade_topology_ring(size_t n, size_t degree, facade_topology** out) {
    return guarded([&] {
        require(out, "null argument");
        *out = nullptr;
        *out = new facade_topology{facade::gen_static_ring(n, degree)};
    });
}

size_t facade_topology_num_nodes(const facade_topology* t) { return t ? t->topo.size() : 0; }

facade_status facade_topology_neighbors(const facade_topology* t, size_t node, size_t* out, size_t capacity,
                                        size_t* out_count) {
    return guarded([&] {
        require(t && out_count && (out || capacity == 0), "null argument");
        const auto& nb = t->topo.neighbors(node);
        *out_count = nb.size();
        for (size_t i = 0; i < nb.size() && i < capacity; ++i) out[i] = nb[i];
    });
}

int facade_topology_is_connected(const facade_topology* t) { return t && t->topo.is_connected() ? 1 : 0; }

void facade_topology_free(facade_topology* t) { delete t; }

facade_status facade_fair_accuracy(const double* per_cluster_acc, size_t k, double weight, double* out) {
    return guarded([&] {
        require(per_cluster_acc && out && k > 0, "null or empty argument");
        *out = facade::fair_accuracy(std::span<const double>(per_cluster_acc, k), weight);
    });
}

facade_status facade_demographic_parity(const int* truth, const int* predicted, const size_t* group, size_t n,
                                        double* out) {
    return guarded([&] {
        require(out, "null argument");
        *out = facade::demographic_parity(make_log(truth, predicted, group, n));
    });
}

facade_status facade_equalized_odds(const int* truth, const int* predicted, const size_t* group, size_t n,
                                    double* out) {
    return guarded([&] {
        require(out, "null argument");
        *out = facade::equalized_odds(make_log(truth, predicted, group, n)).value;
    });
}

}  // extern "C"
