// Copyright (c) 2026, The facade-sim Authors
// SPDX-License-Identifier: Apache-2.0

#include "facade/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

namespace facade {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

// Strict object reader: every key must be consumed, otherwise finish() throws.
class ObjectReader {
public:
    ObjectReader(const json& j, std::string context) : j_(j), ctx_(std::move(context)) {
        if (!j_.is_object()) throw ConfigError(ctx_ + ": expected a JSON object");
    }

    template <class T>
    T get(const std::string& key, T fallback) {
        seen_.insert(key);
        auto it = j_.find(key);
        if (it == j_.end()) return fallback;
        try {
            if constexpr (std::is_unsigned_v<T> && !std::is_same_v<T, bool>) {
                if (!it->is_number_unsigned() && !(it->is_number_integer() && it->template get<long long>() >= 0))
                    throw ConfigError(ctx_ + "." + key + ": expected a non-negative integer");
            } else if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
                if (!it->is_number_integer()) throw ConfigError(ctx_ + "." + key + ": expected an integer");
            } else if constexpr (std::is_floating_point_v<T>) {
                if (!it->is_number()) throw ConfigError(ctx_ + "." + key + ": expected a number");
            }
            return it->template get<T>();
        } catch (const json::exception& e) {
            throw ConfigError(ctx_ + "." + key + ": " + e.what());
        }
    }

    const json* child(const std::string& key) {
        seen_.insert(key);
        auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key())) throw ConfigError(ctx_ + ": unknown key `" + it.key() + "`");
    }

private:
    const json& j_;
    std::string ctx_;
    std::set<std::string> seen_;
};

json read_json_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("malformed JSON in " + path.string() + ": " + e.what());
    }
}

void write_json_file(const fs::path& path, const ojson& j) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << j.dump(2) << '\n';
    if (!out) throw IoError("failed writing " + path.string());
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw IoError("cannot create directory " + dir.string());
}

ojson nullable(double v) { return std::isnan(v) ? ojson(nullptr) : ojson(v); }

}  // namespace

void ExperimentConfig::validate() const {
    protocol.validate();
    clusters.validate();
    arch.validate();
    const auto n = clusters.num_nodes();
    if (protocol.degree >= n) throw ConfigError("degree must be smaller than the node count");
    if ((n * protocol.degree) % 2 != 0) throw ConfigError("n * degree must be even for a regular topology");
    if (seeds.empty()) throw ConfigError("seed list is empty");
    if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size())
        throw ConfigError("seed list contains duplicates");
    if (fairness_weight < 0.0 || fairness_weight > 1.0) throw ConfigError("fairness_weight must lie in [0, 1]");
    if (data.train_csv.has_value() != data.test_csv.has_value())
        throw ConfigError("data.train_csv and data.test_csv must be given together");
    if (!data.train_csv) {
        if (data.classes < 2 || data.dim < 2) throw ConfigError("synthetic data needs classes >= 2 and dim >= 2");
        if (data.classes != arch.num_classes || data.dim != arch.input_dim)
            throw ConfigError("model dimensions must match data.classes and data.dim");
    }
    if (data.train_per_node < protocol.batch_size) throw ConfigError("train_per_node must be >= batch_size");
    if (data.test_fraction <= 0.0 || data.test_fraction >= 1.0) throw ConfigError("test_fraction must lie in (0, 1)");
}

ExperimentConfig parse_experiment_config(const json& j, const fs::path& base_dir) {
    ExperimentConfig cfg;
    cfg.protocol.k = 2;
    cfg.protocol.eta = 0.05;
    cfg.protocol.local_steps = 10;
    cfg.protocol.batch_size = 8;
    cfg.protocol.rounds = 300;
    cfg.protocol.degree = 4;
    cfg.protocol.warmup_rounds = 20;
    cfg.protocol.eval_every = 20;
    cfg.clusters.sizes = {12, 4};
    cfg.arch.hidden_dims = {32};

    ObjectReader root(j, "config");
    cfg.protocol.algorithm = parse_algorithm(root.get<std::string>("algorithm", "facade"));
    cfg.protocol.k = root.get<std::size_t>("k", cfg.protocol.algorithm == Algorithm::facade ? 2 : 1);
    cfg.protocol.eta = root.get<double>("eta", cfg.protocol.eta);
    cfg.protocol.local_steps = root.get<int>("local_steps", cfg.protocol.local_steps);
    cfg.protocol.batch_size = root.get<std::size_t>("batch_size", cfg.protocol.batch_size);
    cfg.protocol.rounds = root.get<std::size_t>("rounds", cfg.protocol.rounds);
    cfg.protocol.degree = root.get<std::size_t>("degree", cfg.protocol.degree);
    cfg.protocol.warmup_rounds = root.get<std::size_t>("warmup_rounds", cfg.protocol.warmup_rounds);
    cfg.protocol.eval_every = root.get<std::size_t>("eval_every", cfg.protocol.eval_every);
    cfg.fairness_weight = root.get<double>("fairness_weight", cfg.fairness_weight);
    cfg.settlement_window = root.get<std::size_t>("settlement_window", cfg.settlement_window);
    cfg.seeds = root.get<std::vector<std::uint64_t>>("seeds", cfg.seeds);
    cfg.output_dir = root.get<std::string>("output_dir", cfg.output_dir.string());

    if (const json* c = root.child("clusters")) {
        ObjectReader r(*c, "config.clusters");
        cfg.clusters.sizes = r.get<std::vector<std::size_t>>("sizes", cfg.clusters.sizes);
        cfg.clusters.transform_seeds = r.get<std::vector<std::uint64_t>>("transform_seeds", {});
        r.finish();
    }
    if (cfg.clusters.transform_seeds.empty())
        for (std::size_t jdx = 0; jdx < cfg.clusters.sizes.size(); ++jdx)
            cfg.clusters.transform_seeds.push_back(1000 + jdx);

    if (const json* d = root.child("data")) {
        ObjectReader r(*d, "config.data");
        cfg.data.classes = r.get<std::size_t>("classes", cfg.data.classes);
        cfg.data.dim = r.get<std::size_t>("dim", cfg.data.dim);
        cfg.data.train_per_node = r.get<std::size_t>("train_per_node", cfg.data.train_per_node);
        cfg.data.test_fraction = r.get<double>("test_fraction", cfg.data.test_fraction);
        cfg.data.seed = r.get<std::uint64_t>("seed", cfg.data.seed);
        auto train = r.get<std::string>("train_csv", "");
        auto test = r.get<std::string>("test_csv", "");
        if (!train.empty()) cfg.data.train_csv = fs::path(train).is_absolute() ? fs::path(train) : base_dir / train;
        if (!test.empty()) cfg.data.test_csv = fs::path(test).is_absolute() ? fs::path(test) : base_dir / test;
        r.finish();
    }
    if (const json* m = root.child("model")) {
        ObjectReader r(*m, "config.model");
        cfg.arch.hidden_dims = r.get<std::vector<std::size_t>>("hidden", cfg.arch.hidden_dims);
        r.finish();
    }
    root.finish();

    cfg.arch.input_dim = cfg.data.dim;
    cfg.arch.num_classes = cfg.data.classes;
    if (cfg.data.train_csv) {
        // Dimensions come from the file; the header is enough.
        const auto pool = load_featurized(*cfg.data.train_csv);
        cfg.arch.input_dim = cfg.data.dim = pool.dim;
        cfg.arch.num_classes = cfg.data.classes = static_cast<std::size_t>(pool.num_labels());
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig load_experiment_config(const fs::path& path) {
    return parse_experiment_config(read_json_file(path), path.parent_path());
}

ojson to_json(const ExperimentConfig& cfg) {
    const auto& p = cfg.protocol;
    ojson j;
    j["algorithm"] = std::string(to_string(p.algorithm));
    j["k"] = p.k;
    j["eta"] = p.eta;
    j["local_steps"] = p.local_steps;
    j["batch_size"] = p.batch_size;
    j["rounds"] = p.rounds;
    j["degree"] = p.degree;
    j["warmup_rounds"] = p.warmup_rounds;
    j["eval_every"] = p.eval_every;
    j["fairness_weight"] = cfg.fairness_weight;
    j["settlement_window"] = cfg.settlement_window;
    j["seeds"] = cfg.seeds;
    j["output_dir"] = cfg.output_dir.string();
    j["clusters"] = {{"sizes", cfg.clusters.sizes}, {"transform_seeds", cfg.clusters.transform_seeds}};
    ojson data = {{"classes", cfg.data.classes},
                  {"dim", cfg.data.dim},
                  {"train_per_node", cfg.data.train_per_node},
                  {"test_fraction", cfg.data.test_fraction},
                  {"seed", cfg.data.seed}};
    if (cfg.data.train_csv) data["train_csv"] = cfg.data.train_csv->string();
    if (cfg.data.test_csv) data["test_csv"] = cfg.data.test_csv->string();
    j["data"] = data;
    j["model"] = {{"hidden", cfg.arch.hidden_dims}};
    return j;
}

ExperimentData build_datasets(const ExperimentConfig& cfg) {
    const auto& spec = cfg.clusters;
    const auto& dc = cfg.data;
    ExperimentData out;
    if (dc.train_csv) {
        // Featurized input: deal the training pool to all nodes, then apply each
        // node's cluster transform; the shared test file is transformed per cluster.
        const auto train = load_featurized(*dc.train_csv);
        const auto test = load_featurized(*dc.test_csv);
        if (test.dim != train.dim) throw DimensionMismatch("train and test CSVs have different feature counts");
        auto part = partition(train, 0, spec.num_nodes(), derive_seed(dc.seed, stream::data, 200), 0.0);
        for (std::size_t i = 0; i < part.shards.size(); ++i) {
            const auto j = spec.cluster_of(i);
            NodeDataset nd;
            nd.test_ref = j;
            nd.train = apply_cluster_transform(part.shards[i].train, j, spec);
            out.nodes.push_back(std::move(nd));
        }
        for (std::size_t j = 0; j < spec.k(); ++j) out.tests.push_back(apply_cluster_transform(test, j, spec));
        return out;
    }

    const auto base = make_base_distribution(dc.classes, dc.dim, dc.seed);
    for (std::size_t j = 0; j < spec.k(); ++j) {
        const std::size_t train_per_class = (dc.train_per_node * spec.sizes[j] + dc.classes - 1) / dc.classes;
        auto held_out = [&](std::size_t m) {
            return static_cast<std::size_t>(std::floor(static_cast<double>(m) * dc.test_fraction));
        };
        auto per_class = static_cast<std::size_t>(
            std::ceil(static_cast<double>(train_per_class) / (1.0 - dc.test_fraction)));
        while (held_out(per_class) < 1 || per_class - held_out(per_class) < train_per_class) ++per_class;
        const auto pool = draw_pool(base, per_class, derive_seed(dc.seed, stream::data, 100 + j));
        const auto rotated = apply_cluster_transform(pool, j, spec);
        auto part = partition(rotated, j, spec.sizes[j], derive_seed(dc.seed, stream::data, 200 + j), dc.test_fraction);
        for (auto& shard : part.shards) out.nodes.push_back(std::move(shard));
        out.tests.push_back(std::move(part.test));
    }
    return out;
}

ojson to_json(const RoundRecord& rec, Algorithm algorithm) {
    ojson j;
    j["algorithm"] = std::string(to_string(algorithm));
    j["round"] = rec.round;
    j["phase"] = rec.after_all_reduce ? "all_reduce" : (rec.trained ? "train" : "initial");
    if (rec.trained) {
        j["mean_loss"] = rec.mean_loss;
        j["selected"] = rec.selected;
        j["connected"] = rec.connected;
    }
    if (rec.eval) {
        j["per_cluster_acc"] = rec.eval->per_cluster_acc;
        j["acc_all"] = rec.eval->acc_all;
        j["fair_acc"] = rec.eval->fair_acc;
    }
    return j;
}

ojson to_json(const FairnessReport& rep) {
    ojson j;
    j["dp"] = rep.dp;
    j["eo"] = rep.eo;
    j["eo_skipped_labels"] = rep.eo_skipped_labels;
    j["per_cluster_acc"] = rep.per_cluster_acc;
    j["acc_majority"] = rep.acc_majority;
    j["acc_minority"] = rep.acc_minority;
    j["acc_all"] = rep.acc_all;
    j["fair_acc"] = rep.fair_acc;
    j["fairness_weight"] = rep.fairness_weight;
    j["majority_group"] = rep.majority_group;
    j["minority_group"] = rep.minority_group;
    return j;
}

ojson to_json(const SettlementReport& rep) {
    ojson j;
    j["settled"] = rep.settled;
    j["settle_round"] = rep.settle_round ? ojson(*rep.settle_round) : ojson(nullptr);
    ojson modal = ojson::array();
    for (const auto& m : rep.modal_head) modal.push_back(m ? ojson(*m) : ojson(nullptr));
    j["modal_head"] = modal;
    j["never_selected"] = rep.never_selected;
    j["abandoned"] = rep.abandoned;
    return j;
}

void cmd_generate_data(const ExperimentConfig& cfg, const fs::path& out_dir) {
    ensure_dir(out_dir);
    const auto data = build_datasets(cfg);
    ojson nodes = ojson::array();
    for (std::size_t i = 0; i < data.nodes.size(); ++i) {
        const auto name = "node_" + std::to_string(i) + ".csv";
        save_featurized(out_dir / name, data.nodes[i].train);
        nodes.push_back({{"node", i}, {"cluster", data.nodes[i].test_ref}, {"file", name},
                         {"samples", data.nodes[i].train.size()}});
    }
    ojson tests = ojson::array();
    for (std::size_t j = 0; j < data.tests.size(); ++j) {
        const auto name = "test_cluster_" + std::to_string(j) + ".csv";
        save_featurized(out_dir / name, data.tests[j]);
        tests.push_back({{"cluster", j}, {"file", name}, {"samples", data.tests[j].size()}});
    }
    ojson manifest;
    manifest["n"] = cfg.clusters.num_nodes();
    manifest["k"] = cfg.clusters.k();
    manifest["sizes"] = cfg.clusters.sizes;
    manifest["transform_seeds"] = cfg.clusters.transform_seeds;
    manifest["data"] = to_json(cfg)["data"];
    manifest["nodes"] = nodes;
    manifest["tests"] = tests;
    write_json_file(out_dir / "manifest.json", manifest);
}

namespace {

RunSummary run_one_seed(const ExperimentConfig& cfg, const ExperimentData& data, std::uint64_t seed,
                        const fs::path& dir) {
    ensure_dir(dir);
    ProtocolConfig pc = cfg.protocol;
    pc.seed = seed;
    RunOptions opts;
    opts.fairness_weight = cfg.fairness_weight;
    auto result = run(pc, cfg.clusters, cfg.arch, data.nodes, data.tests, opts);

    auto seed_cfg = to_json(cfg);
    seed_cfg["seeds"] = std::vector<std::uint64_t>{seed};
    write_json_file(dir / "config.json", seed_cfg);

    std::ofstream rounds(dir / "rounds.jsonl");
    std::ofstream comm(dir / "comm.csv");
    if (!rounds || !comm) throw IoError("cannot write results under " + dir.string());
    comm << "round,bytes,cumulative_bytes\n";
    for (const auto& rec : result.records) {
        rounds << to_json(rec, pc.algorithm).dump() << '\n';
        if (rec.trained) comm << rec.round << ',' << rec.bytes << ',' << rec.cumulative_bytes << '\n';
    }

    RunSummary summary;
    summary.seed = seed;
    summary.dir = dir;
    summary.cumulative_bytes = result.records.back().cumulative_bytes;
    write_prediction_log(dir / "predictions.csv", result.final_predictions);
    summary.fairness = fairness_report(result.final_predictions, cfg.clusters.sizes, cfg.fairness_weight);
    write_json_file(dir / "fairness.json", to_json(summary.fairness));

    std::vector<std::vector<std::size_t>> histories;
    for (const auto& s : result.final_states) histories.push_back(s.selection_history);
    summary.settlement = settlement(histories, cfg.clusters, cfg.settlement_window, pc.head_slots());
    auto st = to_json(summary.settlement);
    if (pc.algorithm == Algorithm::deprl_lite) st["note"] = "deprl_lite is a simplified local-head baseline";
    write_json_file(dir / "settlement.json", st);

    const auto ckpt = dir / "checkpoints";
    ensure_dir(ckpt);
    for (const auto& s : result.final_states) {
        std::ofstream f(ckpt / ("node_" + std::to_string(s.id) + ".bin"), std::ios::binary);
        write_params(f, s.effective_model());
    }
    return summary;
}

}  // namespace

std::vector<RunSummary> cmd_run(const ExperimentConfig& cfg, const fs::path& out_dir, bool quiet) {
    cfg.validate();
    ensure_dir(out_dir);
    const auto data = build_datasets(cfg);

    std::vector<RunSummary> summaries(cfg.seeds.size());
    std::vector<std::exception_ptr> errors(cfg.seeds.size());
    std::atomic<std::size_t> next{0};
    std::mutex log_mutex;
    const std::size_t workers =
        std::max<std::size_t>(1, std::min<std::size_t>(cfg.seeds.size(), std::thread::hardware_concurrency()));
    auto worker = [&] {
        for (std::size_t idx = next++; idx < cfg.seeds.size(); idx = next++) {
            const auto seed = cfg.seeds[idx];
            try {
                summaries[idx] = run_one_seed(cfg, data, seed, out_dir / ("seed_" + std::to_string(seed)));
                if (!quiet) {
                    std::lock_guard lock(log_mutex);
                    const auto& f = summaries[idx].fairness;
                    std::cerr << "seed " << seed << ": acc_maj=" << f.acc_majority << " acc_min=" << f.acc_minority
                              << " fair_acc=" << f.fair_acc << (summaries[idx].settlement.settled ? " settled" : "")
                              << '\n';
                }
            } catch (...) {
                errors[idx] = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return summaries;
}

ojson cmd_metrics(const fs::path& results_dir) {
    if (!fs::is_directory(results_dir)) throw IoError("results directory " + results_dir.string() + " does not exist");
    std::vector<fs::path> seed_dirs;
    for (const auto& entry : fs::directory_iterator(results_dir))
        if (entry.is_directory() && fs::exists(entry.path() / "predictions.csv")) seed_dirs.push_back(entry.path());
    std::sort(seed_dirs.begin(), seed_dirs.end());
    if (seed_dirs.empty()) throw IoError("no result directories with predictions.csv under " + results_dir.string());

    static const char* kColumns[] = {"acc_maj", "acc_min", "acc_all", "dp", "eo", "acc_fair"};
    std::map<std::string, std::vector<double>> values;
    std::string algorithm = "unknown";
    std::vector<std::string> seeds;
    for (const auto& dir : seed_dirs) {
        const auto log = read_prediction_log(dir / "predictions.csv");
        std::vector<std::size_t> sizes;
        double weight = kDefaultFairnessWeight;
        if (fs::exists(dir / "config.json")) {
            const auto c = read_json_file(dir / "config.json");
            sizes = c.at("clusters").at("sizes").get<std::vector<std::size_t>>();
            weight = c.value("fairness_weight", weight);
            algorithm = c.value("algorithm", algorithm);
        } else {
            // No config: rank groups by their number of predictions.
            std::map<std::size_t, std::size_t> counts;
            for (const auto& r : log) ++counts[r.group];
            sizes.assign(counts.empty() ? 0 : counts.rbegin()->first + 1, 0);
            for (const auto& [g, c] : counts) sizes[g] = c;
        }
        const auto rep = fairness_report(log, sizes, weight);
        values["acc_maj"].push_back(rep.acc_majority);
        values["acc_min"].push_back(rep.acc_minority);
        values["acc_all"].push_back(rep.acc_all);
        values["dp"].push_back(rep.dp);
        values["eo"].push_back(rep.eo);
        values["acc_fair"].push_back(rep.fair_acc);
        seeds.push_back(dir.filename().string());
    }

    ojson summary;
    summary["algorithm"] = algorithm;
    summary["runs"] = seeds;
    std::ostringstream csv;
    csv.precision(10);
    csv << "algorithm,runs";
    for (const char* c : kColumns) csv << ',' << c << "_mean," << c << "_std";
    csv << '\n' << algorithm << ',' << seeds.size();
    for (const char* c : kColumns) {
        const auto& v = values[c];
        double mean = 0.0;
        for (double x : v) mean += x;
        mean /= static_cast<double>(v.size());
        double var = 0.0;
        for (double x : v) var += (x - mean) * (x - mean);
        const double sd = v.size() > 1 ? std::sqrt(var / static_cast<double>(v.size() - 1)) : 0.0;
        summary[c] = {{"mean", mean}, {"std", sd}, {"values", v}};
        csv << ',' << mean << ',' << sd;
    }
    csv << '\n';
    write_json_file(results_dir / "summary.json", summary);
    std::ofstream out(results_dir / "summary.csv");
    out << csv.str();
    if (!out) throw IoError("cannot write summary.csv");
    return summary;
}

TheoryConfig parse_theory_config(const json& j) {
    TheoryConfig cfg;
    ObjectReader r(j, "theory");
    cfg.k = r.get<std::size_t>("k", cfg.k);
    cfg.sizes = r.get<std::vector<std::size_t>>("sizes", cfg.sizes);
    cfg.delta = r.get<double>("delta", cfg.delta);
    cfg.noise = r.get<double>("noise", cfg.noise);
    cfg.offset = r.get<double>("offset", cfg.offset);
    cfg.dim = r.get<std::size_t>("dim", cfg.dim);
    cfg.eta = r.get<double>("eta", cfg.eta);
    cfg.local_steps = r.get<int>("local_steps", cfg.local_steps);
    cfg.rounds = r.get<std::size_t>("rounds", cfg.rounds);
    cfg.degree = r.get<std::size_t>("degree", cfg.degree);
    cfg.seed = r.get<std::uint64_t>("seed", cfg.seed);
    cfg.trials = r.get<std::size_t>("trials", cfg.trials);
    cfg.params.lambda_cvx = r.get<double>("lambda", cfg.params.lambda_cvx);
    cfg.params.smoothness = r.get<double>("L", cfg.params.smoothness);
    cfg.params.sigma2 = r.get<double>("sigma2", cfg.params.sigma2);
    cfg.params.nu2 = r.get<double>("nu2", cfg.params.nu2);
    cfg.params.alpha = r.get<double>("alpha", cfg.params.alpha);
    cfg.params.delta_prob = r.get<double>("delta_prob", cfg.params.delta_prob);
    cfg.params.eps = r.get<double>("eps", cfg.params.eps);
    r.finish();
    cfg.params.validate();
    if (cfg.params.lambda_cvx != 1.0 || cfg.params.smoothness != 1.0)
        throw ConfigError("theory: the quadratic harness realizes lambda = L = 1 only");
    if (cfg.sizes.size() != cfg.k) throw ConfigError("theory: sizes must list k cluster sizes");
    if (cfg.eta <= 0.0 || cfg.eta > 1.0) throw ConfigError("theory: eta must lie in (0, 1]");
    if (cfg.local_steps < 1) throw ConfigError("theory: local_steps must be >= 1");
    return cfg;
}

TheoryConfig load_theory_config(const fs::path& path) { return parse_theory_config(read_json_file(path)); }

ojson cmd_theory(const TheoryConfig& cfg) {
    const auto net = theory::build_quadratic_network(cfg.k, cfg.sizes, cfg.delta, cfg.noise, cfg.dim, cfg.seed,
                                                     cfg.offset);
    const auto n = net.clusters.num_nodes();
    if (cfg.degree < 1 || cfg.degree >= n || (n * cfg.degree) % 2 != 0)
        throw ConfigError("theory: degree must satisfy 1 <= r < n with n*r even");
    ProtocolConfig pc;
    pc.algorithm = Algorithm::facade;
    pc.k = cfg.k;
    pc.eta = cfg.eta;
    pc.local_steps = cfg.local_steps;
    pc.rounds = cfg.rounds;
    pc.degree = cfg.degree;
    pc.warmup_rounds = 0;
    pc.seed = cfg.seed;

    const auto rep = theory::contraction_check(net, pc, cfg.params);
    ojson j;
    j["pass"] = rep.pass;
    j["rounds"] = rep.rounds;
    j["t_hat"] = rep.t_hat;
    j["p"] = net.min_cluster_fraction();
    j["delta"] = net.min_separation();
    j["contraction_factor"] = rep.factor;
    j["exact_rate"] = rep.exact_rate;
    j["identified_from"] = rep.identified_from ? ojson(*rep.identified_from) : ojson(nullptr);
    j["max_exact_deviation"] = rep.max_exact_deviation;
    j["checks"] = {{"populated", rep.populated},
                   {"rate", rep.rate_ok},
                   {"terminal", rep.terminal_ok},
                   {"exact_rate_floor", rep.ratio_floor_ok}};
    ojson clusters = ojson::array();
    for (std::size_t c = 0; c < rep.noise_floor.size(); ++c) {
        ojson cj;
        ojson dist = ojson::array(), dist_true = ojson::array();
        for (double d : rep.trajectory.distance[c]) dist.push_back(nullable(d));
        for (double d : rep.trajectory.distance_true[c]) dist_true.push_back(nullable(d));
        cj["cluster"] = c;
        cj["noise_floor"] = rep.noise_floor[c];
        cj["fitted_ratio"] = nullable(rep.fitted_ratio[c]);
        cj["plateau_start"] = rep.plateau_start[c];
        cj["terminal"] = nullable(rep.terminal[c]);
        cj["at_t_hat"] = nullable(rep.at_t_hat[c]);
        cj["distance"] = dist;
        cj["distance_true"] = dist_true;
        clusters.push_back(cj);
    }
    j["clusters"] = clusters;
    if (cfg.trials > 0) {
        const auto rate = theory::cluster_recovery_rate(net, pc, cfg.params, cfg.trials);
        j["recovery_rate"] = rate ? ojson(*rate) : ojson("not_applicable");
    }
    j["diagnostics"] = rep.diagnostics;
    return j;
}

}  // namespace facade
