// Copyright (c) 2026, The facade-sim Authors
// SPDX-License-Identifier: Apache-2.0

#include "facade/dataset.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <string>
#include <string_view>

namespace facade {

void LabeledPool::push_back(std::span<const double> x, int label) {
    if (dim == 0 && labels.empty()) dim = x.size();
    if (x.size() != dim) throw DimensionMismatch("sample dimension does not match pool");
    features.insert(features.end(), x.begin(), x.end());
    labels.push_back(label);
}

int LabeledPool::num_labels() const {
    return labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
}

void ClusterSpec::validate() const {
    if (sizes.empty()) throw ConfigError("cluster spec needs at least one cluster");
    for (auto s : sizes)
        if (s < 1) throw ConfigError("every cluster needs at least one node");
    if (transform_seeds.size() != sizes.size())
        throw ConfigError("cluster spec needs one transform seed per cluster");
}

std::size_t ClusterSpec::num_nodes() const { return std::accumulate(sizes.begin(), sizes.end(), std::size_t{0}); }

std::size_t ClusterSpec::first_node(std::size_t cluster) const {
    return std::accumulate(sizes.begin(), sizes.begin() + static_cast<std::ptrdiff_t>(cluster), std::size_t{0});
}

std::size_t ClusterSpec::cluster_of(std::size_t node) const {
    std::size_t upper = 0;
    for (std::size_t j = 0; j < sizes.size(); ++j) {
        upper += sizes[j];
        if (node < upper) return j;
    }
    throw std::out_of_range("node index outside cluster spec");
}

std::vector<std::size_t> ClusterSpec::nodes_in(std::size_t cluster) const {
    std::vector<std::size_t> ids(sizes.at(cluster));
    std::iota(ids.begin(), ids.end(), first_node(cluster));
    return ids;
}

std::vector<std::size_t> ClusterSpec::assignment() const {
    std::vector<std::size_t> out;
    for (std::size_t j = 0; j < sizes.size(); ++j) out.insert(out.end(), sizes[j], j);
    return out;
}

BaseDistribution make_base_distribution(std::size_t classes, std::size_t dim, std::uint64_t seed) {
    if (classes < 2 || dim < 2) throw ConfigError("base distribution needs at least 2 classes and 2 dimensions");
    Rng rng(derive_seed(seed, stream::data, 0));
    std::normal_distribution<double> normal;
    BaseDistribution base{classes, dim, {}};
    auto too_close = [&](const std::vector<double>& mu) {
        for (const auto& other : base.means) {
            double d2 = 0.0;
            for (std::size_t i = 0; i < dim; ++i) d2 += (mu[i] - other[i]) * (mu[i] - other[i]);
            if (d2 < kMinMeanSeparation * kMinMeanSeparation) return true;
        }
        return false;
    };
    for (std::size_t c = 0; c < classes; ++c) {
        std::vector<double> mu(dim);
        for (int attempt = 0; attempt < kMaxMeanDraws; ++attempt) {
            double norm = 0.0;
            do {
                for (auto& v : mu) v = normal(rng);
                norm = std::sqrt(std::inner_product(mu.begin(), mu.end(), mu.begin(), 0.0));
            } while (norm < 1e-12);
            for (auto& v : mu) v *= kClassMeanRadius / norm;
            if (!too_close(mu)) break;
        }
        base.means.push_back(std::move(mu));
    }
    return base;
}

LabeledPool draw_pool(const BaseDistribution& base, std::size_t per_class, std::uint64_t seed) {
    Rng rng(derive_seed(seed, stream::data, 1));
    std::normal_distribution<double> normal;
    LabeledPool pool;
    pool.dim = base.dim;
    pool.features.reserve(base.classes * per_class * base.dim);
    std::vector<double> x(base.dim);
    for (std::size_t c = 0; c < base.classes; ++c)
        for (std::size_t i = 0; i < per_class; ++i) {
            for (std::size_t d = 0; d < base.dim; ++d) x[d] = base.means[c][d] + normal(rng);
            pool.push_back(x, static_cast<int>(c));
        }
    return pool;
}

LabeledPool gen_base(std::size_t classes, std::size_t dim, std::size_t per_class, std::uint64_t seed) {
    return draw_pool(make_base_distribution(classes, dim, seed), per_class, seed);
}

std::vector<double> random_rotation(std::size_t dim, std::uint64_t seed) {
    const auto d = static_cast<Eigen::Index>(dim);
    Rng rng(seed);
    std::normal_distribution<double> normal;
    Eigen::MatrixXd g(d, d);
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j) g(i, j) = normal(rng);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    Eigen::MatrixXd q = qr.householderQ();
    const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Eigen::Index j = 0; j < d; ++j)
        if (r(j, j) < 0) q.col(j) *= -1.0;
    if (q.determinant() < 0) q.col(0) *= -1.0;

    std::vector<double> out(dim * dim);
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j) out[static_cast<std::size_t>(i * d + j)] = q(i, j);
    return out;
}

std::vector<double> cluster_transform(const ClusterSpec& spec, std::size_t cluster_id, std::size_t dim) {
    if (cluster_id >= spec.k()) throw std::out_of_range("cluster id outside cluster spec");
    if (cluster_id == 0) {
        std::vector<double> eye(dim * dim, 0.0);
        for (std::size_t i = 0; i < dim; ++i) eye[i * dim + i] = 1.0;
        return eye;
    }
    return random_rotation(dim, spec.transform_seeds[cluster_id]);
}

LabeledPool apply_cluster_transform(const LabeledPool& pool, std::size_t cluster_id, const ClusterSpec& spec) {
    if (cluster_id == 0) {
        if (cluster_id >= spec.k()) throw std::out_of_range("cluster id outside cluster spec");
        return pool;
    }
    const auto rot = cluster_transform(spec, cluster_id, pool.dim);
    using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    const auto d = static_cast<Eigen::Index>(pool.dim);
    const auto rows = static_cast<Eigen::Index>(pool.size());
    Eigen::Map<const RowMatrix> r(rot.data(), d, d);
    Eigen::Map<const RowMatrix> x(pool.features.data(), rows, d);
    LabeledPool out;
    out.dim = pool.dim;
    out.labels = pool.labels;
    out.features.resize(pool.features.size());
    Eigen::Map<RowMatrix>(out.features.data(), rows, d).noalias() = x * r.transpose();
    return out;
}

Partition partition(const LabeledPool& pool, std::size_t cluster_id, std::size_t nodes_in_cluster, std::uint64_t seed,
                    double test_fraction) {
    if (nodes_in_cluster == 0) throw std::invalid_argument("partition needs at least one node");
    if (test_fraction < 0.0 || test_fraction >= 1.0) throw ConfigError("test fraction must lie in [0, 1)");

    const int num_labels = pool.num_labels();
    std::vector<std::vector<std::size_t>> by_label(static_cast<std::size_t>(num_labels));
    for (std::size_t i = 0; i < pool.size(); ++i) by_label[static_cast<std::size_t>(pool.labels[i])].push_back(i);

    Rng rng(seed);
    Partition out;
    out.test.dim = pool.dim;
    std::vector<std::vector<std::size_t>> remaining;
    for (auto& idx : by_label) {
        std::shuffle(idx.begin(), idx.end(), rng);
        const auto n_test = static_cast<std::size_t>(std::floor(static_cast<double>(idx.size()) * test_fraction));
        out.test_indices.insert(out.test_indices.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_test));
        remaining.emplace_back(idx.begin() + static_cast<std::ptrdiff_t>(n_test), idx.end());
    }

    std::size_t quota = 0;
    bool any = false;
    for (const auto& rem : remaining) {
        if (rem.empty()) continue;
        const std::size_t q = rem.size() / nodes_in_cluster;
        quota = any ? std::min(quota, q) : q;
        any = true;
    }
    if (quota == 0)
        throw std::invalid_argument("partition: fewer samples per label than nodes (" + std::to_string(pool.size()) +
                                    " samples, " + std::to_string(nodes_in_cluster) + " nodes)");

    out.shard_indices.resize(nodes_in_cluster);
    for (const auto& rem : remaining) {
        if (rem.empty()) continue;
        for (std::size_t node = 0; node < nodes_in_cluster; ++node)
            for (std::size_t s = 0; s < quota; ++s) out.shard_indices[node].push_back(rem[node * quota + s]);
        out.dropped_indices.insert(out.dropped_indices.end(),
                                   rem.begin() + static_cast<std::ptrdiff_t>(nodes_in_cluster * quota), rem.end());
    }

    for (auto i : out.test_indices) out.test.push_back(pool.row(i), pool.labels[i]);
    for (const auto& indices : out.shard_indices) {
        NodeDataset shard;
        shard.test_ref = cluster_id;
        shard.train.dim = pool.dim;
        for (auto i : indices) shard.train.push_back(pool.row(i), pool.labels[i]);
        out.shards.push_back(std::move(shard));
    }
    return out;
}

Batch sample_batch(const LabeledPool& shard, std::size_t batch_size, Rng& rng) {
    if (batch_size == 0 || batch_size > shard.size())
        throw std::invalid_argument("batch size " + std::to_string(batch_size) + " exceeds shard size " +
                                    std::to_string(shard.size()));
    // Partial Fisher-Yates over the index range.
    std::vector<std::size_t> idx(shard.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    Batch batch;
    batch.dim = shard.dim;
    batch.features.reserve(batch_size * shard.dim);
    batch.labels.reserve(batch_size);
    for (std::size_t b = 0; b < batch_size; ++b) {
        std::uniform_int_distribution<std::size_t> pick(b, idx.size() - 1);
        std::swap(idx[b], idx[pick(rng)]);
        const auto row = shard.row(idx[b]);
        batch.features.insert(batch.features.end(), row.begin(), row.end());
        batch.labels.push_back(shard.labels[idx[b]]);
    }
    return batch;
}

namespace {

std::vector<std::string_view> split_csv(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        auto comma = line.find(',', start);
        fields.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return fields;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

}  // namespace

LabeledPool load_featurized(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) throw ParseError(path.string() + ": missing header", 1);
    ++line_no;
    const auto header = split_csv(trim(line));
    if (header.size() < 2 || trim(header[0]) != "label")
        throw ParseError(path.string() + ": header must be `label,f0,...`", line_no);
    for (std::size_t c = 1; c < header.size(); ++c)
        if (trim(header[c]) != "f" + std::to_string(c - 1))
            throw ParseError(path.string() + ": unexpected header column `" + std::string(header[c]) + "`", line_no);

    LabeledPool pool;
    pool.dim = header.size() - 1;
    std::vector<double> x(pool.dim);
    while (std::getline(in, line)) {
        ++line_no;
        const auto body = trim(line);
        if (body.empty()) continue;
        const auto fields = split_csv(body);
        if (fields.size() != header.size())
            throw ParseError(path.string() + ": expected " + std::to_string(header.size()) + " fields, found " +
                                 std::to_string(fields.size()),
                             line_no);
        const auto lab = trim(fields[0]);
        int label = -1;
        auto [lp, lec] = std::from_chars(lab.data(), lab.data() + lab.size(), label);
        if (lec != std::errc{} || lp != lab.data() + lab.size() || label < 0)
            throw ParseError(path.string() + ": label must be a non-negative integer", line_no);
        for (std::size_t d = 0; d < pool.dim; ++d) {
            const auto f = trim(fields[d + 1]);
            auto [fp, fec] = std::from_chars(f.data(), f.data() + f.size(), x[d]);
            if (fec != std::errc{} || fp != f.data() + f.size())
                throw ParseError(path.string() + ": malformed feature `" + std::string(f) + "`", line_no);
        }
        pool.push_back(x, label);
    }
    return pool;
}

void save_featurized(const std::filesystem::path& path, const LabeledPool& pool) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << "label";
    for (std::size_t d = 0; d < pool.dim; ++d) out << ",f" << d;
    out << '\n';
    char buf[64];
    for (std::size_t i = 0; i < pool.size(); ++i) {
        out << pool.labels[i];
        for (double v : pool.row(i)) {
            auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
            out << ',' << std::string_view(buf, static_cast<std::size_t>(end - buf));
        }
        out << '\n';
    }
    if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace facade
