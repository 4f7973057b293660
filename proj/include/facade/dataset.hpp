// Copyright (c) 2026, The facade-sim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "facade/common.hpp"
#include "facade/tinynet.hpp"

namespace facade {

/// Labeled samples stored row-major.
struct LabeledPool {
    std::size_t dim = 0;
    std::vector<double> features;
    std::vector<int> labels;

    std::size_t size() const noexcept { return labels.size(); }
    std::span<const double> row(std::size_t i) const { return std::span(features).subspan(i * dim, dim); }
    void push_back(std::span<const double> x, int label);
    int num_labels() const;  // 1 + max label, 0 when empty
};

/// Ground-truth clusters. Nodes are assigned contiguously: the first sizes[0]
/// node ids are cluster 0, and so on.
struct ClusterSpec {
    std::vector<std::size_t> sizes;
    std::vector<std::uint64_t> transform_seeds;

    void validate() const;
    std::size_t k() const noexcept { return sizes.size(); }
    std::size_t num_nodes() const;
    std::size_t cluster_of(std::size_t node) const;
    std::size_t first_node(std::size_t cluster) const;
    std::vector<std::size_t> nodes_in(std::size_t cluster) const;
    std::vector<std::size_t> assignment() const;  // node -> cluster
};

struct NodeDataset {
    LabeledPool train;
    std::size_t test_ref = 0;  // cluster whose shared test set this node evaluates on
};

/// Class-conditional isotropic Gaussians N(mu_c, I); the means lie on the
/// sphere of radius 3.
struct BaseDistribution {
    std::size_t classes = 0;
    std::size_t dim = 0;
    std::vector<std::vector<double>> means;
};

inline constexpr double kClassMeanRadius = 3.0;
inline constexpr double kMinMeanSeparation = 1.0;
inline constexpr int kMaxMeanDraws = 1000;

BaseDistribution make_base_distribution(std::size_t classes, std::size_t dim, std::uint64_t seed);
LabeledPool draw_pool(const BaseDistribution& base, std::size_t per_class, std::uint64_t seed);
LabeledPool gen_base(std::size_t classes, std::size_t dim, std::size_t per_class, std::uint64_t seed);

/// Row-major d x d rotation for a cluster (identity for cluster 0).
std::vector<double> cluster_transform(const ClusterSpec& spec, std::size_t cluster_id, std::size_t dim);
std::vector<double> random_rotation(std::size_t dim, std::uint64_t seed);
LabeledPool apply_cluster_transform(const LabeledPool& pool, std::size_t cluster_id, const ClusterSpec& spec);

struct Partition {
    std::vector<NodeDataset> shards;
    LabeledPool test;
    // Indices into the input pool, for auditing.
    std::vector<std::vector<std::size_t>> shard_indices;
    std::vector<std::size_t> test_indices;
    std::vector<std::size_t> dropped_indices;
};

inline constexpr double kDefaultTestFraction = 0.1;

/// Holds out a label-stratified test split, then deals each label's remaining
/// samples evenly to the nodes; every node gets the same count per label and
/// leftovers are dropped.
Partition partition(const LabeledPool& pool, std::size_t cluster_id, std::size_t nodes_in_cluster, std::uint64_t seed,
                    double test_fraction = kDefaultTestFraction);

/// Uniform sample of B distinct rows.
Batch sample_batch(const LabeledPool& shard, std::size_t batch_size, Rng& rng);

/// CSV with header `label,f0,...,f{d-1}`.
LabeledPool load_featurized(const std::filesystem::path& path);
void save_featurized(const std::filesystem::path& path, const LabeledPool& pool);

}  // namespace facade
