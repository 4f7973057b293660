// Copyright (c) 2026, The facade-sim Authors
// SPDX-License-Identifier: Apache-2.0

#include "facade/tinynet.hpp"

#include <Eigen/Dense>
#include <bit>
#include <cmath>
#include <istream>
#include <ostream>
#include <string>

namespace facade {

static_assert(std::endian::native == std::endian::little, "serialization assumes a little-endian host");

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstRowMap = Eigen::Map<const RowMatrix>;
using RowMap = Eigen::Map<RowMatrix>;

struct LayerView {
    std::size_t weight_offset;
    std::size_t bias_offset;
    std::size_t in;
    std::size_t out;
};

std::vector<LayerView> layer_views(const Architecture& arch) {
    std::vector<LayerView> views;
    std::size_t offset = 0;
    for (std::size_t l = 0; l < arch.num_layers(); ++l) {
        LayerView v{offset, offset + arch.fan_in(l) * arch.fan_out(l), arch.fan_in(l), arch.fan_out(l)};
        offset = v.bias_offset + v.out;
        views.push_back(v);
    }
    return views;
}

void check_batch(const Architecture& arch, std::size_t num_params, const Batch& batch) {
    if (num_params != arch.param_count())
        throw DimensionMismatch("parameter count " + std::to_string(num_params) + " does not match architecture (" +
                                std::to_string(arch.param_count()) + ")");
    if (batch.dim != arch.input_dim || batch.features.size() != batch.size() * batch.dim)
        throw DimensionMismatch("batch feature dimension does not match architecture input");
    if (batch.size() == 0) throw DimensionMismatch("empty batch");
    for (int y : batch.labels)
        if (y < 0 || static_cast<std::size_t>(y) >= arch.num_classes)
            throw DimensionMismatch("label outside the class range");
}

// Forward pass; returns mean cross-entropy and fills grad when non-empty.
double forward_backward(const Architecture& arch, std::span<const double> params, const Batch& batch,
                        std::span<double> grad) {
    const auto views = layer_views(arch);
    const auto rows = static_cast<Eigen::Index>(batch.size());
    std::vector<RowMatrix> activations;  // inputs to each layer
    activations.reserve(views.size() + 1);
    activations.emplace_back(ConstRowMap(batch.features.data(), rows, static_cast<Eigen::Index>(batch.dim)));

    RowMatrix logits;
    for (std::size_t l = 0; l < views.size(); ++l) {
        const auto& v = views[l];
        ConstRowMap w(params.data() + v.weight_offset, v.out, v.in);
        Eigen::Map<const Eigen::RowVectorXd> b(params.data() + v.bias_offset, v.out);
        RowMatrix z = activations.back() * w.transpose();
        z.rowwise() += b;
        if (l + 1 < views.size())
            activations.emplace_back(z.cwiseMax(0.0));
        else
            logits = std::move(z);
    }

    // Stable log-softmax.
    Eigen::VectorXd row_max = logits.rowwise().maxCoeff();
    RowMatrix shifted = logits.colwise() - row_max;
    RowMatrix probs = shifted.array().exp();
    Eigen::VectorXd sums = probs.rowwise().sum();
    double total = 0.0;
    for (Eigen::Index i = 0; i < rows; ++i) total += std::log(sums(i)) - shifted(i, batch.labels[i]);
    const double mean_loss = total / static_cast<double>(rows);
    if (grad.empty()) return mean_loss;

    probs.array().colwise() /= sums.array();
    RowMatrix delta = probs;
    for (Eigen::Index i = 0; i < rows; ++i) delta(i, batch.labels[i]) -= 1.0;
    delta /= static_cast<double>(rows);

    for (std::size_t l = views.size(); l-- > 0;) {
        const auto& v = views[l];
        const RowMatrix& input = activations[l];
        RowMap gw(grad.data() + v.weight_offset, v.out, v.in);
        Eigen::Map<Eigen::RowVectorXd> gb(grad.data() + v.bias_offset, v.out);
        gw.noalias() = delta.transpose() * input;
        gb = delta.colwise().sum();
        if (l == 0) break;
        ConstRowMap w(params.data() + v.weight_offset, v.out, v.in);
        RowMatrix upstream = delta * w;
        delta = (input.array() > 0.0).select(upstream, 0.0);
    }
    return mean_loss;
}

}  // namespace

ParamVector::ParamVector(std::vector<double> values, std::size_t core_len)
    : values_(std::move(values)), core_len_(core_len) {
    if (core_len_ == 0 || core_len_ >= values_.size())
        throw DimensionMismatch("core/head boundary must leave both parts non-empty");
}

ParamVector assemble(std::span<const double> core, std::span<const double> head) {
    std::vector<double> v;
    v.reserve(core.size() + head.size());
    v.insert(v.end(), core.begin(), core.end());
    v.insert(v.end(), head.begin(), head.end());
    return ParamVector(std::move(v), core.size());
}

CoreHead split(const ParamVector& params) {
    return {std::vector<double>(params.core().begin(), params.core().end()),
            std::vector<double>(params.head().begin(), params.head().end())};
}

void write_params(std::ostream& os, const ParamVector& params) {
    const std::uint64_t header[2] = {params.size(), params.core_len()};
    os.write(reinterpret_cast<const char*>(header), sizeof header);
    os.write(reinterpret_cast<const char*>(params.values().data()),
             static_cast<std::streamsize>(params.size() * sizeof(double)));
    if (!os) throw IoError("failed to write parameter vector");
}

ParamVector read_params(std::istream& is) {
    std::uint64_t header[2] = {0, 0};
    is.read(reinterpret_cast<char*>(header), sizeof header);
    if (!is) throw IoError("truncated parameter header");
    if (header[1] == 0 || header[1] >= header[0] || header[0] > (std::uint64_t{1} << 32))
        throw IoError("corrupt parameter header");
    std::vector<double> values(header[0]);
    is.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(values.size() * sizeof(double)));
    if (!is) throw IoError("truncated parameter payload");
    return ParamVector(std::move(values), header[1]);
}

void Architecture::validate() const {
    if (input_dim < 1 || num_classes < 1) throw ConfigError("architecture dims must be >= 1");
    if (hidden_dims.empty()) throw ConfigError("architecture needs at least one hidden layer");
    for (auto h : hidden_dims)
        if (h < 1) throw ConfigError("hidden layer widths must be >= 1");
}

std::size_t Architecture::fan_in(std::size_t layer) const {
    return layer == 0 ? input_dim : hidden_dims[layer - 1];
}

std::size_t Architecture::fan_out(std::size_t layer) const {
    return layer < hidden_dims.size() ? hidden_dims[layer] : num_classes;
}

std::size_t Architecture::param_count() const {
    std::size_t total = 0;
    for (std::size_t l = 0; l < num_layers(); ++l) total += fan_in(l) * fan_out(l) + fan_out(l);
    return total;
}

std::size_t Architecture::core_len() const {
    const std::size_t last = num_layers() - 1;
    return param_count() - (fan_in(last) * fan_out(last) + fan_out(last));
}

ParamVector init_params(const Architecture& arch, std::uint64_t seed) {
    arch.validate();
    Rng rng(seed);
    std::vector<double> values;
    values.reserve(arch.param_count());
    for (std::size_t l = 0; l < arch.num_layers(); ++l) {
        const double a = std::sqrt(6.0 / static_cast<double>(arch.fan_in(l) + arch.fan_out(l)));
        std::uniform_real_distribution<double> dist(-a, a);
        const std::size_t count = arch.fan_in(l) * arch.fan_out(l) + arch.fan_out(l);
        for (std::size_t i = 0; i < count; ++i) values.push_back(dist(rng));
    }
    return ParamVector(std::move(values), arch.core_len());
}

LossGrad loss_and_grad(const Architecture& arch, const ParamVector& params, const Batch& batch) {
    check_batch(arch, params.size(), batch);
    LossGrad out{0.0, ParamVector(std::vector<double>(params.size(), 0.0), params.core_len())};
    out.loss = forward_backward(arch, params.values(), batch, out.grad.values());
    return out;
}

double loss_and_grad(const Architecture& arch, std::span<const double> params, const Batch& batch,
                     std::span<double> grad) {
    check_batch(arch, params.size(), batch);
    if (grad.size() != params.size()) throw DimensionMismatch("gradient buffer length does not match parameters");
    return forward_backward(arch, params, batch, grad);
}

double loss(const Architecture& arch, std::span<const double> params, const Batch& batch) {
    check_batch(arch, params.size(), batch);
    return forward_backward(arch, params, batch, {});
}

ParamVector sgd_steps(const Architecture& arch, const ParamVector& params, const Batch& batch, double eta, int steps) {
    check_batch(arch, params.size(), batch);
    ParamVector out = params;
    std::vector<double> grad(params.size());
    for (int h = 0; h < steps; ++h) {
        forward_backward(arch, out.values(), batch, grad);
        for (std::size_t i = 0; i < grad.size(); ++i) out[i] -= eta * grad[i];
    }
    return out;
}

std::vector<int> predict(const Architecture& arch, std::span<const double> params, std::span<const double> features,
                         std::size_t dim) {
    if (dim != arch.input_dim || params.size() != arch.param_count() || features.size() % dim != 0)
        throw DimensionMismatch("predict: dimensions do not match architecture");
    const auto views = layer_views(arch);
    const auto rows = static_cast<Eigen::Index>(features.size() / dim);
    RowMatrix act = ConstRowMap(features.data(), rows, static_cast<Eigen::Index>(dim));
    for (std::size_t l = 0; l < views.size(); ++l) {
        const auto& v = views[l];
        ConstRowMap w(params.data() + v.weight_offset, v.out, v.in);
        Eigen::Map<const Eigen::RowVectorXd> b(params.data() + v.bias_offset, v.out);
        RowMatrix z = act * w.transpose();
        z.rowwise() += b;
        act = l + 1 < views.size() ? RowMatrix(z.cwiseMax(0.0)) : z;
    }
    std::vector<int> labels(static_cast<std::size_t>(rows));
    for (Eigen::Index i = 0; i < rows; ++i) {
        Eigen::Index arg = 0;
        act.row(i).maxCoeff(&arg);
        labels[static_cast<std::size_t>(i)] = static_cast<int>(arg);
    }
    return labels;
}

}  // namespace facade
