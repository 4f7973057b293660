// Copyright (c) 2026, The facade-sim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "facade/common.hpp"

namespace facade {

/// Flat parameter array with a core/head boundary. The head is the suffix
/// [core_len, size), the core the prefix.
class ParamVector {
public:
    ParamVector() = default;
    ParamVector(std::vector<double> values, std::size_t core_len);

    std::size_t size() const noexcept { return values_.size(); }
    std::size_t core_len() const noexcept { return core_len_; }
    std::size_t head_len() const noexcept { return values_.size() - core_len_; }

    std::span<double> values() noexcept { return values_; }
    std::span<const double> values() const noexcept { return values_; }
    std::span<double> core() noexcept { return values().first(core_len_); }
    std::span<const double> core() const noexcept { return values().first(core_len_); }
    std::span<double> head() noexcept { return values().subspan(core_len_); }
    std::span<const double> head() const noexcept { return values().subspan(core_len_); }

    double& operator[](std::size_t i) noexcept { return values_[i]; }
    double operator[](std::size_t i) const noexcept { return values_[i]; }

    friend bool operator==(const ParamVector&, const ParamVector&) = default;

private:
    std::vector<double> values_;
    std::size_t core_len_ = 0;
};

ParamVector assemble(std::span<const double> core, std::span<const double> head);

struct CoreHead {
    std::vector<double> core;
    std::vector<double> head;
};
CoreHead split(const ParamVector& params);

/// Little-endian layout: u64 total_len, u64 core_len, then total_len f64 values.
void write_params(std::ostream& os, const ParamVector& params);
ParamVector read_params(std::istream& is);
inline constexpr std::size_t kParamHeaderBytes = 16;
constexpr std::size_t serialized_bytes(std::size_t num_values) noexcept {
    return kParamHeaderBytes + 8 * num_values;
}

/// Multi-layer perceptron with rectifier activations. The head is the final
/// linear layer (weights then bias); everything before it is the core.
struct Architecture {
    std::size_t input_dim = 1;
    std::vector<std::size_t> hidden_dims;
    std::size_t num_classes = 2;

    void validate() const;
    std::size_t param_count() const;
    std::size_t core_len() const;
    std::size_t head_len() const { return param_count() - core_len(); }
    std::size_t num_layers() const { return hidden_dims.size() + 1; }
    std::size_t fan_in(std::size_t layer) const;
    std::size_t fan_out(std::size_t layer) const;

    friend bool operator==(const Architecture&, const Architecture&) = default;
};

/// B samples, row-major features.
struct Batch {
    std::size_t dim = 0;
    std::vector<double> features;
    std::vector<int> labels;

    std::size_t size() const noexcept { return labels.size(); }
    std::span<const double> row(std::size_t i) const { return std::span(features).subspan(i * dim, dim); }
};

/// Glorot-uniform initialization: every value of layer l drawn from
/// U[-a, a], a = sqrt(6 / (fan_in + fan_out)).
ParamVector init_params(const Architecture& arch, std::uint64_t seed);

struct LossGrad {
    double loss = 0.0;
    ParamVector grad;
};

/// Mean softmax cross-entropy over the batch and its gradient.
LossGrad loss_and_grad(const Architecture& arch, const ParamVector& params, const Batch& batch);
double loss(const Architecture& arch, std::span<const double> params, const Batch& batch);
/// Span form: writes into grad (length param_count) and returns the loss.
double loss_and_grad(const Architecture& arch, std::span<const double> params, const Batch& batch,
                     std::span<double> grad);

/// H plain SGD steps on one batch. The input is not modified.
ParamVector sgd_steps(const Architecture& arch, const ParamVector& params, const Batch& batch, double eta, int steps);

/// Argmax class for each row of a row-major feature matrix.
std::vector<int> predict(const Architecture& arch, std::span<const double> params, std::span<const double> features,
                         std::size_t dim);

}  // namespace facade
