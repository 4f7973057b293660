// Copyright (c) 2026, The facade-sim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <vector>

namespace facade {

/// One test prediction: ground truth, model output and the sensitive group
/// (a cluster id, or 0 = majority / 1 = minority).
struct PredictionRecord {
    int truth = 0;
    int predicted = 0;
    std::size_t group = 0;

    friend bool operator==(const PredictionRecord&, const PredictionRecord&) = default;
};

using PredictionLog = std::vector<PredictionRecord>;

}  // namespace facade
