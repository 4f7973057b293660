// Copyright (c) 2026, The facade-sim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <utility>
#include <vector>

#include "facade/common.hpp"

namespace facade {

class InfeasibleTopology : public Error {
public:
    using Error::Error;
};

class RetryExhausted : public Error {
public:
    using Error::Error;
};

/// Undirected communication graph for one round. Edges are stored as
/// unordered pairs (u < v), sorted; adjacency lists are sorted as well.
class Topology {
public:
    using Edge = std::pair<std::size_t, std::size_t>;

    Topology(std::size_t n, std::size_t degree, std::vector<Edge> edges, std::uint64_t round_index = 0);

    std::size_t size() const noexcept { return n_; }
    std::size_t degree() const noexcept { return r_; }
    std::uint64_t round_index() const noexcept { return round_; }
    void set_round_index(std::uint64_t t) noexcept { round_ = t; }

    const std::vector<Edge>& edges() const noexcept { return edges_; }

    /// Sorted neighbor list of node i. Throws std::out_of_range for i >= n.
    const std::vector<std::size_t>& neighbors(std::size_t i) const;

    std::size_t node_degree(std::size_t i) const { return neighbors(i).size(); }
    bool is_connected() const;

    /// Writes one `i j` pair per line in sorted order.
    void write_edge_list(std::ostream& os) const;

    friend bool operator==(const Topology& a, const Topology& b) {
        return a.n_ == b.n_ && a.r_ == b.r_ && a.edges_ == b.edges_;
    }

private:
    std::size_t n_;
    std::size_t r_;
    std::uint64_t round_;
    std::vector<Edge> edges_;
    std::vector<std::vector<std::size_t>> adj_;
};

inline constexpr int kMaxPairingRestarts = 1000;

/// Random simple r-regular graph from the pairing (configuration) model with a
/// full restart whenever a self-loop or multi-edge appears.
Topology gen_r_regular(std::size_t n, std::size_t r, std::uint64_t seed);

/// Circulant ring: node i linked to i±1..i±r/2 (mod n).
Topology gen_static_ring(std::size_t n, std::size_t r);

}  // namespace facade
