// Copyright (c) 2026, The facade-sim Authors
// SPDX-License-Identifier: Apache-2.0

#include "facade/topology.hpp"

#include <algorithm>
#include <ostream>
#include <queue>
#include <set>
#include <stdexcept>
#include <string>

namespace facade {

Topology::Topology(std::size_t n, std::size_t degree, std::vector<Edge> edges, std::uint64_t round_index)
    : n_(n), r_(degree), round_(round_index), edges_(std::move(edges)), adj_(n) {
    for (auto& [u, v] : edges_) {
        if (u > v) std::swap(u, v);
        if (u == v || v >= n_) throw std::invalid_argument("topology: invalid edge");
    }
    std::sort(edges_.begin(), edges_.end());
    if (std::adjacent_find(edges_.begin(), edges_.end()) != edges_.end())
        throw std::invalid_argument("topology: duplicate edge");
    for (const auto& [u, v] : edges_) {
        adj_[u].push_back(v);
        adj_[v].push_back(u);
    }
    for (auto& a : adj_) std::sort(a.begin(), a.end());
}

const std::vector<std::size_t>& Topology::neighbors(std::size_t i) const {
    if (i >= n_)
        throw std::out_of_range("topology: node index " + std::to_string(i) + " out of range");
    return adj_[i];
}

bool Topology::is_connected() const {
    if (n_ == 0) return true;
    std::vector<bool> seen(n_, false);
    std::queue<std::size_t> q;
    q.push(0);
    seen[0] = true;
    std::size_t count = 1;
    while (!q.empty()) {
        auto u = q.front();
        q.pop();
        for (auto v : adj_[u]) {
            if (!seen[v]) {
                seen[v] = true;
                ++count;
                q.push(v);
            }
        }
    }
    return count == n_;
}

void Topology::write_edge_list(std::ostream& os) const {
    for (const auto& [u, v] : edges_) os << u << ' ' << v << '\n';
}

Topology gen_r_regular(std::size_t n, std::size_t r, std::uint64_t seed) {
    if (n < 2 || r < 1 || r >= n)
        throw InfeasibleTopology("r-regular graph needs n >= 2 and 1 <= r < n");
    if ((n * r) % 2 != 0)
        throw InfeasibleTopology("r-regular graph needs n*r even");

    Rng rng(seed);
    std::vector<std::size_t> stubs;
    stubs.reserve(n * r);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t s = 0; s < r; ++s) stubs.push_back(i);

    std::vector<Topology::Edge> edges;
    std::set<Topology::Edge> seen;
    for (int attempt = 0; attempt < kMaxPairingRestarts; ++attempt) {
        std::shuffle(stubs.begin(), stubs.end(), rng);
        edges.clear();
        seen.clear();
        bool simple = true;
        for (std::size_t p = 0; p < stubs.size(); p += 2) {
            auto u = std::min(stubs[p], stubs[p + 1]);
            auto v = std::max(stubs[p], stubs[p + 1]);
            if (u == v || !seen.emplace(u, v).second) {
                simple = false;
                break;
            }
            edges.emplace_back(u, v);
        }
        if (simple) return Topology(n, r, std::move(edges));
    }
    throw RetryExhausted("no simple " + std::to_string(r) + "-regular graph on " + std::to_string(n) +
                         " nodes after " + std::to_string(kMaxPairingRestarts) + " pairing attempts");
}

Topology gen_static_ring(std::size_t n, std::size_t r) {
    if (r % 2 != 0) throw InfeasibleTopology("ring topology needs an even degree");
    if (r >= n) throw InfeasibleTopology("ring topology needs r < n");
    std::vector<Topology::Edge> edges;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t s = 1; s <= r / 2; ++s) {
            std::size_t j = (i + s) % n;
            edges.emplace_back(std::min(i, j), std::max(i, j));
        }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    return Topology(n, r, std::move(edges));
}

}  // namespace facade
