// Copyright (c) 2026, The facade-sim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace facade {

using Rng = std::mt19937_64;

/// Base class for every error raised by the simulator. The C API maps the
/// concrete subclass onto a status code.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid or inconsistent user configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// File-system and parse failures.
class IoError : public Error {
public:
    using Error::Error;
};

class ParseError : public IoError {
public:
    ParseError(const std::string& what, std::size_t line)
        : IoError(what + " (line " + std::to_string(line) + ")"), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

/// SplitMix64 finalizer; used to derive independent stream seeds from
/// (base seed, stream tag, index) so that every node/round owns its own RNG.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag, std::uint64_t index = 0) noexcept {
    return mix64(mix64(mix64(base) ^ tag) ^ index);
}

// Stream tags for derive_seed.
namespace stream {
inline constexpr std::uint64_t topology = 0x746f706fULL;
inline constexpr std::uint64_t node = 0x6e6f6465ULL;
inline constexpr std::uint64_t init = 0x696e6974ULL;
inline constexpr std::uint64_t data = 0x64617461ULL;
inline constexpr std::uint64_t trial = 0x7472696cULL;
}  // namespace stream

}  // namespace facade
