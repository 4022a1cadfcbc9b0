#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace idcs {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; used to decorrelate derived seeds.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// FNV-1a hash of a tag, folded through mix64.
std::uint64_t hash_tag(std::string_view tag) noexcept;

/// Seed for a stochastic component, as a pure function of a parent seed and
/// an ordered list of integer coordinates (model id, rate index, iteration,
/// instance, ...). Re-running a single cell reproduces its streams exactly.
std::uint64_t derive_seed(std::uint64_t parent, std::initializer_list<std::uint64_t> path) noexcept;

inline std::uint64_t derive_seed(std::uint64_t parent, std::string_view tag,
                                 std::initializer_list<std::uint64_t> path = {}) noexcept {
    return derive_seed(mix64(parent ^ hash_tag(tag)), path);
}

}  // namespace idcs
