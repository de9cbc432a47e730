#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <vector>

namespace ecx {

using Rng = std::mt19937_64;

/// Generator for an independent substream identified by (seed, keys...).
///
/// Every stochastic routine derives its generator from the master seed and
/// the identity of the unit of work (replicate, bootstrap chunk, target), so
/// results never depend on scheduling or worker count.
inline Rng substream(std::uint64_t seed, std::span<const std::uint64_t> keys) {
    std::vector<std::uint32_t> words;
    words.reserve(2 + 2 * keys.size());
    auto push = [&](std::uint64_t v) {
        words.push_back(static_cast<std::uint32_t>(v));
        words.push_back(static_cast<std::uint32_t>(v >> 32));
    };
    push(seed);
    for (auto k : keys) push(k);
    std::seed_seq seq(words.begin(), words.end());
    return Rng(seq);
}

inline Rng substream(std::uint64_t seed, std::initializer_list<std::uint64_t> keys = {}) {
    return substream(seed, std::span<const std::uint64_t>(keys.begin(), keys.size()));
}

/// Uniform double in [0, 1).
inline double uniform01(Rng& rng) { return std::generate_canonical<double, 64>(rng); }

}  // namespace ecx
