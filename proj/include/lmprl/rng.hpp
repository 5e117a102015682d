#pragma once

#include <cstdint>
#include <random>

namespace lmprl {

using Rng = std::mt19937_64;

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Derives an independent child seed from a parent seed and a stream index.
///
/// Seeds form a tree: master -> scenario -> trial -> {environment, method k}.
/// Each level is `split_seed(parent, index)`, so any stream can be rebuilt
/// from the master seed and its path alone.
constexpr std::uint64_t split_seed(std::uint64_t parent, std::uint64_t index) noexcept {
    return mix64(mix64(parent) ^ mix64(index + 0x632be59bd9b4e019ULL));
}

inline Rng make_rng(std::uint64_t seed) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
    return Rng(seq);
}

} // namespace lmprl
