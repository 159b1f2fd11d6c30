#pragma once

#include <cstdint>
#include <random>

namespace asen {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Child seed for an independent stream `stream` under `seed`. Streams with
/// different indices are decorrelated, so per-learner or per-feature jobs can
/// run in any order and still draw identical numbers.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept;

inline Rng make_rng(std::uint64_t seed) { return Rng{mix64(seed)}; }

/// FNV-1a over raw bytes; used for split fingerprints.
std::uint64_t fnv1a64(const void* data, std::size_t size, std::uint64_t basis = 14695981039346656037ULL) noexcept;

} // namespace asen
