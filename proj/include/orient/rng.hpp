#pragma once

#include <cstdint>
#include <random>

namespace orient {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; used to derive independent, order-free rng streams.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30U)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27U)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31U);
}

/// Deterministic stream keyed by (seed, a, b). Workers that draw from
/// make_stream(seed, epoch, sample) see the same numbers in any schedule.
inline Rng make_stream(std::uint64_t seed, std::uint64_t a = 0, std::uint64_t b = 0) {
  return Rng(mix64(mix64(mix64(seed) ^ a) ^ (b * 0xD1B54A32D192ED03ULL)));
}

}  // namespace orient
