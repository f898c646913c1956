#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string_view>

namespace gatetrain {

using Rng = std::mt19937_64;

// The standard distributions are implementation-defined, so everything that
// feeds a reproducible result goes through the helpers below instead.

/// Seed for a named sub-stream ("init", "shuffle", "subset", ...) of a run seed.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream);

inline Rng make_rng(std::uint64_t seed, std::string_view stream) {
  return Rng(derive_seed(seed, stream));
}

/// Uniform in [0, 1) with 53 random bits.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(Rng& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

/// Unbiased integer in [0, n). n must be > 0.
std::size_t uniform_index(Rng& rng, std::size_t n);

/// Box-Muller, one draw per call.
double standard_normal(Rng& rng);

/// Fisher-Yates.
void shuffle(std::span<std::size_t> values, Rng& rng);

}  // namespace gatetrain
