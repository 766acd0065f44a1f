#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace hdvar {

using Rng = std::mt19937_64;

/// SplitMix64 finaliser; a bijective 64-bit mixer.
std::uint64_t mix64(std::uint64_t x);

/// Derives an independent stream seed from a base seed and a key path
/// (e.g. {T, c, replication, stream}). Pure function of its inputs, so
/// replications can be executed in any order or on any thread.
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> keys);

/// Stream identifiers used when splitting one replication seed.
enum class Stream : std::uint64_t {
  kShocks = 1,      // v_t, the innovation draws scaled by H_t^{1/2}
  kVolatility = 2,  // epsilon_t, the covariance recursion shocks
  kAuxiliary = 3,   // anything else (cone sampling, bootstrap)
};

inline Rng make_stream(std::uint64_t seed, Stream stream) {
  return Rng(derive_seed(seed, {static_cast<std::uint64_t>(stream)}));
}

}  // namespace hdvar
