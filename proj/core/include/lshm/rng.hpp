#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace lshm {

// Deterministic random source. The raw engine is std::mt19937_64 (stable
// across platforms by the standard); the variate transforms are local
// because the std::*_distribution wrappers are not portable.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(mix(seed)) {}

  // Independent stream per (seed, stream) pair; used to give each simulated
  // lifetime its own stream so datasets are stable under reordering.
  static Rng for_stream(std::uint64_t seed, std::uint64_t stream);

  // Uniform on [0, 1) with 53 random bits.
  double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller, one spare cached.
  double normal();

  // Index k with probability probs[k]; probabilities must be nonnegative
  // and sum to ~1 (validated where the matrices are configured).
  std::size_t categorical(std::span<const double> probs);

 private:
  static std::uint64_t mix(std::uint64_t x);  // splitmix64 finalizer

  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace lshm
