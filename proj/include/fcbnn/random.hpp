#pragma once

// Seeded randomness with output that does not depend on the standard
// library's distribution implementations, so reports are byte-identical
// across toolchains for the same seed.

#include <cstdint>
#include <random>
#include <vector>

#include "fcbnn/core.hpp"

namespace fcbnn {

// SplitMix64 finalizer applied to base + golden-ratio multiple of index.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Uniform integer in [lo, hi].
  Index integer(Index lo, Index hi);
  double normal();
  Sign sign() { return (next() >> 63) ? Sign{1} : Sign{-1}; }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

SignVector random_signs(Rng& rng, Index n);
SignMatrix random_sign_matrix(Rng& rng, Index rows, Index cols);

enum class OutputDistribution { standard_normal, uniform_unit };

struct RandomBnnShape {
  Index input_dim = 2;
  std::vector<Index> widths{8};
  double threshold_lo = -3.0;
  double threshold_hi = 3.0;
  OutputDistribution output = OutputDistribution::standard_normal;
};

// ±1 hidden weights, thresholds uniform in [threshold_lo, threshold_hi],
// real output weights drawn from shape.output.
Bnn random_bnn(Rng& rng, const RandomBnnShape& shape);

}  // namespace fcbnn
