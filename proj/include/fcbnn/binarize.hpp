#pragma once

// Replacing real output weights by ±1 weights and a scale alpha = 1/q.
//
// Every weight is rounded to z_i / q over one shared power-of-two q chosen so
// that n * k_bound / (2q) < eps; then hidden neuron i is duplicated |z_i|
// times with output sign sign(z_i). Since each activation is bounded by
// k_bound, the output moves by at most sum_i k_bound |w_i - z_i/q| < eps.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fcbnn/core.hpp"

namespace fcbnn {

struct RationalizedOutput {
  std::vector<std::int64_t> numerators;
  std::int64_t denominator = 1;

  double alpha() const noexcept { return 1.0 / static_cast<double>(denominator); }
  // Number of hidden copies the binarized layer needs, sum |z_i|.
  std::int64_t expansion() const;
};

// q is the smallest power of two with n * k_bound / (2q) < epsilon, and
// z_i = round_half_away(w_i * q). Throws InvalidArgument for epsilon <= 0 or
// k_bound <= 0, CapacityError if q or a numerator would overflow.
RationalizedOutput rationalize_weights(const Eigen::Ref<const Eigen::VectorXd>& weights, double epsilon,
                                       double k_bound = 1.0);

struct BinarizedNetwork {
  Bnn network;
  RationalizedOutput rationalized;
  std::optional<std::string> warning;
};

// Same hidden layers except the last, whose neuron i appears |z_i| times
// (dropped for z_i = 0). If every z_i is 0 the result is an explicit
// constant-zero network: two copies of neuron 0 with signs +1 and -1.
// A network that already has a binary output is returned unchanged with a
// warning.
BinarizedNetwork binarize_output(const Bnn& bnn, double epsilon, double k_bound = 1.0);

// RealWeights output with weights sign_i * alpha; a real output is returned as is.
Bnn fold_scale(const Bnn& bnn);

}  // namespace fcbnn
