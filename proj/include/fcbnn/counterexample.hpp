#pragma once

// Numerical certification that no single-hidden-layer FC-BNN approximates
// the bump f(x) = exp(1 - 1/(1 - 4 x1^2)) on [-1,1]^2 better than 1/2.
//
// Each neuron sigma_b(w1 x1 + w2 x2) takes equal sums on {b1, b2} and on
// {a1, a2}, hence so does any output layer. Since f is 1 on the a-points and
// 0 on the b-points, 2 = (1-O(a1)) + (1-O(a2)) + O(b1) + O(b2) <= 4M.

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "fcbnn/core.hpp"

namespace fcbnn {

template <typename Scalar>
Scalar bump(Scalar x1, Scalar /*x2*/) {
  using std::abs;
  using std::exp;
  if (abs(x1) >= Scalar(0.5)) return Scalar(0);
  return exp(Scalar(1) - Scalar(1) / (Scalar(1) - Scalar(4) * x1 * x1));
}

// sup |d bump / d x1|, which is the bump's Euclidean Lipschitz constant.
double bump_lipschitz_constant();

struct CriticalQuad {
  // f = 1 on the a-points, f = 0 on the b-points.
  static constexpr std::array<double, 2> a1{0.0, 1.0};
  static constexpr std::array<double, 2> a2{0.0, -1.0};
  static constexpr std::array<double, 2> b1{1.0, 0.0};
  static constexpr std::array<double, 2> b2{-1.0, 0.0};
};

// [o(b1) + o(b2)] - [o(a1) + o(a2)] for o(x) = sigma_b(w1 x1 + w2 x2).
double neuron_symmetry_residual(Sign w1, Sign w2, double b);

// The same residual for a whole network with input_dim 2.
double critical_residual(const Bnn& bnn);

// M = max(|1 - O(a1)|, |1 - O(a2)|, |O(b1)|, |O(b2)|). Requires one hidden
// layer and input_dim 2 (ArchitectureError otherwise).
double lower_bound_certificate(const Bnn& bnn);

// The critical points lie in {-1,0,1}^2, so the certificate is unchanged on
// the ternary input space.
double tertiary_check(const Bnn& bnn);

struct CertificationRow {
  std::uint64_t trial = 0;
  Index width = 0;
  std::uint64_t seed = 0;
  double m = 0.0;
};

struct Certification {
  std::vector<CertificationRow> rows;
  double min_m = 0.0;
};

// Fuzzes random single-hidden-layer networks: widths uniform in
// [1, max_width], thresholds uniform in [-3, 3], standard normal output
// weights. Trial t uses seed derive_seed(base_seed, t).
Certification certify_random_networks(std::uint64_t trials, std::uint64_t base_seed,
                                      Index max_width = 64);

}  // namespace fcbnn
