#pragma once

// Exact single-hidden-layer synthesis for functions on {-1,+1}^d.
//
// The hidden layer has one "matching" neuron per input pattern x^j (weights
// x^j, threshold d-1), so input x^j fires neuron j alone. The output weights
// then solve (2I - 11^T) w = f, which has the closed form
//   w = f/2 + sum(f) / (2 (2 - n)),   n = 2^d >= 4.
// d = 1 gets an extra always-on neuron instead, since n = 2 is singular.

#include <utility>
#include <vector>

#include "fcbnn/core.hpp"

namespace fcbnn {

// Values of f on {-1,+1}^d in canonical order: lexicographic with -1 < +1,
// i.e. entry j has coordinate k equal to +1 iff bit (d-1-k) of j is set.
class TruthTable {
 public:
  // values must already be in canonical order and have 2^d finite entries.
  TruthTable(Index dim, Eigen::VectorXd values);

  // Any order; rejects missing, duplicated, non-±1 or non-finite entries.
  static TruthTable from_entries(Index dim, const std::vector<std::pair<SignVector, double>>& entries);

  Index dim() const noexcept { return dim_; }
  Index size() const noexcept { return values_.size(); }
  const Eigen::VectorXd& values() const noexcept { return values_; }
  double value(Index j) const { return values_(j); }
  SignVector input(Index j) const;

 private:
  Index dim_;
  Eigen::VectorXd values_;
};

// Maximum dimension a table or matching layer may have (2^d neurons).
inline constexpr Index kMaxTableDim = 30;

SignVector canonical_input(Index dim, Index j);
Index canonical_index(const Eigen::Ref<const SignVector>& x);

HiddenLayer build_matching_layer(Index dim);
inline HiddenLayer build_matching_layer(const TruthTable& table) { return build_matching_layer(table.dim()); }

// Unique w with w_j - sum_{i != j} w_i = values_j. Requires n >= 3.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> solve_output_weights(
    const Eigen::MatrixBase<Derived>& values) {
  using Scalar = typename Derived::Scalar;
  const Index n = values.size();
  if (n < 3) {
    throw UnsupportedSize("solve_output_weights: system 2I - 11^T is singular or unsolved for n = " +
                          std::to_string(n) + " (< 3)");
  }
  const Scalar shift = values.sum() / (Scalar(2) * Scalar(2 - n));
  return ((values / Scalar(2)).array() + shift).matrix();
}

struct ExactOptions {
  Index max_dim = 20;
};

Bnn construct_exact(const TruthTable& table, const ExactOptions& options = {});

}  // namespace fcbnn
