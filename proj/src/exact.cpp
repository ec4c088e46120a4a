#include "fcbnn/exact.hpp"

#include <cmath>

namespace fcbnn {

namespace {

std::string format_input(const SignVector& x) {
  std::string s = "(";
  for (Index k = 0; k < x.size(); ++k) {
    if (k) s += ",";
    s += x(k) > 0 ? "1" : "-1";
  }
  return s + ")";
}

void check_dim(Index dim) {
  if (dim < 1 || dim > kMaxTableDim) {
    throw ValidationError("table dimension " + std::to_string(dim) + " outside [1, " +
                          std::to_string(kMaxTableDim) + "]");
  }
}

}  // namespace

SignVector canonical_input(Index dim, Index j) {
  SignVector x(dim);
  for (Index k = 0; k < dim; ++k) x(k) = (j >> (dim - 1 - k)) & 1 ? 1 : -1;
  return x;
}

Index canonical_index(const Eigen::Ref<const SignVector>& x) {
  Index j = 0;
  for (Index k = 0; k < x.size(); ++k) {
    if (x(k) != 1 && x(k) != -1) throw ValidationError("input coordinate is not +1 or -1");
    j = (j << 1) | (x(k) > 0 ? 1 : 0);
  }
  return j;
}

TruthTable::TruthTable(Index dim, Eigen::VectorXd values) : dim_(dim), values_(std::move(values)) {
  check_dim(dim_);
  if (values_.size() != (Index{1} << dim_)) {
    throw ValidationError("truth table of dimension " + std::to_string(dim_) + " needs " +
                          std::to_string(Index{1} << dim_) + " values, got " +
                          std::to_string(values_.size()));
  }
  for (Index j = 0; j < values_.size(); ++j) {
    if (!std::isfinite(values_(j))) {
      throw ValidationError("value for input " + format_input(canonical_input(dim_, j)) + " is not finite");
    }
  }
}

TruthTable TruthTable::from_entries(Index dim, const std::vector<std::pair<SignVector, double>>& entries) {
  check_dim(dim);
  const Index n = Index{1} << dim;
  Eigen::VectorXd values(n);
  std::vector<bool> seen(static_cast<std::size_t>(n), false);
  for (const auto& [x, v] : entries) {
    if (x.size() != dim) {
      throw ValidationError("entry " + format_input(x) + " has length " + std::to_string(x.size()) +
                            ", expected " + std::to_string(dim));
    }
    const Index j = canonical_index(x);
    if (seen[static_cast<std::size_t>(j)]) throw ValidationError("duplicate input " + format_input(x));
    seen[static_cast<std::size_t>(j)] = true;
    values(j) = v;
  }
  for (Index j = 0; j < n; ++j) {
    if (!seen[static_cast<std::size_t>(j)]) {
      throw ValidationError("missing input " + format_input(canonical_input(dim, j)));
    }
  }
  return TruthTable(dim, std::move(values));
}

SignVector TruthTable::input(Index j) const {
  if (j < 0 || j >= size()) throw DimensionError("truth table index out of range");
  return canonical_input(dim_, j);
}

HiddenLayer build_matching_layer(Index dim) {
  check_dim(dim);
  const Index n = Index{1} << dim;
  SignMatrix weights(n, dim);
  for (Index j = 0; j < n; ++j) weights.row(j) = canonical_input(dim, j).transpose();
  // Pre-activation is d - 2 * hamming distance, so only an exact match exceeds d - 1.
  return HiddenLayer(std::move(weights), Eigen::VectorXd::Constant(n, static_cast<double>(dim - 1)));
}

Bnn construct_exact(const TruthTable& table, const ExactOptions& options) {
  const Index d = table.dim();
  if (d > options.max_dim) {
    throw CapacityError("construct_exact: dimension " + std::to_string(d) + " exceeds limit " +
                        std::to_string(options.max_dim) + " (2^d hidden neurons)");
  }
  if (d >= 2) {
    return Bnn(d, {build_matching_layer(d)}, RealWeights{solve_output_weights(table.values())});
  }

  // d = 1: matching neurons for (-1) and (+1) plus one neuron that is always
  // on (pre-activation >= -1 > -d-1).
  SignMatrix weights(3, 1);
  weights << -1, 1, 1;
  Eigen::VectorXd thresholds(3);
  thresholds << 0.0, 0.0, -2.0;
  const double f1 = table.value(0);
  const double f2 = table.value(1);
  Eigen::VectorXd w(3);
  w << (f1 - f2) / 4.0, -(f1 - f2) / 4.0, (f1 + f2) / 2.0;
  return Bnn(1, {HiddenLayer(std::move(weights), std::move(thresholds))}, RealWeights{std::move(w)});
}

}  // namespace fcbnn
