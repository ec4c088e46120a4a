#include "fcbnn/random.hpp"

#include <cmath>
#include <numbers>

namespace fcbnn {

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
  std::uint64_t z = base + (index + 1) * 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Index Rng::integer(Index lo, Index hi) {
  if (hi < lo) throw InvalidArgument("Rng::integer: empty range");
  const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
  // Rejection sampling keeps the draw unbiased.
  const std::uint64_t limit = span == 0 ? 0 : (~std::uint64_t{0} / span) * span;
  std::uint64_t r = next();
  while (limit != 0 && r >= limit) r = next();
  return lo + static_cast<Index>(span == 0 ? r : r % span);
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

SignVector random_signs(Rng& rng, Index n) {
  SignVector v(n);
  for (Index i = 0; i < n; ++i) v(i) = rng.sign();
  return v;
}

SignMatrix random_sign_matrix(Rng& rng, Index rows, Index cols) {
  SignMatrix m(rows, cols);
  for (Index j = 0; j < rows; ++j) {
    for (Index i = 0; i < cols; ++i) m(j, i) = rng.sign();
  }
  return m;
}

Bnn random_bnn(Rng& rng, const RandomBnnShape& shape) {
  if (shape.widths.empty()) throw InvalidArgument("random_bnn: need at least one hidden width");
  std::vector<HiddenLayer> hidden;
  Index fan_in = shape.input_dim;
  for (const Index width : shape.widths) {
    Eigen::VectorXd thresholds(width);
    for (Index j = 0; j < width; ++j) thresholds(j) = rng.uniform(shape.threshold_lo, shape.threshold_hi);
    hidden.emplace_back(random_sign_matrix(rng, width, fan_in), std::move(thresholds));
    fan_in = width;
  }
  Eigen::VectorXd out(fan_in);
  for (Index i = 0; i < fan_in; ++i) {
    out(i) = shape.output == OutputDistribution::standard_normal ? rng.normal() : rng.uniform(-1.0, 1.0);
  }
  return Bnn(shape.input_dim, std::move(hidden), RealWeights{std::move(out)});
}

}  // namespace fcbnn
