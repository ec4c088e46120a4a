#include "fcbnn/binarize.hpp"

#include <cmath>
#include <cstdlib>

namespace fcbnn {

std::int64_t RationalizedOutput::expansion() const {
  std::int64_t total = 0;
  for (const auto z : numerators) total += std::llabs(z);
  return total;
}

RationalizedOutput rationalize_weights(const Eigen::Ref<const Eigen::VectorXd>& weights, double epsilon,
                                       double k_bound) {
  if (!std::isfinite(epsilon) || !(epsilon > 0.0)) throw InvalidArgument("epsilon must be positive and finite");
  if (!std::isfinite(k_bound) || !(k_bound > 0.0)) throw InvalidArgument("k_bound must be positive and finite");
  if (!weights.allFinite()) throw InvalidArgument("weights must be finite");
  const auto n = static_cast<double>(weights.size());

  RationalizedOutput r;
  int exponent = 0;
  while (!(n * k_bound / std::ldexp(2.0, exponent) < epsilon)) {
    if (++exponent > 62) throw CapacityError("rationalize_weights: denominator would exceed 2^62");
  }
  r.denominator = std::int64_t{1} << exponent;
  r.numerators.reserve(weights.size());
  for (Index i = 0; i < weights.size(); ++i) {
    const double scaled = std::ldexp(weights(i), exponent);
    if (std::abs(scaled) >= 0x1.0p62) throw CapacityError("rationalize_weights: numerator overflow");
    r.numerators.push_back(std::llround(scaled));
  }
  return r;
}

BinarizedNetwork binarize_output(const Bnn& bnn, double epsilon, double k_bound) {
  if (bnn.has_binary_output()) {
    const auto& bin = std::get<BinaryScaled>(bnn.output());
    RationalizedOutput r;
    r.denominator = bin.denominator;
    for (Index i = 0; i < bin.signs.size(); ++i) r.numerators.push_back(bin.signs(i));
    return {bnn, std::move(r), "output layer is already binarized; network left unchanged"};
  }
  const auto& weights = std::get<RealWeights>(bnn.output()).weights;
  RationalizedOutput r = rationalize_weights(weights, epsilon, k_bound);

  const HiddenLayer& last = bnn.hidden().back();
  const std::int64_t copies = r.expansion();
  std::vector<Index> source;
  std::vector<Sign> signs;
  if (copies == 0) {
    source = {0, 0};
    signs = {1, -1};
  } else {
    source.reserve(static_cast<std::size_t>(copies));
    signs.reserve(static_cast<std::size_t>(copies));
    for (std::size_t i = 0; i < r.numerators.size(); ++i) {
      const std::int64_t z = r.numerators[i];
      for (std::int64_t c = 0; c < std::llabs(z); ++c) {
        source.push_back(static_cast<Index>(i));
        signs.push_back(z > 0 ? Sign{1} : Sign{-1});
      }
    }
  }

  const auto width = static_cast<Index>(source.size());
  SignMatrix w(width, last.fan_in());
  Eigen::VectorXd thresholds(width);
  SignVector out(width);
  for (Index k = 0; k < width; ++k) {
    const Index i = source[static_cast<std::size_t>(k)];
    w.row(k) = last.weights().row(i);
    thresholds(k) = last.thresholds()(i);
    out(k) = signs[static_cast<std::size_t>(k)];
  }
  std::vector<HiddenLayer> hidden(bnn.hidden().begin(), bnn.hidden().end() - 1);
  hidden.emplace_back(std::move(w), std::move(thresholds));
  BinaryScaled output{std::move(out), r.denominator};
  return {Bnn(bnn.input_dim(), std::move(hidden), std::move(output)), std::move(r), std::nullopt};
}

Bnn fold_scale(const Bnn& bnn) {
  if (!bnn.has_binary_output()) return bnn;
  const auto& bin = std::get<BinaryScaled>(bnn.output());
  Eigen::VectorXd weights = bin.signs.cast<double>() / static_cast<double>(bin.denominator);
  return Bnn(bnn.input_dim(), bnn.hidden(), RealWeights{std::move(weights)});
}

}  // namespace fcbnn
