#include "fcbnn/counterexample.hpp"

#include <algorithm>
#include <limits>

#include "fcbnn/detail/parallel.hpp"
#include "fcbnn/random.hpp"

namespace fcbnn {

namespace {

double bump_slope(double x) {
  const double q = 1.0 - 4.0 * x * x;
  return bump(x, 0.0) * 8.0 * x / (q * q);
}

Eigen::VectorXd point(const std::array<double, 2>& p) { return Eigen::Vector2d(p[0], p[1]); }

void require_single_layer_2d(const Bnn& bnn) {
  if (bnn.input_dim() != 2 || bnn.hidden().size() != 1) {
    throw ArchitectureError("certificate needs a single-hidden-layer network on R^2, got input_dim " +
                            std::to_string(bnn.input_dim()) + " with " +
                            std::to_string(bnn.hidden().size()) + " hidden layers");
  }
}

}  // namespace

double bump_lipschitz_constant() {
  // Coarse scan, then golden-section refinement around the best sample; the
  // slope is unimodal on (0, 1/2).
  constexpr int kScan = 20000;
  double best_x = 0.0;
  double best = 0.0;
  for (int i = 1; i < kScan; ++i) {
    const double x = 0.5 * i / kScan;
    if (const double g = bump_slope(x); g > best) {
      best = g;
      best_x = x;
    }
  }
  double lo = std::max(0.0, best_x - 0.5 / kScan);
  double hi = std::min(0.5 - 1e-12, best_x + 0.5 / kScan);
  const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
    const double m1 = hi - ratio * (hi - lo);
    const double m2 = lo + ratio * (hi - lo);
    if (bump_slope(m1) < bump_slope(m2)) lo = m1; else hi = m2;
  }
  best = std::max(best, bump_slope(0.5 * (lo + hi)));
  return best * (1.0 + 1e-9);
}

double neuron_symmetry_residual(Sign w1, Sign w2, double b) {
  if ((w1 != 1 && w1 != -1) || (w2 != 1 && w2 != -1)) {
    throw InvalidArgument("neuron_symmetry_residual: weights must be +1 or -1");
  }
  const auto o = [&](const std::array<double, 2>& p) {
    return static_cast<double>(activate(w1 * p[0] + w2 * p[1], b));
  };
  return (o(CriticalQuad::b1) + o(CriticalQuad::b2)) - (o(CriticalQuad::a1) + o(CriticalQuad::a2));
}

double critical_residual(const Bnn& bnn) {
  if (bnn.input_dim() != 2) throw ArchitectureError("critical_residual needs input_dim 2");
  const auto o = [&](const std::array<double, 2>& p) { return forward(bnn, point(p)); };
  return (o(CriticalQuad::b1) + o(CriticalQuad::b2)) - (o(CriticalQuad::a1) + o(CriticalQuad::a2));
}

double lower_bound_certificate(const Bnn& bnn) {
  require_single_layer_2d(bnn);
  const double oa1 = forward(bnn, point(CriticalQuad::a1));
  const double oa2 = forward(bnn, point(CriticalQuad::a2));
  const double ob1 = forward(bnn, point(CriticalQuad::b1));
  const double ob2 = forward(bnn, point(CriticalQuad::b2));
  return std::max({std::abs(1.0 - oa1), std::abs(1.0 - oa2), std::abs(ob1), std::abs(ob2)});
}

double tertiary_check(const Bnn& bnn) { return lower_bound_certificate(bnn); }

Certification certify_random_networks(std::uint64_t trials, std::uint64_t base_seed, Index max_width) {
  if (max_width < 1) throw InvalidArgument("max_width must be at least 1");
  Certification result;
  result.rows.resize(static_cast<std::size_t>(trials));
  detail::parallel_chunks(result.rows.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t t = begin; t < end; ++t) {
      const std::uint64_t seed = derive_seed(base_seed, t);
      Rng rng(seed);
      RandomBnnShape shape;
      shape.input_dim = 2;
      shape.widths = {rng.integer(1, max_width)};
      const Bnn bnn = random_bnn(rng, shape);
      result.rows[t] = {t, shape.widths.front(), seed, lower_bound_certificate(bnn)};
    }
  });
  result.min_m = std::numeric_limits<double>::infinity();
  for (const auto& row : result.rows) result.min_m = std::min(result.min_m, row.m);
  return result;
}

}  // namespace fcbnn
