#include <doctest.h>

#include <cmath>

#include "fcbnn/binarize.hpp"
#include "fcbnn/exact.hpp"
#include "fcbnn/lipschitz.hpp"
#include "support.hpp"

using namespace fcbnn;

namespace {

bool is_power_of_two(std::int64_t q) { return q > 0 && (q & (q - 1)) == 0; }

}  // namespace

TEST_CASE("rationalize examples") {
  const auto a = rationalize_weights(Eigen::VectorXd::Constant(1, 0.75), 0.6);
  CHECK(a.denominator == 1);
  const auto exact = rationalize_weights(Eigen::VectorXd::Constant(1, 0.75), 0.2);
  CHECK(exact.denominator == 4);
  CHECK(exact.numerators == std::vector<std::int64_t>{3});
  CHECK(exact.alpha() == 0.25);

  const auto b = rationalize_weights(Eigen::Vector2d(0.5, -0.25), 0.3);
  CHECK(b.denominator == 4);
  CHECK(b.numerators == std::vector<std::int64_t>{2, -1});

  const auto c = rationalize_weights(Eigen::Vector2d(0.3, -1.25), 0.05);
  CHECK(c.denominator == 32);
  CHECK(c.numerators == std::vector<std::int64_t>{10, -40});
  CHECK(std::abs(0.3 - 10.0 / 32) <= 1.0 / 64);
  CHECK(c.expansion() == 50);

  CHECK_THROWS_AS(rationalize_weights(Eigen::Vector2d(1, 1), 0.0), InvalidArgument);
  CHECK_THROWS_AS(rationalize_weights(Eigen::Vector2d(1, 1), -1.0), InvalidArgument);
}

TEST_CASE("rounding is half away from zero") {
  const auto r = rationalize_weights(Eigen::Vector2d(0.625, -0.625), 0.3);  // q = 4
  REQUIRE(r.denominator == 4);
  CHECK(r.numerators == std::vector<std::int64_t>{3, -3});
}

TEST_CASE("denominator is the smallest admissible power of two") {
  Rng rng(6);
  for (int trial = 0; trial < 200; ++trial) {
    const Index n = rng.integer(1, 64);
    const double eps = std::pow(10.0, rng.uniform(-4, 0));
    const double k = rng.uniform(0.5, 3);
    const Eigen::VectorXd w = test::random_values(rng, n, -2, 2);
    const auto r = rationalize_weights(w, eps, k);
    CHECK(is_power_of_two(r.denominator));
    const double q = double(r.denominator);
    CHECK(double(n) * k / (2 * q) < eps);
    if (r.denominator > 1) CHECK_FALSE(double(n) * k / q < eps);
    double total = 0.0;
    for (Index i = 0; i < n; ++i) {
      const double err = std::abs(w(i) - double(r.numerators[std::size_t(i)]) / q);
      CHECK(err <= 1 / (2 * q));
      total += k * err;
    }
    CHECK(total < eps);
    CHECK(double(r.expansion()) <= q * w.cwiseAbs().sum() + double(n) / 2);
  }
}

TEST_CASE("binarize a dyadic single neuron") {
  const HiddenLayer h(SignMatrix::Ones(1, 2), Eigen::VectorXd::Zero(1));
  const Bnn net(2, {h}, RealWeights{Eigen::VectorXd::Constant(1, 0.75)});
  const auto out = binarize_output(net, 0.2);
  CHECK_FALSE(out.warning);
  const Bnn& b = out.network;
  REQUIRE(b.has_binary_output());
  const auto& bin = std::get<BinaryScaled>(b.output());
  CHECK(bin.denominator == 4);
  CHECK(bin.signs == SignVector::Ones(3));
  CHECK(b.hidden()[0].width() == 3);
  for (Index j = 0; j < 3; ++j) CHECK(b.hidden()[0].weights().row(j) == h.weights().row(0));
  for (const auto& x : {Eigen::Vector2d(1, 1), Eigen::Vector2d(-1, 1), Eigen::Vector2d(-1, -1)}) {
    CHECK(forward(b, x) == forward(net, x));
  }
}

TEST_CASE("binarize the product network") {
  const TruthTable table(2, Eigen::Vector4d(1, -1, -1, 1));
  const Bnn net = construct_exact(table);
  const auto out = binarize_output(net, 1e-6);
  const auto& bin = std::get<BinaryScaled>(out.network.output());
  // n = 4 forces q >= 2^21 here, and 0.5 * q copies per neuron.
  CHECK(is_power_of_two(bin.denominator));
  CHECK(4.0 / (2.0 * double(bin.denominator)) < 1e-6);
  for (Index j = 0; j < 4; ++j) CHECK(forward(out.network, table.input(j).cast<double>()) == table.value(j));

  // With a loose epsilon the minimal q = 8 is reached, 4 copies per neuron.
  const auto loose = binarize_output(net, 0.3);
  CHECK(loose.rationalized.denominator == 8);
  CHECK(loose.rationalized.numerators == std::vector<std::int64_t>{4, -4, -4, 4});
  CHECK(loose.network.hidden()[0].width() == 16);
  for (Index j = 0; j < 4; ++j) CHECK(forward(loose.network, table.input(j).cast<double>()) == table.value(j));
}

TEST_CASE("q = 2 on the product network when the bound allows it") {
  // k_bound scales the requirement: 4 * 0.05 / (2 * 2) = 0.05 < 0.1.
  const Bnn net = construct_exact(TruthTable(2, Eigen::Vector4d(1, -1, -1, 1)));
  const auto out = binarize_output(net, 0.1, 0.05);
  const auto& bin = std::get<BinaryScaled>(out.network.output());
  CHECK(bin.denominator == 2);
  CHECK(bin.signs == SignVector((SignVector(4) << 1, -1, -1, 1).finished()));
  CHECK(out.network.hidden()[0] == net.hidden()[0]);
}

TEST_CASE("zero numerators are dropped") {
  const HiddenLayer h(SignMatrix::Ones(3, 2), Eigen::Vector3d(-5, 0, 5));
  const Bnn net(2, {h}, RealWeights{Eigen::Vector3d(0.5, 0.01, -0.25)});
  const auto out = binarize_output(net, 3.0);  // q = 1 -> z = (1, 0, 0)
  REQUIRE(out.rationalized.denominator == 1);
  CHECK(out.network.hidden()[0].width() == 1);
  CHECK(out.network.hidden()[0].thresholds()(0) == -5);

  const Bnn tiny(2, {h}, RealWeights{Eigen::Vector3d(0.1, -0.1, 0.2)});
  const auto zero = binarize_output(tiny, 3.0);
  CHECK(zero.rationalized.expansion() == 0);
  CHECK(zero.network.hidden()[0].width() == 2);
  for (const auto& x : {Eigen::Vector2d(1, 1), Eigen::Vector2d(-1, 1)}) CHECK(forward(zero.network, x) == 0.0);
}

TEST_CASE("already binary networks are left alone") {
  const HiddenLayer h(SignMatrix::Ones(2, 2), Eigen::VectorXd::Zero(2));
  const Bnn net(2, {h}, BinaryScaled{SignVector::Ones(2), 4});
  const auto out = binarize_output(net, 0.1);
  CHECK(out.warning.has_value());
  CHECK(out.network == net);
}

TEST_CASE("fold_scale") {
  const HiddenLayer h(SignMatrix::Ones(2, 2), Eigen::VectorXd::Zero(2));
  const Bnn net(2, {h}, BinaryScaled{SignVector((SignVector(2) << 1, -1).finished()), 4});
  CHECK(std::get<RealWeights>(fold_scale(net).output()).weights == Eigen::Vector2d(0.25, -0.25));
  const Bnn unit(2, {h}, BinaryScaled{SignVector((SignVector(2) << -1, 1).finished()), 1});
  CHECK(std::get<RealWeights>(fold_scale(unit).output()).weights == Eigen::Vector2d(-1, 1));

  Rng rng(14);
  for (int trial = 0; trial < 50; ++trial) {
    RandomBnnShape shape;
    shape.input_dim = 5;
    shape.widths = {rng.integer(1, 16), rng.integer(1, 16)};
    Bnn r = random_bnn(rng, shape);
    Eigen::VectorXd w(shape.widths.back());
    for (Index i = 0; i < w.size(); ++i) w(i) = double(rng.integer(-8, 8)) / 8.0;
    const Bnn dyadic(5, r.hidden(), RealWeights{w});
    const Bnn folded = fold_scale(binarize_output(dyadic, 0.9 * double(w.size()) / 8.0 + 1e-3).network);
    for (int i = 0; i < 20; ++i) {
      const Eigen::VectorXd x = random_signs(rng, 5).cast<double>();
      CHECK(forward(folded, x) == forward(dyadic, x));
    }
  }
}

TEST_CASE("random networks stay within epsilon") {
  Rng rng(55);
  for (const double eps : {0.1, 0.01, 0.001}) {
    for (int trial = 0; trial < 40; ++trial) {
      RandomBnnShape shape;
      shape.input_dim = rng.integer(1, 10);
      shape.widths = {rng.integer(1, 32), rng.integer(1, 16)};
      shape.output = OutputDistribution::uniform_unit;
      const Bnn net = random_bnn(rng, shape);
      const auto out = binarize_output(net, eps);
      const auto& bin = std::get<BinaryScaled>(out.network.output());
      CHECK(is_power_of_two(bin.denominator));
      CHECK((bin.signs.array().abs() == 1).all());
      CHECK(out.network.hidden().size() == net.hidden().size());
      CHECK(out.network.hidden()[0] == net.hidden()[0]);
      if (out.rationalized.expansion() > 0) CHECK(out.network.hidden().back().width() == out.rationalized.expansion());
      const PackedBnn a(net);
      const PackedBnn b(out.network);
      for (int i = 0; i < 100; ++i) {
        const Eigen::VectorXd x = random_signs(rng, shape.input_dim).cast<double>();
        CHECK(std::abs(a.forward(x) - b.forward(x)) < eps);
      }
    }
  }
}

TEST_CASE("binarizing a bump approximator") {
  const FunctionOracle f = builtin_function("bump2d", 2);
  const Box box{2, -1.0, 1.0};
  // A coarse approximator keeps sum |z| (about 37k copies) small enough to audit.
  const Bnn net = construct_lipschitz(f, box, 6.0);
  const auto out = binarize_output(net, 0.01);
  CHECK(out.rationalized.denominator == 4096);
  FunctionOracle before;
  before.dim = 2;
  before.eval = [&](const Eigen::VectorXd& x) { return forward(net, x); };
  CHECK(audit_error(out.network, before, box, 256) < 0.01);
}
