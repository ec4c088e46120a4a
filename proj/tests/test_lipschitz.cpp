#include <doctest.h>

#include <cmath>
#include <map>
#include <numbers>
#include <set>

#include <Eigen/LU>

#include "fcbnn/counterexample.hpp"
#include "fcbnn/lipschitz.hpp"
#include "support.hpp"

using namespace fcbnn;

namespace {

SignVector signs(std::initializer_list<int> v) {
  SignVector s(static_cast<Index>(v.size()));
  Index i = 0;
  for (int x : v) s(i++) = static_cast<Sign>(x);
  return s;
}

Eigen::VectorXd random_point(Rng& rng, const Box& box) {
  Eigen::VectorXd x(box.dim);
  for (Index k = 0; k < box.dim; ++k) x(k) = rng.uniform(box.lo, box.hi);
  return x;
}

// Sum of a few cosines with Lipschitz constant sum |a_k| * |omega_k|.
FunctionOracle cosine_sum(Rng& rng, Index dim, int terms) {
  std::vector<double> amp;
  std::vector<Eigen::VectorXd> freq;
  std::vector<double> phase;
  double lambda = 0.0;
  for (int t = 0; t < terms; ++t) {
    amp.push_back(rng.uniform(-1, 1));
    freq.push_back(test::random_values(rng, dim, -3, 3));
    phase.push_back(rng.uniform(0, 2 * std::numbers::pi));
    lambda += std::abs(amp.back()) * freq.back().norm();
  }
  FunctionOracle f;
  f.dim = dim;
  f.lipschitz = lambda;
  f.eval = [=](const Eigen::VectorXd& x) {
    double s = 0.0;
    for (std::size_t t = 0; t < amp.size(); ++t) s += amp[t] * std::cos(freq[t].dot(x) + phase[t]);
    return s;
  };
  return f;
}

}  // namespace

TEST_CASE("direction family") {
  const SignMatrix v = direction_family(3);
  CHECK(v.row(0) == signs({1, 1, 1}).transpose());
  CHECK(v.row(1) == signs({-1, 1, 1}).transpose());
  CHECK(v.row(2) == signs({1, -1, 1}).transpose());
  for (Index d = 1; d <= 12; ++d) {
    const Eigen::MatrixXd m = direction_family(d).cast<double>();
    CHECK(Eigen::FullPivLU<Eigen::MatrixXd>(m).rank() == d);
  }
}

TEST_CASE("partition extents and threshold count") {
  const Box box{2, -1.0, 1.0};
  const auto p = make_partition(box, 1.0, 2.9);
  CHECK(p.extent_min(0) == -2.0);
  CHECK(p.extent_max(0) == 2.0);
  CHECK(p.extent_min(1) == -2.0);
  CHECK(p.extent_max(1) == 2.0);
  CHECK(p.edge == doctest::Approx(1.0253038074166865).epsilon(1e-12));
  CHECK(p.edge * 2 * std::sqrt(2.0) < 2.9);
  for (Index i = 0; i < 2; ++i) {
    REQUIRE(p.threshold_count(i) == 5);
    for (Index xi = 0; xi < 5; ++xi) CHECK(p.thresholds[std::size_t(i)](xi) == p.extent_min(i) + double(xi) * p.edge);
  }
  CHECK(p.first_layer_width() == 10);
  CHECK(p.diameter_bound() < 2.9);
}

TEST_CASE("one-dimensional partition is interval bucketing") {
  const auto p = make_partition_with_edge(Box{1, 0.0, 1.0}, 0.25);
  CHECK(p.directions.rows() == 1);
  CHECK(p.directions(0, 0) == 1);
  CHECK(p.thresholds[0] == Eigen::Vector<double, 5>(0, 0.25, 0.5, 0.75, 1.0));
  CHECK(locate_cell(p, Eigen::VectorXd::Constant(1, 0.3)).xi == std::vector<Index>{2});
  CHECK(locate_cell(p, Eigen::VectorXd::Constant(1, 0.25)).xi == std::vector<Index>{1});
}

TEST_CASE("first layer and the four-line example") {
  const auto p = make_partition_with_edge(Box{2, 0.0, 1.0}, 0.7);
  const HiddenLayer layer = build_first_layer(p);
  CHECK(layer.width() == 8);
  const Eigen::Vector2d a(0.85, 0.85);
  const SignVector expected = signs({1, 1, 1, -1, 1, 1, -1, -1});
  CHECK(apply_layer(layer, a) == expected);
  CHECK(cell_code(p, locate_cell(p, a)) == expected);
  // (0.35, 0.35) has x.v1 = 0.7, exactly on the second threshold.
  const SignVector tie = apply_layer(layer, Eigen::Vector2d(0.35, 0.35));
  CHECK(tie(1) == -1);
  CHECK(tie(0) == 1);
}

TEST_CASE("reachable codes on an interval") {
  const auto p = make_partition_with_edge(Box{1, 0.0, 1.0}, 0.5);
  const auto cells = enumerate_reachable_codes(p);
  REQUIRE(cells.size() == 3);
  std::set<std::vector<Sign>> codes;
  for (const auto& c : cells) codes.insert(std::vector<Sign>(c.code.data(), c.code.data() + c.code.size()));
  CHECK(codes.size() == 3);
  for (const auto& c : cells) {
    CHECK(c.base_point(0) >= 0.0);
    CHECK(c.base_point(0) <= 1.0);
  }
}

TEST_CASE("enumeration covers every cell hit by a fine grid") {
  for (const double edge : {0.7, 0.3, 0.13}) {
    const auto p = make_partition_with_edge(Box{2, 0.0, 1.0}, edge);
    const auto cells = enumerate_reachable_codes(p);
    std::set<CellIndex> listed;
    for (const auto& c : cells) listed.insert(c.index);
    CHECK(listed.size() == cells.size());
    CHECK(cells.size() <= p.candidate_cells());
    if (edge == 0.7) CHECK(cells.size() <= 16);
    std::set<CellIndex> hit;
    const int g = 401;
    for (int i = 0; i < g; ++i) {
      for (int j = 0; j < g; ++j) hit.insert(locate_cell(p, Eigen::Vector2d(double(i) / (g - 1), double(j) / (g - 1))));
    }
    for (const auto& c : hit) CHECK(listed.count(c) == 1);
    // Cells not hit by the grid must still touch the box closely.
    CHECK(listed.size() <= hit.size() + 4 * std::size_t(p.first_layer_width()));
  }
}

TEST_CASE("a huge epsilon gives one interior cell") {
  const FunctionOracle f = builtin_function("linear", 2);
  const Box box{2, -1.0, 1.0};
  const auto built = build_lipschitz_network(f, box, 1e6);
  // Besides the interior cell, only the zero-measure lower faces x.v = min
  // (which the strict activation puts below threshold 0) get codes.
  CHECK(built.reachable_cells == 3);
  Rng rng(4);
  const double y0 = forward(built.network, Eigen::Vector2d(0, 0));
  CHECK(y0 == 0.0);
  for (int i = 0; i < 50; ++i) CHECK(forward(built.network, random_point(rng, box)) == y0);
  CHECK(forward(built.network, Eigen::Vector2d(-1, -1)) == -1.0);
  CHECK(audit_error(built.network, f, box, 33) < 1e6);
}

TEST_CASE("sampled cell diameters stay below the bound") {
  Rng rng(12);
  for (const Index d : {1, 2, 3}) {
    const Box box{d, -1.0, 1.0};
    const auto p = make_partition(box, 2.0, 0.8);
    CHECK(p.diameter_bound() < 0.8 / 2.0);
    std::map<CellIndex, std::vector<Eigen::VectorXd>> groups;
    for (int i = 0; i < 20000; ++i) {
      const Eigen::VectorXd x = random_point(rng, box);
      groups[locate_cell(p, x)].push_back(x);
    }
    double widest = 0.0;
    for (const auto& [cell, pts] : groups) {
      for (std::size_t a = 0; a < pts.size(); ++a) {
        for (std::size_t b = a + 1; b < pts.size(); ++b) widest = std::max(widest, (pts[a] - pts[b]).norm());
      }
    }
    CHECK(widest < p.diameter_bound());
  }
}

TEST_CASE("codes are injective and matching is exclusive") {
  Rng rng(21);
  for (const Index d : {1, 2, 3}) {
    const Box box{d, -1.0, 1.0};
    const auto built = build_lipschitz_network(builtin_function("coscos", d), box, d == 3 ? 4.0 : 1.0);
    const auto cells = enumerate_reachable_codes(built.partition);
    std::set<std::vector<Sign>> codes;
    for (const auto& c : cells) codes.insert(std::vector<Sign>(c.code.data(), c.code.data() + c.code.size()));
    CHECK(codes.size() == cells.size());
    const HiddenLayer& first = built.network.hidden()[0];
    const HiddenLayer& second = built.network.hidden()[1];
    const Index matching = static_cast<Index>(cells.size());
    for (int i = 0; i < (d == 3 ? 300 : 2000); ++i) {
      const Eigen::VectorXd x = random_point(rng, box);
      const SignVector code = apply_layer(first, x);
      CHECK(code == cell_code(built.partition, locate_cell(built.partition, x)));
      const SignVector phi = apply_layer(second, code.cast<double>());
      CHECK((phi.head(matching).array() == 1).count() == 1);
    }
  }
}

TEST_CASE("constant function is reproduced") {
  FunctionOracle f;
  f.dim = 2;
  f.lipschitz = 1.0;
  f.eval = [](const Eigen::VectorXd&) { return 3.7; };
  const Box box{2, -1.0, 1.0};
  for (const double eps : {2.0, 0.5}) {
    const Bnn net = construct_lipschitz(f, box, eps);
    CHECK(audit_error(net, f, box, 65) <= 1e-12 * 3.7);
  }
}

TEST_CASE("epsilon guarantee on the bump") {
  const FunctionOracle f = builtin_function("bump2d", 2);
  CHECK(f.lipschitz == bump_lipschitz_constant());
  CHECK_FALSE(f.lipschitz_estimated);
  const Box box{2, -1.0, 1.0};
  for (const double eps : {1.0, 0.5, 0.25}) {
    const Bnn net = construct_lipschitz(f, box, eps);
    CHECK(net.hidden().size() == 2);
    CHECK(audit_error(net, f, box, 129) < eps);
  }
}

TEST_CASE("staircase for the identity on the unit interval") {
  const FunctionOracle f = builtin_function("linear", 1);
  const Box box{1, 0.0, 1.0};
  const Bnn net = construct_lipschitz(f, box, 0.1);
  CHECK(audit_error(net, f, box, 10001) < 0.1);
  double prev = -1.0;
  for (int i = 0; i <= 1000; ++i) {
    const double y = forward(net, Eigen::VectorXd::Constant(1, i / 1000.0));
    CHECK(y >= prev - 1e-12);
    prev = y;
  }
}

TEST_CASE("epsilon guarantee on random cosine sums") {
  Rng rng(99);
  for (int trial = 0; trial < 4; ++trial) {
    const Index d = 1 + trial % 2;
    const FunctionOracle f = cosine_sum(rng, d, 3);
    const Box box{d, -1.0, 1.0};
    for (const double eps : {1.0, 0.5, 0.25}) {
      const Bnn net = construct_lipschitz(f, box, eps);
      CHECK(audit_error(net, f, box, d == 1 ? 4001 : 101) < eps);
    }
  }
}

TEST_CASE("halving the edge does not increase the audited error") {
  const Box square{2, -1.0, 1.0};
  const FunctionOracle bump_f = builtin_function("bump2d", 2);
  double prev = INFINITY;
  for (const double eps : {1.0, 0.5, 0.25}) {
    const double err = audit_error(construct_lipschitz(bump_f, square, eps), bump_f, square, 97);
    CHECK(err <= prev + 1e-9);
    prev = err;
  }
  const Box unit{1, 0.0, 1.0};
  const FunctionOracle lin = builtin_function("linear", 1);
  prev = INFINITY;
  for (const double eps : {0.4, 0.2, 0.1, 0.05, 0.025}) {
    const double err = audit_error(construct_lipschitz(lin, unit, eps), lin, unit, 2001);
    CHECK(err <= prev + 1e-9);
    prev = err;
  }
}

TEST_CASE("audit grid includes the corners") {
  FunctionOracle spike;
  spike.dim = 2;
  spike.eval = [](const Eigen::VectorXd& x) { return x(0) == 1.0 && x(1) == 1.0 ? 5.0 : 0.0; };
  const Bnn zero(2, {HiddenLayer(SignMatrix::Ones(1, 2), Eigen::VectorXd::Zero(1))},
                 RealWeights{Eigen::VectorXd::Zero(1)});
  CHECK(audit_error(zero, spike, Box{2, -1.0, 1.0}, 3) == 5.0);
  CHECK_THROWS_AS(audit_error(zero, spike, Box{3, -1.0, 1.0}, 3), DimensionError);
  CHECK_THROWS_AS(audit_error(zero, spike, Box{2, -1.0, 1.0}, 1), InvalidArgument);
}

TEST_CASE("estimated Lipschitz constant dominates the sampled ratio") {
  const auto f = [](const Eigen::VectorXd& x) { return std::sin(3 * x(0)) + 0.5 * x(1); };
  const Box box{2, -1.0, 1.0};
  const FunctionOracle o = with_estimated_lipschitz(2, f, box, LipschitzEstimateOptions{20000, 1.5, 5});
  CHECK(o.lipschitz_estimated);
  const double ratio = sample_lipschitz_ratio(f, box, 20000, 5);
  CHECK(ratio <= o.lipschitz);
  CHECK(ratio <= std::hypot(3.0, 0.5) * (1 + 1e-9));
  CHECK(ratio > 2.5);
}

TEST_CASE("nearest-sample oracle") {
  Eigen::MatrixXd pts(3, 1);
  pts << 0.0, 0.5, 1.0;
  const FunctionOracle o = sampled_function_oracle(pts, Eigen::Vector3d(0.0, 1.0, 0.0));
  CHECK(o.lipschitz_estimated);
  CHECK(o.lipschitz == doctest::Approx(3.0));
  CHECK(o(Eigen::VectorXd::Constant(1, 0.6)) == 1.0);
  CHECK(o(Eigen::VectorXd::Constant(1, 0.9)) == 0.0);
}

TEST_CASE("builtin registry and error paths") {
  const auto names = builtin_function_names();
  CHECK(std::find(names.begin(), names.end(), "bump2d") != names.end());
  CHECK_THROWS_AS(builtin_function("nope", 2), InvalidArgument);
  CHECK_THROWS_AS(builtin_function("bump2d", 3), DimensionError);
  CHECK_THROWS_AS(make_partition(Box{2, -1.0, 1.0}, 1.0, 1e-4), CapacityError);
  CHECK_THROWS_AS(make_partition(Box{2, 1.0, -1.0}, 1.0, 1.0), InvalidArgument);
  FunctionOracle bad;
  bad.dim = 1;
  bad.eval = [](const Eigen::VectorXd&) { return NAN; };
  CHECK_THROWS_AS(construct_lipschitz(bad, Box{1, 0.0, 1.0}, 0.5), OracleError);
}
