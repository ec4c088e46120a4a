#include "fcbnn/lipschitz.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <numbers>

#include "fcbnn/counterexample.hpp"
#include "fcbnn/detail/parallel.hpp"
#include "fcbnn/exact.hpp"
#include "fcbnn/random.hpp"

namespace fcbnn {

namespace {

void check_box(const Box& box) {
  if (box.dim < 1) throw InvalidArgument("box dimension must be at least 1");
  if (!std::isfinite(box.lo) || !std::isfinite(box.hi) || !(box.lo < box.hi)) {
    throw InvalidArgument("box needs finite lo < hi");
  }
}

// Is {y >= 0 : A y <= b} nonempty? Phase-1 simplex with Bland's rule.
bool nonnegative_feasible(const Eigen::MatrixXd& a, const Eigen::VectorXd& b) {
  const Index m = a.rows();
  const Index n = a.cols();
  const Index cols = n + 2 * m;
  const double tol = 1e-11 * (1.0 + b.cwiseAbs().maxCoeff());
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m, cols + 1);
  Eigen::RowVectorXd z = Eigen::RowVectorXd::Zero(cols + 1);
  std::vector<Index> basis(static_cast<std::size_t>(m));
  for (Index i = 0; i < m; ++i) {
    const double sign = b(i) >= 0.0 ? 1.0 : -1.0;
    t.row(i).head(n) = sign * a.row(i);
    t(i, n + i) = sign;
    t(i, cols) = sign * b(i);
    if (sign > 0) {
      basis[static_cast<std::size_t>(i)] = n + i;
    } else {
      t(i, n + m + i) = 1.0;
      basis[static_cast<std::size_t>(i)] = n + m + i;
    }
  }
  // Reduced costs for minimising the sum of artificials.
  for (Index j = n + m; j < cols; ++j) z(j) = 1.0;
  for (Index i = 0; i < m; ++i) {
    if (basis[static_cast<std::size_t>(i)] >= n + m) z -= t.row(i);
  }
  for (int iter = 0; iter < 1000; ++iter) {
    Index enter = -1;
    for (Index j = 0; j < cols; ++j) {
      if (z(j) < -tol) {
        enter = j;
        break;
      }
    }
    if (enter < 0) break;
    Index leave = -1;
    double best = std::numeric_limits<double>::infinity();
    for (Index i = 0; i < m; ++i) {
      if (t(i, enter) > tol) {
        const double ratio = t(i, cols) / t(i, enter);
        if (ratio < best - tol ||
            (ratio <= best + tol && leave >= 0 &&
             basis[static_cast<std::size_t>(i)] < basis[static_cast<std::size_t>(leave)])) {
          best = std::min(best, ratio);
          leave = i;
        }
      }
    }
    if (leave < 0) break;
    t.row(leave) /= t(leave, enter);
    for (Index i = 0; i < m; ++i) {
      if (i != leave && t(i, enter) != 0.0) t.row(i) -= t(i, enter) * t.row(leave);
    }
    z -= z(enter) * t.row(leave);
    basis[static_cast<std::size_t>(leave)] = enter;
  }
  return -z(cols) <= tol;
}

// Closed projection interval of cell count c along direction i. Count 0 is
// everything at or below the first threshold; inside the box that is the
// face x . v^i = extent_min.
std::pair<double, double> cell_interval(const ParallelotopePartition& p, Index i, Index c) {
  const auto& thr = p.thresholds[static_cast<std::size_t>(i)];
  const double hi = thr(c);
  const double lo = c == 0 ? thr(0) - p.edge : thr(c - 1);
  return {lo, hi};
}

}  // namespace

SignMatrix direction_family(Index dim) {
  if (dim < 1) throw InvalidArgument("direction_family: dimension must be at least 1");
  SignMatrix v = SignMatrix::Ones(dim, dim);
  for (Index i = 1; i < dim; ++i) v(i, i - 1) = -1;
  return v;
}

Index ParallelotopePartition::first_layer_width() const {
  Index total = 0;
  for (const auto& t : thresholds) total += t.size();
  return total;
}

std::uint64_t ParallelotopePartition::candidate_cells() const {
  std::uint64_t total = 1;
  for (const auto& t : thresholds) {
    const auto count = static_cast<std::uint64_t>(t.size());
    if (total > std::numeric_limits<std::uint64_t>::max() / count) return std::numeric_limits<std::uint64_t>::max();
    total *= count;
  }
  return total;
}

double ParallelotopePartition::diameter_bound() const {
  const auto d = static_cast<double>(dim());
  return edge * d * std::sqrt(d);
}

ParallelotopePartition make_partition_with_edge(const Box& box, double edge, const PartitionOptions& options) {
  check_box(box);
  if (!std::isfinite(edge) || !(edge > 0.0)) throw InvalidArgument("edge length must be positive and finite");
  ParallelotopePartition p;
  p.box = box;
  p.directions = direction_family(box.dim);
  p.extent_min.resize(box.dim);
  p.extent_max.resize(box.dim);
  for (Index i = 0; i < box.dim; ++i) {
    double lo = 0.0;
    double hi = 0.0;
    for (Index k = 0; k < box.dim; ++k) {
      const double a = box.lo * p.directions(i, k);
      const double b = box.hi * p.directions(i, k);
      lo += std::min(a, b);
      hi += std::max(a, b);
    }
    p.extent_min(i) = lo;
    p.extent_max(i) = hi;
  }
  p.edge = std::min(edge, (p.extent_max - p.extent_min).maxCoeff());
  for (Index i = 0; i < box.dim; ++i) {
    const double steps = std::ceil((p.extent_max(i) - p.extent_min(i)) / p.edge);
    if (steps > static_cast<double>(options.max_cells)) {
      throw CapacityError("partition needs more than " + std::to_string(options.max_cells) +
                          " cells; use a larger epsilon");
    }
    const auto count = static_cast<Index>(steps) + 1;
    Eigen::VectorXd t(count);
    for (Index xi = 0; xi < count; ++xi) t(xi) = p.extent_min(i) + static_cast<double>(xi) * p.edge;
    p.thresholds.push_back(std::move(t));
  }
  if (p.candidate_cells() > options.max_cells) {
    throw CapacityError("partition has " + std::to_string(p.candidate_cells()) + " candidate cells, cap is " +
                        std::to_string(options.max_cells) + "; use a larger epsilon");
  }
  return p;
}

ParallelotopePartition make_partition(const Box& box, double lambda, double epsilon,
                                      const PartitionOptions& options) {
  check_box(box);
  if (!std::isfinite(lambda) || !(lambda > 0.0)) throw InvalidArgument("lambda must be positive and finite");
  if (!std::isfinite(epsilon) || !(epsilon > 0.0)) throw InvalidArgument("epsilon must be positive and finite");
  const auto d = static_cast<double>(box.dim);
  const double edge = epsilon / (lambda * d * std::sqrt(d) * (1.0 + 1e-6));
  return make_partition_with_edge(box, edge, options);
}

HiddenLayer build_first_layer(const ParallelotopePartition& partition) {
  const Index width = partition.first_layer_width();
  SignMatrix weights(width, partition.dim());
  Eigen::VectorXd thresholds(width);
  Index row = 0;
  for (Index i = 0; i < partition.dim(); ++i) {
    const auto& thr = partition.thresholds[static_cast<std::size_t>(i)];
    for (Index xi = 0; xi < thr.size(); ++xi, ++row) {
      weights.row(row) = partition.directions.row(i);
      thresholds(row) = thr(xi);
    }
  }
  return HiddenLayer(std::move(weights), std::move(thresholds));
}

CellIndex locate_cell(const ParallelotopePartition& partition, const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (x.size() != partition.dim()) throw DimensionError("locate_cell: point dimension mismatch");
  CellIndex cell;
  cell.xi.resize(static_cast<std::size_t>(partition.dim()));
  for (Index i = 0; i < partition.dim(); ++i) {
    const double u = mac_dense(partition.directions.row(i), x);
    const auto& thr = partition.thresholds[static_cast<std::size_t>(i)];
    Index fired = 0;
    for (Index xi = 0; xi < thr.size(); ++xi) fired += detail::sigma(u, thr(xi)) > 0 ? 1 : 0;
    cell.xi[static_cast<std::size_t>(i)] = fired;
  }
  return cell;
}

SignVector cell_code(const ParallelotopePartition& partition, const CellIndex& cell) {
  if (static_cast<Index>(cell.xi.size()) != partition.dim()) throw DimensionError("cell_code: index dimension mismatch");
  SignVector code(partition.first_layer_width());
  Index row = 0;
  for (Index i = 0; i < partition.dim(); ++i) {
    const Index fired = cell.xi[static_cast<std::size_t>(i)];
    for (Index xi = 0; xi < partition.threshold_count(i); ++xi, ++row) code(row) = xi < fired ? 1 : -1;
  }
  return code;
}

std::vector<ReachableCell> enumerate_reachable_codes(const ParallelotopePartition& partition,
                                                     const PartitionOptions& options) {
  const Index d = partition.dim();
  if (partition.candidate_cells() > options.max_cells) {
    throw CapacityError("partition has " + std::to_string(partition.candidate_cells()) +
                        " candidate cells, cap is " + std::to_string(options.max_cells) + "; use a larger epsilon");
  }
  const Box& box = partition.box;
  const Eigen::MatrixXd v = partition.directions.cast<double>();
  const Eigen::MatrixXd v_inv = v.fullPivLu().inverse();
  const double scale = std::max({1.0, std::abs(box.lo), std::abs(box.hi)}) * static_cast<double>(d);
  const double tau = 1e-9 * scale;

  // Feasibility of {x in box : lo <= V x <= hi} in the shifted variable
  // y = x - (box.lo - tau) >= 0, every bound relaxed by tau.
  const double origin = box.lo - tau;
  const Eigen::VectorXd v_origin = v * Eigen::VectorXd::Constant(d, origin);
  Eigen::MatrixXd a(3 * d, d);
  a << Eigen::MatrixXd::Identity(d, d), v, -v;
  Eigen::VectorXd b(3 * d);
  b.head(d).setConstant(box.hi + tau - origin);

  std::vector<ReachableCell> cells;
  CellIndex cell;
  cell.xi.assign(static_cast<std::size_t>(d), 0);
  Eigen::VectorXd centre(d);
  while (true) {
    for (Index i = 0; i < d; ++i) {
      const auto [lo, hi] = cell_interval(partition, i, cell.xi[static_cast<std::size_t>(i)]);
      centre(i) = 0.5 * (lo + hi);
      b(d + i) = hi + tau - v_origin(i);
      b(2 * d + i) = -(lo - tau - v_origin(i));
    }
    const Eigen::VectorXd x_centre = v_inv * centre;
    const bool centre_inside =
        (x_centre.array() >= box.lo).all() && (x_centre.array() <= box.hi).all();
    if (centre_inside || nonnegative_feasible(a, b)) {
      cells.push_back({cell, cell_code(partition, cell), x_centre.cwiseMax(box.lo).cwiseMin(box.hi)});
    }
    Index i = d - 1;
    while (i >= 0) {
      auto& c = cell.xi[static_cast<std::size_t>(i)];
      if (++c < partition.threshold_count(i)) break;
      c = 0;
      --i;
    }
    if (i < 0) break;
  }
  return cells;
}

double sample_lipschitz_ratio(const std::function<double(const Eigen::VectorXd&)>& f, const Box& box,
                              std::size_t pairs, std::uint64_t seed) {
  check_box(box);
  Rng rng(seed);
  const double diam = (box.hi - box.lo) * std::sqrt(static_cast<double>(box.dim));
  double best = 0.0;
  Eigen::VectorXd x(box.dim);
  Eigen::VectorXd dir(box.dim);
  for (std::size_t k = 0; k < pairs; ++k) {
    for (Index i = 0; i < box.dim; ++i) {
      x(i) = rng.uniform(box.lo, box.hi);
      dir(i) = rng.normal();
    }
    const double h = diam * std::pow(10.0, rng.uniform(-4.0, -1.0));
    const Eigen::VectorXd y = (x + h * dir.normalized()).cwiseMax(box.lo).cwiseMin(box.hi);
    const double dist = (x - y).norm();
    if (!(dist > 0.0)) continue;
    const double fx = f(x);
    const double fy = f(y);
    if (!std::isfinite(fx) || !std::isfinite(fy)) throw OracleError("function returned a non-finite value");
    best = std::max(best, std::abs(fx - fy) / dist);
  }
  return best;
}

FunctionOracle with_estimated_lipschitz(Index dim, std::function<double(const Eigen::VectorXd&)> f,
                                        const Box& box, const LipschitzEstimateOptions& options) {
  if (box.dim != dim) throw DimensionError("box dimension does not match function dimension");
  const double ratio = sample_lipschitz_ratio(f, box, options.pairs, options.seed);
  return FunctionOracle{dim, std::move(f), std::max(options.inflation * ratio, 1e-12), true};
}

FunctionOracle sampled_function_oracle(Eigen::MatrixXd points, Eigen::VectorXd values) {
  if (points.rows() < 1 || points.rows() != values.size()) {
    throw DimensionError("sample set needs one value per point and at least one point");
  }
  if (!points.allFinite() || !values.allFinite()) throw OracleError("samples must be finite");
  double ratio = 0.0;
  for (Index i = 0; i < points.rows(); ++i) {
    for (Index j = i + 1; j < points.rows(); ++j) {
      const double dist = (points.row(i) - points.row(j)).norm();
      if (dist > 0.0) ratio = std::max(ratio, std::abs(values(i) - values(j)) / dist);
    }
  }
  const Index dim = points.cols();
  auto eval = [points = std::move(points), values = std::move(values)](const Eigen::VectorXd& x) {
    Index nearest = 0;
    (points.rowwise() - x.transpose()).rowwise().squaredNorm().minCoeff(&nearest);
    return values(nearest);
  };
  return FunctionOracle{dim, std::move(eval), std::max(1.5 * ratio, 1e-12), true};
}

FunctionOracle builtin_function(std::string_view name, Index dim) {
  if (dim < 1) throw InvalidArgument("function dimension must be at least 1");
  if (name == "bump2d") {
    if (dim != 2) throw DimensionError("bump2d is defined on R^2");
    return {2, [](const Eigen::VectorXd& x) { return bump(x(0), x(1)); }, bump_lipschitz_constant(), false};
  }
  if (name == "linear") {
    return {dim, [](const Eigen::VectorXd& x) { return x(0); }, 1.0, false};
  }
  if (name == "coscos") {
    return {dim,
            [](const Eigen::VectorXd& x) {
              double p = 1.0;
              for (Index k = 0; k < x.size(); ++k) p *= std::cos(std::numbers::pi * x(k));
              return p;
            },
            std::numbers::pi, false};
  }
  throw InvalidArgument("unknown function '" + std::string(name) + "'");
}

std::vector<std::string> builtin_function_names() { return {"bump2d", "linear", "coscos"}; }

LipschitzConstruction build_lipschitz_network(const FunctionOracle& oracle, const Box& box, double epsilon,
                                              const PartitionOptions& options) {
  if (oracle.dim != box.dim) throw DimensionError("oracle dimension does not match box dimension");
  if (!std::isfinite(oracle.lipschitz)) throw InvalidArgument("lipschitz constant must be finite");
  ParallelotopePartition partition = make_partition(box, oracle.lipschitz, epsilon, options);
  HiddenLayer first = build_first_layer(partition);
  const auto cells = enumerate_reachable_codes(partition, options);
  const Index n1 = first.width();
  const auto count = static_cast<Index>(cells.size());

  Eigen::VectorXd values(count);
  for (Index c = 0; c < count; ++c) {
    values(c) = oracle(cells[static_cast<std::size_t>(c)].base_point);
    if (!std::isfinite(values(c))) throw OracleError("function returned a non-finite value at a cell representative");
  }

  // Fewer than three codes: add an always-on neuron (pre-activation >= -n1).
  const bool auxiliary = count < 3;
  const Index width = count + (auxiliary ? 1 : 0);
  SignMatrix weights(width, n1);
  Eigen::VectorXd thresholds(width);
  for (Index c = 0; c < count; ++c) {
    weights.row(c) = cells[static_cast<std::size_t>(c)].code.transpose();
    thresholds(c) = static_cast<double>(n1 - 1);
  }
  Eigen::VectorXd out(width);
  if (auxiliary) {
    weights.row(count).setOnes();
    thresholds(count) = -static_cast<double>(n1) - 1.0;
    if (count == 1) {
      out << 0.0, values(0);
    } else {
      out << (values(0) - values(1)) / 4.0, -(values(0) - values(1)) / 4.0, (values(0) + values(1)) / 2.0;
    }
  } else {
    out = solve_output_weights(values);
  }

  std::vector<HiddenLayer> hidden;
  hidden.push_back(std::move(first));
  hidden.emplace_back(std::move(weights), std::move(thresholds));
  return {Bnn(box.dim, std::move(hidden), RealWeights{std::move(out)}), std::move(partition), count};
}

double audit_error(const Bnn& bnn, const FunctionOracle& oracle, const Box& box, Index grid_points_per_axis) {
  check_box(box);
  if (grid_points_per_axis < 2) throw InvalidArgument("audit grid needs at least 2 points per axis");
  if (bnn.input_dim() != box.dim || oracle.dim != box.dim) {
    throw DimensionError("audit: network, oracle and box dimensions must agree");
  }
  const auto g = static_cast<std::uint64_t>(grid_points_per_axis);
  std::uint64_t total = 1;
  for (Index i = 0; i < box.dim; ++i) {
    if (total > (std::uint64_t{1} << 40) / g) throw CapacityError("audit grid too large");
    total *= g;
  }
  std::vector<double> axis(static_cast<std::size_t>(g));
  for (std::uint64_t k = 0; k < g; ++k) {
    axis[k] = box.lo + (box.hi - box.lo) * static_cast<double>(k) / static_cast<double>(g - 1);
  }
  axis.back() = box.hi;

  const PackedBnn packed(bnn);
  std::vector<double> chunk_max;
  std::mutex lock;
  detail::parallel_chunks(static_cast<std::size_t>(total), [&](std::size_t begin, std::size_t end) {
    double local = 0.0;
    Eigen::VectorXd x(box.dim);
    for (std::size_t p = begin; p < end; ++p) {
      std::uint64_t rest = p;
      for (Index i = box.dim - 1; i >= 0; --i) {
        x(i) = axis[rest % g];
        rest /= g;
      }
      const double fx = oracle(x);
      if (!std::isfinite(fx)) throw OracleError("function returned a non-finite value during audit");
      local = std::max(local, std::abs(packed.forward(x) - fx));
    }
    std::scoped_lock guard(lock);
    chunk_max.push_back(local);
  });
  return *std::max_element(chunk_max.begin(), chunk_max.end());
}

}  // namespace fcbnn
