#pragma once

// Two-hidden-layer approximation of a Lipschitz function on a box [lo,hi]^d.
//
// First layer: for each ±1 direction v^i, neurons with weights v^i and
// thresholds m^i_1 + xi * s. Their outputs form one thermometer code per
// direction, which pins down the parallelotope cell containing the input.
// Second layer: one matching neuron per reachable code (threshold n1 - 1),
// and output weights solving the matching system so that each cell maps to
// f at a representative point of the cell. With cell diameter below
// eps/lambda, the sup error stays below eps.

#include <compare>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "fcbnn/core.hpp"

namespace fcbnn {

// The cube [lo, hi]^dim.
struct Box {
  Index dim = 1;
  double lo = 0.0;
  double hi = 1.0;
};

// Row 0 is (1,...,1); row i >= 1 is row 0 with coordinate i-1 negated.
SignMatrix direction_family(Index dim);

struct ParallelotopePartition {
  Box box;
  SignMatrix directions;
  double edge = 0.0;
  // Range of x . v^i over the box.
  Eigen::VectorXd extent_min;
  Eigen::VectorXd extent_max;
  // thresholds[i][xi] = extent_min(i) + xi * edge, xi = 0 .. ceil(range / edge).
  std::vector<Eigen::VectorXd> thresholds;

  Index dim() const noexcept { return box.dim; }
  Index threshold_count(Index i) const { return thresholds.at(static_cast<std::size_t>(i)).size(); }
  Index first_layer_width() const;
  // Product of per-direction interval counts.
  std::uint64_t candidate_cells() const;
  // Conservative cell diameter bound edge * d * sqrt(d).
  double diameter_bound() const;
};

struct PartitionOptions {
  std::uint64_t max_cells = std::uint64_t{1} << 24;
};

// Edge s = eps / (lambda * d * sqrt(d) * (1 + 1e-6)), capped at the largest
// extent range. Throws CapacityError when the cell count exceeds the cap.
ParallelotopePartition make_partition(const Box& box, double lambda, double epsilon,
                                      const PartitionOptions& options = {});
ParallelotopePartition make_partition_with_edge(const Box& box, double edge,
                                                const PartitionOptions& options = {});

HiddenLayer build_first_layer(const ParallelotopePartition& partition);

// Per-direction number of fired thresholds (the xi of the cell).
struct CellIndex {
  std::vector<Index> xi;

  auto operator<=>(const CellIndex&) const = default;
};

CellIndex locate_cell(const ParallelotopePartition& partition, const Eigen::Ref<const Eigen::VectorXd>& x);
SignVector cell_code(const ParallelotopePartition& partition, const CellIndex& cell);

struct ReachableCell {
  CellIndex index;
  SignVector code;
  // Centre of the cell clamped into the box.
  Eigen::VectorXd base_point;
};

// Cells whose closure meets the box, in lexicographic CellIndex order.
std::vector<ReachableCell> enumerate_reachable_codes(const ParallelotopePartition& partition,
                                                     const PartitionOptions& options = {});

struct FunctionOracle {
  Index dim = 1;
  std::function<double(const Eigen::VectorXd&)> eval;
  double lipschitz = 1.0;
  // True when lipschitz came from sampling rather than a known bound.
  bool lipschitz_estimated = false;

  double operator()(const Eigen::VectorXd& x) const { return eval(x); }
};

struct LipschitzEstimateOptions {
  std::size_t pairs = 100000;
  double inflation = 1.5;
  std::uint64_t seed = 0;
};

// Largest |f(x) - f(y)| / |x - y| over random close pairs in the box.
double sample_lipschitz_ratio(const std::function<double(const Eigen::VectorXd&)>& f, const Box& box,
                              std::size_t pairs, std::uint64_t seed);

// Oracle whose lipschitz is inflation * sample_lipschitz_ratio (floored at 1e-12).
FunctionOracle with_estimated_lipschitz(Index dim, std::function<double(const Eigen::VectorXd&)> f,
                                        const Box& box, const LipschitzEstimateOptions& options = {});

// Nearest-sample extension of scattered values (rows of points). Lipschitz
// is 1.5x the largest pairwise difference quotient among the samples.
FunctionOracle sampled_function_oracle(Eigen::MatrixXd points, Eigen::VectorXd values);

// bump2d (dim 2), linear (f = x1) and coscos (prod cos(pi x_k)), each with a
// known Lipschitz constant.
FunctionOracle builtin_function(std::string_view name, Index dim);
std::vector<std::string> builtin_function_names();

struct LipschitzConstruction {
  Bnn network;
  ParallelotopePartition partition;
  Index reachable_cells = 0;
};

LipschitzConstruction build_lipschitz_network(const FunctionOracle& oracle, const Box& box, double epsilon,
                                              const PartitionOptions& options = {});

inline Bnn construct_lipschitz(const FunctionOracle& oracle, const Box& box, double epsilon,
                               const PartitionOptions& options = {}) {
  return build_lipschitz_network(oracle, box, epsilon, options).network;
}

// max |forward(bnn, x) - oracle(x)| over the regular grid with
// grid_points_per_axis points per axis, corners included.
double audit_error(const Bnn& bnn, const FunctionOracle& oracle, const Box& box, Index grid_points_per_axis);

}  // namespace fcbnn
