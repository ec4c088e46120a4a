#include "fcbnn/cli.hpp"

#include <algorithm>
#include <chrono>
#include <charconv>
#include <cmath>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "fcbnn/binarize.hpp"
#include "fcbnn/counterexample.hpp"
#include "fcbnn/exact.hpp"
#include "fcbnn/io.hpp"
#include "fcbnn/lipschitz.hpp"
#include "fcbnn/random.hpp"

namespace fcbnn::cli {

namespace {

// Raised for inputs that pass CLI11 but fail semantic validation.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::vector<double> parse_reals(const std::string& text, const std::string& what) {
  std::vector<double> values;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto end = std::min(text.find(',', start), text.size());
    double v = 0.0;
    const char* first = text.data() + start;
    const char* last = text.data() + end;
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (first == last || ec != std::errc{} || ptr != last || !std::isfinite(v)) {
      throw UsageError(what + ": cannot parse '" + text + "' as comma-separated numbers");
    }
    values.push_back(v);
    start = end + 1;
  }
  return values;
}

Box parse_box(const std::string& text, Index dim) {
  const auto v = parse_reals(text, "--box");
  if (v.size() != 2 || !(v[0] < v[1])) throw UsageError("--box expects 'lo,hi' with lo < hi");
  return Box{dim, v[0], v[1]};
}

std::string real(double v) { return io::format_shortest(v); }

struct Context {
  std::ostream& out;
  std::ostream& err;
};

// ---------------------------------------------------------------------------

struct ConstructBinaryArgs {
  std::string table;
  std::string out;
  Index max_dim = 20;
};

int construct_binary(const ConstructBinaryArgs& a, Context& ctx) {
  const TruthTable table = io::load_table(std::filesystem::path(a.table));
  const Bnn bnn = construct_exact(table, ExactOptions{a.max_dim});
  io::save_model(std::filesystem::path(a.out), bnn);
  double max_error = 0.0;
  for (Index j = 0; j < table.size(); ++j) {
    max_error = std::max(max_error, std::abs(forward(bnn, table.input(j).cast<double>()) - table.value(j)));
  }
  const double tol = 1e-9 * (1.0 + table.values().cwiseAbs().maxCoeff());
  ctx.out << "neurons=" << bnn.hidden().front().width() << '\n';
  ctx.out << "max_error=" << real(max_error) << '\n';
  return max_error <= tol ? kExitOk : kExitGuarantee;
}

// ---------------------------------------------------------------------------

struct FunctionArgs {
  std::string func;
  std::string samples;
  std::string box = "-1,1";
  Index dim = 2;
};

FunctionOracle make_oracle(const FunctionArgs& a, Index dim) {
  if (!a.samples.empty()) {
    auto set = io::load_samples(std::filesystem::path(a.samples));
    if (set.points.cols() != dim) {
      throw UsageError("sample file has dimension " + std::to_string(set.points.cols()) + ", expected " +
                       std::to_string(dim));
    }
    return sampled_function_oracle(std::move(set.points), std::move(set.values));
  }
  return builtin_function(a.func, dim);
}

struct ConstructLipschitzArgs {
  FunctionArgs function;
  double epsilon = 0.0;
  std::string lambda = "auto";
  std::string out;
  std::uint64_t seed = 0;
  std::uint64_t max_cells = std::uint64_t{1} << 24;
};

int construct_lipschitz_cmd(const ConstructLipschitzArgs& a, Context& ctx) {
  Index dim = a.function.dim;
  if (!a.function.samples.empty()) {
    dim = io::load_samples(std::filesystem::path(a.function.samples)).points.cols();
  }
  const Box box = parse_box(a.function.box, dim);
  FunctionOracle oracle = make_oracle(a.function, dim);
  if (a.lambda == "auto") {
    if (a.function.samples.empty()) {
      oracle = with_estimated_lipschitz(dim, oracle.eval, box, LipschitzEstimateOptions{100000, 1.5, a.seed});
    }
  } else {
    const auto v = parse_reals(a.lambda, "--lambda");
    if (v.size() != 1 || !(v[0] > 0.0)) throw UsageError("--lambda expects a positive number or 'auto'");
    oracle.lipschitz = v[0];
    oracle.lipschitz_estimated = false;
  }
  const auto built = build_lipschitz_network(oracle, box, a.epsilon, PartitionOptions{a.max_cells});
  io::save_model(std::filesystem::path(a.out), built.network);
  ctx.out << "function=" << (a.function.samples.empty() ? a.function.func : "samples") << '\n';
  ctx.out << "lambda=" << real(oracle.lipschitz) << '\n';
  ctx.out << "lambda_source=" << (oracle.lipschitz_estimated ? "estimated" : "supplied") << '\n';
  ctx.out << "edge=" << real(built.partition.edge) << '\n';
  ctx.out << "first_layer=" << built.partition.first_layer_width() << '\n';
  ctx.out << "cells=" << built.reachable_cells << '\n';
  ctx.out << "guarantee=" << (oracle.lipschitz_estimated ? "empirical" : "proven") << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct BinarizeArgs {
  std::string model;
  std::string out;
  double epsilon = 0.0;
  double k_bound = 1.0;
  std::size_t samples = 1000;
  std::uint64_t seed = 0;
  std::string box;
};

int binarize_cmd(const BinarizeArgs& a, Context& ctx) {
  const Bnn bnn = io::load_model(std::filesystem::path(a.model));
  const auto result = binarize_output(bnn, a.epsilon, a.k_bound);
  if (result.warning) ctx.err << "warning: " << *result.warning << '\n';
  io::save_model(std::filesystem::path(a.out), result.network);

  std::optional<Box> box;
  if (!a.box.empty()) box = parse_box(a.box, bnn.input_dim());
  const PackedBnn before(bnn);
  const PackedBnn after(result.network);
  Rng rng(a.seed);
  Eigen::VectorXd x(bnn.input_dim());
  double deviation = 0.0;
  for (std::size_t s = 0; s < a.samples; ++s) {
    for (Index i = 0; i < x.size(); ++i) x(i) = box ? rng.uniform(box->lo, box->hi) : double(rng.sign());
    deviation = std::max(deviation, std::abs(before.forward(x) - after.forward(x)));
  }
  ctx.out << "q=" << result.rationalized.denominator << '\n';
  ctx.out << "expansion=" << result.rationalized.expansion() << '\n';
  ctx.out << "width=" << result.network.hidden().back().width() << '\n';
  ctx.out << "max_deviation=" << real(deviation) << '\n';
  return deviation < a.epsilon || result.warning ? kExitOk : kExitGuarantee;
}

// ---------------------------------------------------------------------------

struct EvalArgs {
  std::string model;
  std::vector<std::string> inputs;
  std::string engine = "dense";
};

int eval_cmd(const EvalArgs& a, Context& ctx) {
  const Bnn bnn = io::load_model(std::filesystem::path(a.model));
  const Engine engine = a.engine == "packed" ? Engine::packed : Engine::dense;
  const PackedBnn packed(bnn);
  for (const auto& text : a.inputs) {
    const auto v = parse_reals(text, "--input");
    const Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Index>(v.size()));
    const double y = engine == Engine::packed ? packed.forward(x) : forward(bnn, x, Engine::dense);
    ctx.out << "output=" << io::format_real(y) << '\n';
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct VerifyArgs {
  std::string model;
  std::string table;
  FunctionArgs function;
  Index grid = 64;
  std::optional<double> epsilon;
};

int verify_cmd(const VerifyArgs& a, Context& ctx) {
  const Bnn bnn = io::load_model(std::filesystem::path(a.model));
  if (!a.table.empty()) {
    const TruthTable table = io::load_table(std::filesystem::path(a.table));
    if (table.dim() != bnn.input_dim()) throw UsageError("table dimension does not match model input_dim");
    double max_error = 0.0;
    for (Index j = 0; j < table.size(); ++j) {
      max_error = std::max(max_error, std::abs(forward(bnn, table.input(j).cast<double>()) - table.value(j)));
    }
    ctx.out << "max_error=" << real(max_error) << '\n';
    if (a.epsilon) return max_error < *a.epsilon ? kExitOk : kExitGuarantee;
    return max_error <= 1e-9 * (1.0 + table.values().cwiseAbs().maxCoeff()) ? kExitOk : kExitGuarantee;
  }
  const Box box = parse_box(a.function.box, bnn.input_dim());
  const FunctionOracle oracle = make_oracle(a.function, bnn.input_dim());
  const double max_error = audit_error(bnn, oracle, box, a.grid);
  ctx.out << "grid=" << a.grid << '\n';
  ctx.out << "max_error=" << real(max_error) << '\n';
  if (a.epsilon && !(max_error < *a.epsilon)) return kExitGuarantee;
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct CounterexampleArgs {
  std::uint64_t trials = 10000;
  std::uint64_t seed = 42;
  Index max_width = 64;
  std::string report;
};

int counterexample_cmd(const CounterexampleArgs& a, Context& ctx) {
  const auto cert = certify_random_networks(a.trials, a.seed, a.max_width);
  if (!a.report.empty()) {
    io::Report report{{"trial", "width", "seed", "M"}, {}};
    report.rows.reserve(cert.rows.size());
    for (const auto& row : cert.rows) {
      report.rows.push_back({std::to_string(row.trial), std::to_string(row.width), std::to_string(row.seed),
                             io::format_real(row.m)});
    }
    io::write_report(std::filesystem::path(a.report), report);
  }
  ctx.out << "trials=" << a.trials << '\n';
  ctx.out << "min_M=" << io::format_real(cert.min_m) << '\n';
  return cert.rows.empty() || cert.min_m >= 0.5 - 1e-12 ? kExitOk : kExitGuarantee;
}

// ---------------------------------------------------------------------------

struct BenchArgs {
  std::string widths = "64,256,1024";
  Index input_dim = 64;
  Index depth = 2;
  std::size_t evals = 2000;
  std::uint64_t seed = 1;
};

int bench_cmd(const BenchArgs& a, Context& ctx) {
  io::Report report{{"width", "engine", "evals_per_second"}, {}};
  bool agree = true;
  for (const double w : parse_reals(a.widths, "--widths")) {
    if (!(w >= 1.0) || w != std::floor(w)) throw UsageError("--widths expects positive integers");
    Rng rng(derive_seed(a.seed, static_cast<std::uint64_t>(w)));
    RandomBnnShape shape;
    shape.input_dim = a.input_dim;
    shape.widths.assign(static_cast<std::size_t>(a.depth), static_cast<Index>(w));
    shape.threshold_lo = -4.0;
    shape.threshold_hi = 4.0;
    const Bnn bnn = random_bnn(rng, shape);
    const PackedBnn packed(bnn);
    std::vector<Eigen::VectorXd> inputs;
    for (std::size_t k = 0; k < a.evals; ++k) inputs.push_back(random_signs(rng, a.input_dim).cast<double>());

    std::vector<double> dense_out(inputs.size());
    std::vector<double> packed_out(inputs.size());
    const auto time = [&](auto&& body) {
      const auto start = std::chrono::steady_clock::now();
      body();
      const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - start;
      return static_cast<double>(inputs.size()) / std::max(dt.count(), 1e-9);
    };
    const double dense_rate = time([&] {
      for (std::size_t k = 0; k < inputs.size(); ++k) dense_out[k] = forward(bnn, inputs[k]);
    });
    const double packed_rate = time([&] {
      for (std::size_t k = 0; k < inputs.size(); ++k) packed_out[k] = packed.forward(inputs[k]);
    });
    agree = agree && dense_out == packed_out;
    report.rows.push_back({std::to_string(static_cast<Index>(w)), "dense", real(std::round(dense_rate))});
    report.rows.push_back({std::to_string(static_cast<Index>(w)), "packed", real(std::round(packed_rate))});
  }
  io::write_report(ctx.out, report);
  return agree ? kExitOk : kExitGuarantee;
}

void add_function_options(CLI::App* cmd, FunctionArgs& f, bool with_dim) {
  auto* func = cmd->add_option("--func", f.func, "Built-in function: bump2d, linear, coscos")
                   ->check(CLI::IsMember(builtin_function_names()));
  auto* samples = cmd->add_option("--samples", f.samples, "Sample file (dim=<d> header, x...,value rows)");
  func->excludes(samples);
  cmd->add_option("--box", f.box, "Box bounds lo,hi applied to every axis")->capture_default_str();
  if (with_dim) cmd->add_option("--dim", f.dim, "Input dimension")->capture_default_str()->check(CLI::PositiveNumber);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Constructors, transforms and audits for fully connected binarized neural networks", "fcbnn"};
  app.require_subcommand(1);

  ConstructBinaryArgs cb;
  auto* cmd_cb = app.add_subcommand("construct-binary", "Build an exact single-hidden-layer network from a truth table");
  cmd_cb->add_option("--table", cb.table, "Truth table file")->required();
  cmd_cb->add_option("--out", cb.out, "Output model file")->required();
  cmd_cb->add_option("--max-dim", cb.max_dim, "Largest accepted input dimension")->capture_default_str();

  ConstructLipschitzArgs cl;
  auto* cmd_cl = app.add_subcommand("construct-lipschitz", "Build a two-hidden-layer epsilon-approximation");
  add_function_options(cmd_cl, cl.function, true);
  cmd_cl->add_option("--epsilon", cl.epsilon, "Target sup error")->required()->check(CLI::PositiveNumber);
  cmd_cl->add_option("--lambda", cl.lambda, "Lipschitz constant or 'auto'")->capture_default_str();
  cmd_cl->add_option("--out", cl.out, "Output model file")->required();
  cmd_cl->add_option("--seed", cl.seed, "Seed for lambda estimation")->capture_default_str();
  cmd_cl->add_option("--max-cells", cl.max_cells, "Cell count cap")->capture_default_str();

  BinarizeArgs bo;
  auto* cmd_bo = app.add_subcommand("binarize-output", "Replace real output weights by signs and a 1/q scale");
  cmd_bo->add_option("--model", bo.model, "Input model file")->required();
  cmd_bo->add_option("--epsilon", bo.epsilon, "Allowed output deviation")->required()->check(CLI::PositiveNumber);
  cmd_bo->add_option("--out", bo.out, "Output model file")->required();
  cmd_bo->add_option("--k-bound", bo.k_bound, "Bound on last hidden activations")->capture_default_str();
  cmd_bo->add_option("--samples", bo.samples, "Inputs sampled to measure the deviation")->capture_default_str();
  cmd_bo->add_option("--seed", bo.seed, "Sampling seed")->capture_default_str();
  cmd_bo->add_option("--box", bo.box, "Sample real inputs from [lo,hi]^d instead of {-1,1}^d");

  EvalArgs ev;
  auto* cmd_ev = app.add_subcommand("eval", "Evaluate a model on inputs");
  cmd_ev->add_option("--model", ev.model, "Model file")->required();
  cmd_ev->add_option("--input", ev.inputs, "Comma-separated input vector (repeatable)")->required();
  cmd_ev->add_option("--engine", ev.engine, "dense or packed")
      ->capture_default_str()
      ->check(CLI::IsMember({"dense", "packed"}));

  VerifyArgs vf;
  auto* cmd_vf = app.add_subcommand("verify", "Measure a model's error against a table or function");
  cmd_vf->add_option("--model", vf.model, "Model file")->required();
  auto* vf_table = cmd_vf->add_option("--table", vf.table, "Truth table file");
  add_function_options(cmd_vf, vf.function, false);
  vf_table->excludes("--func")->excludes("--samples");
  cmd_vf->add_option("--grid", vf.grid, "Grid points per axis")->capture_default_str()->check(CLI::Range(Index{2}, Index{1} << 20));
  cmd_vf->add_option("--epsilon", vf.epsilon, "Fail with exit 2 if the error reaches epsilon");

  CounterexampleArgs ce;
  auto* cmd_ce = app.add_subcommand("counterexample", "Certify the 1/2 lower bound on random single-layer networks");
  cmd_ce->add_option("--trials", ce.trials, "Number of random networks")->capture_default_str();
  cmd_ce->add_option("--seed", ce.seed, "Base seed")->capture_default_str();
  cmd_ce->add_option("--max-width", ce.max_width, "Largest hidden width")->capture_default_str()->check(CLI::PositiveNumber);
  cmd_ce->add_option("--report", ce.report, "CSV report path");

  BenchArgs be;
  auto* cmd_be = app.add_subcommand("bench", "Dense vs packed forward throughput");
  cmd_be->add_option("--widths", be.widths, "Comma-separated hidden widths")->capture_default_str();
  cmd_be->add_option("--input-dim", be.input_dim, "Input dimension")->capture_default_str()->check(CLI::PositiveNumber);
  cmd_be->add_option("--depth", be.depth, "Hidden layers")->capture_default_str()->check(CLI::PositiveNumber);
  cmd_be->add_option("--evals", be.evals, "Evaluations per engine")->capture_default_str();
  cmd_be->add_option("--seed", be.seed, "Network seed")->capture_default_str();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  Context ctx{out, err};
  try {
    if (*cmd_cb) return construct_binary(cb, ctx);
    if (*cmd_cl) {
      if (cl.function.func.empty() == cl.function.samples.empty()) throw UsageError("give exactly one of --func or --samples");
      return construct_lipschitz_cmd(cl, ctx);
    }
    if (*cmd_bo) return binarize_cmd(bo, ctx);
    if (*cmd_ev) return eval_cmd(ev, ctx);
    if (*cmd_vf) {
      const int sources = !vf.table.empty() + !vf.function.func.empty() + !vf.function.samples.empty();
      if (sources != 1) throw UsageError("give exactly one of --table, --func or --samples");
      return verify_cmd(vf, ctx);
    }
    if (*cmd_ce) return counterexample_cmd(ce, ctx);
    if (*cmd_be) return bench_cmd(be, ctx);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace fcbnn::cli
