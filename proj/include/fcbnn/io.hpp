#pragma once

// Text formats for networks, truth tables, sample sets and CSV reports.
//
// Model file:
//   fcbnn-model 1
//   input_dim <d>
//   hidden <n_1> <n_2> ...
//   output real|binary
//   layer 1
//   <+/- string of length fan_in> <threshold>      (one line per neuron)
//   ...
//   output_weights
//   <weight>                                        (real: one per line)
//   <+/- string> alpha=1/<q>                        (binary: single line)
//
// Reals are written with 17 significant digits, which round-trips doubles.
// Header fields are separated by exactly one space.
//
// Table file: "dim=<d>", then one "x_1,...,x_d,value" line per input with
// x_k in {-1, 1}. Sample files use the same layout with real coordinates.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "fcbnn/core.hpp"
#include "fcbnn/exact.hpp"

namespace fcbnn::io {

std::string format_real(double value);       // 17 significant digits
std::string format_shortest(double value);   // shortest round-trip form

void save_model(std::ostream& out, const Bnn& bnn);
Bnn load_model(std::istream& in);
void save_model(const std::filesystem::path& path, const Bnn& bnn);
Bnn load_model(const std::filesystem::path& path);

void save_table(std::ostream& out, const TruthTable& table);
TruthTable load_table(std::istream& in);
void save_table(const std::filesystem::path& path, const TruthTable& table);
TruthTable load_table(const std::filesystem::path& path);

struct SampleSet {
  Eigen::MatrixXd points;  // one sample per row
  Eigen::VectorXd values;
};

SampleSet load_samples(std::istream& in);
SampleSet load_samples(const std::filesystem::path& path);

struct Report {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
};

// Header line then one comma-separated line per row.
void write_report(std::ostream& out, const Report& report);
void write_report(const std::filesystem::path& path, const Report& report);

}  // namespace fcbnn::io
