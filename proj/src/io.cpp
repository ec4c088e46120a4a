#include "fcbnn/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <string_view>

namespace fcbnn::io {

namespace {

constexpr std::string_view kMagic = "fcbnn-model 1";

class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  // Next line; throws at end of input.
  std::string next(std::string_view expecting) {
    std::string line;
    if (!std::getline(in_, line)) {
      ++line_;
      fail("unexpected end of file, expected " + std::string(expecting));
    }
    ++line_;
    return line;
  }

  bool next_optional(std::string& line) {
    if (!std::getline(in_, line)) return false;
    ++line_;
    return true;
  }

  [[noreturn]] void fail(const std::string& message) const { throw ParseError(line_ == 0 ? 1 : line_, message); }

  std::size_t line() const noexcept { return line_; }

 private:
  std::istream& in_;
  std::size_t line_ = 0;
};

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    parts.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

bool parse_count(std::string_view s, Index& value) {
  if (s.empty() || (s.size() > 1 && s.front() == '0')) return false;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  return ec == std::errc{} && ptr == s.data() + s.size();
}

bool parse_real(std::string_view s, double& value) {
  if (s.empty()) return false;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  return ec == std::errc{} && ptr == s.data() + s.size() && std::isfinite(value);
}

Index expect_count_field(LineReader& reader, const std::string& line, std::string_view key) {
  const auto parts = split(line, ' ');
  Index value = 0;
  if (parts.size() != 2 || parts[0] != key || !parse_count(parts[1], value) || value < 1) {
    reader.fail("expected '" + std::string(key) + " <positive integer>', got '" + line + "'");
  }
  return value;
}

SignVector parse_sign_string(LineReader& reader, std::string_view s, Index expected) {
  if (static_cast<Index>(s.size()) != expected) {
    reader.fail("sign string has " + std::to_string(s.size()) + " characters, expected " + std::to_string(expected));
  }
  SignVector v(expected);
  for (Index i = 0; i < expected; ++i) {
    const char c = s[static_cast<std::size_t>(i)];
    if (c == '+') {
      v(i) = 1;
    } else if (c == '-') {
      v(i) = -1;
    } else {
      reader.fail(std::string("invalid weight character '") + c + "' at column " + std::to_string(i + 1));
    }
  }
  return v;
}

std::string sign_string(const auto& signs) {
  std::string s(static_cast<std::size_t>(signs.size()), '+');
  for (Index i = 0; i < signs.size(); ++i) {
    if (signs(i) < 0) s[static_cast<std::size_t>(i)] = '-';
  }
  return s;
}

void expect_end(LineReader& reader) {
  std::string line;
  if (reader.next_optional(line)) reader.fail("trailing content after output weights");
}

template <typename Writer>
void write_file(const std::filesystem::path& path, Writer writer) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  writer(out);
  out.flush();
  if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  return in;
}

bool skippable(const std::string& line) { return line.empty() || line.front() == '#'; }

Index parse_dim_header(LineReader& reader) {
  std::string line;
  do {
    line = reader.next("'dim=<d>' header");
  } while (skippable(line));
  Index dim = 0;
  if (line.rfind("dim=", 0) != 0 || !parse_count(std::string_view(line).substr(4), dim) || dim < 1) {
    reader.fail("expected header 'dim=<positive integer>', got '" + line + "'");
  }
  return dim;
}

}  // namespace

std::string format_real(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::general, 17);
  return std::string(buf, ptr);
}

std::string format_shortest(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

void save_model(std::ostream& out, const Bnn& bnn) {
  out << kMagic << '\n';
  out << "input_dim " << bnn.input_dim() << '\n';
  out << "hidden";
  for (const auto& layer : bnn.hidden()) out << ' ' << layer.width();
  out << '\n';
  out << "output " << (bnn.has_binary_output() ? "binary" : "real") << '\n';
  for (std::size_t k = 0; k < bnn.hidden().size(); ++k) {
    const auto& layer = bnn.hidden()[k];
    out << "layer " << k + 1 << '\n';
    for (Index j = 0; j < layer.width(); ++j) {
      out << sign_string(layer.weights().row(j)) << ' ' << format_real(layer.thresholds()(j)) << '\n';
    }
  }
  out << "output_weights\n";
  if (const auto* real = std::get_if<RealWeights>(&bnn.output())) {
    for (Index i = 0; i < real->weights.size(); ++i) out << format_real(real->weights(i)) << '\n';
  } else {
    const auto& bin = std::get<BinaryScaled>(bnn.output());
    out << sign_string(bin.signs) << " alpha=1/" << bin.denominator << '\n';
  }
}

Bnn load_model(std::istream& in) {
  LineReader reader(in);
  if (reader.next("model header") != kMagic) reader.fail("expected '" + std::string(kMagic) + "'");
  const Index input_dim = expect_count_field(reader, reader.next("input_dim"), "input_dim");

  const std::string hidden_line = reader.next("hidden widths");
  const auto hidden_parts = split(hidden_line, ' ');
  if (hidden_parts.size() < 2 || hidden_parts[0] != "hidden") {
    reader.fail("expected 'hidden <width> ...', got '" + hidden_line + "'");
  }
  std::vector<Index> widths;
  for (std::size_t k = 1; k < hidden_parts.size(); ++k) {
    Index w = 0;
    if (!parse_count(hidden_parts[k], w) || w < 1) reader.fail("invalid hidden width '" + std::string(hidden_parts[k]) + "'");
    widths.push_back(w);
  }

  const std::string output_line = reader.next("output variant");
  bool binary = false;
  if (output_line == "output binary") {
    binary = true;
  } else if (output_line != "output real") {
    reader.fail("expected 'output real' or 'output binary', got '" + output_line + "'");
  }

  std::vector<HiddenLayer> hidden;
  Index fan_in = input_dim;
  for (std::size_t k = 0; k < widths.size(); ++k) {
    const std::string expected = "layer " + std::to_string(k + 1);
    if (reader.next(expected) != expected) reader.fail("expected '" + expected + "'");
    SignMatrix weights(widths[k], fan_in);
    Eigen::VectorXd thresholds(widths[k]);
    for (Index j = 0; j < widths[k]; ++j) {
      const std::string line = reader.next("neuron row");
      const auto parts = split(line, ' ');
      if (parts.size() != 2) reader.fail("expected '<signs> <threshold>', got '" + line + "'");
      weights.row(j) = parse_sign_string(reader, parts[0], fan_in).transpose();
      if (!parse_real(parts[1], thresholds(j))) reader.fail("invalid threshold '" + std::string(parts[1]) + "'");
    }
    hidden.emplace_back(std::move(weights), std::move(thresholds));
    fan_in = widths[k];
  }

  if (reader.next("output_weights") != "output_weights") reader.fail("expected 'output_weights'");
  OutputLayer output;
  if (binary) {
    const std::string line = reader.next("binary output line");
    const auto parts = split(line, ' ');
    if (parts.size() != 2 || parts[1].rfind("alpha=1/", 0) != 0) {
      reader.fail("expected '<signs> alpha=1/<q>', got '" + line + "'");
    }
    SignVector signs = parse_sign_string(reader, parts[0], fan_in);
    Index q = 0;
    if (!parse_count(parts[1].substr(8), q) || q < 1) reader.fail("invalid scale denominator in '" + line + "'");
    output = BinaryScaled{std::move(signs), static_cast<std::int64_t>(q)};
  } else {
    Eigen::VectorXd w(fan_in);
    for (Index i = 0; i < fan_in; ++i) {
      const std::string line = reader.next("output weight");
      if (!parse_real(line, w(i))) reader.fail("invalid output weight '" + line + "'");
    }
    output = RealWeights{std::move(w)};
  }
  expect_end(reader);
  try {
    return Bnn(input_dim, std::move(hidden), std::move(output));
  } catch (const std::invalid_argument& e) {
    reader.fail(e.what());
  }
}

void save_model(const std::filesystem::path& path, const Bnn& bnn) {
  write_file(path, [&](std::ostream& out) { save_model(out, bnn); });
}

Bnn load_model(const std::filesystem::path& path) {
  auto in = open_input(path);
  return load_model(in);
}

void save_table(std::ostream& out, const TruthTable& table) {
  out << "dim=" << table.dim() << '\n';
  for (Index j = 0; j < table.size(); ++j) {
    const SignVector x = table.input(j);
    for (Index k = 0; k < x.size(); ++k) out << (x(k) > 0 ? "1" : "-1") << ',';
    out << format_real(table.value(j)) << '\n';
  }
}

TruthTable load_table(std::istream& in) {
  LineReader reader(in);
  const Index dim = parse_dim_header(reader);
  if (dim > kMaxTableDim) reader.fail("table dimension " + std::to_string(dim) + " is too large");
  std::vector<std::pair<SignVector, double>> entries;
  std::vector<std::size_t> seen_at(static_cast<std::size_t>(Index{1} << dim), 0);
  std::string line;
  while (reader.next_optional(line)) {
    if (skippable(line)) continue;
    const auto parts = split(line, ',');
    if (static_cast<Index>(parts.size()) != dim + 1) {
      reader.fail("expected " + std::to_string(dim) + " inputs and a value, got " + std::to_string(parts.size()) + " fields");
    }
    SignVector x(dim);
    for (Index k = 0; k < dim; ++k) {
      const auto f = parts[static_cast<std::size_t>(k)];
      if (f == "1" || f == "+1") {
        x(k) = 1;
      } else if (f == "-1") {
        x(k) = -1;
      } else {
        reader.fail("input field '" + std::string(f) + "' is not 1 or -1");
      }
    }
    double v = 0.0;
    if (!parse_real(parts.back(), v)) reader.fail("invalid value '" + std::string(parts.back()) + "'");
    auto& first = seen_at[static_cast<std::size_t>(canonical_index(x))];
    if (first != 0) reader.fail("duplicate input, first given on line " + std::to_string(first));
    first = reader.line();
    entries.emplace_back(std::move(x), v);
  }
  return TruthTable::from_entries(dim, entries);
}

void save_table(const std::filesystem::path& path, const TruthTable& table) {
  write_file(path, [&](std::ostream& out) { save_table(out, table); });
}

TruthTable load_table(const std::filesystem::path& path) {
  auto in = open_input(path);
  return load_table(in);
}

SampleSet load_samples(std::istream& in) {
  LineReader reader(in);
  const Index dim = parse_dim_header(reader);
  std::vector<double> flat;
  std::vector<double> values;
  std::string line;
  while (reader.next_optional(line)) {
    if (skippable(line)) continue;
    const auto parts = split(line, ',');
    if (static_cast<Index>(parts.size()) != dim + 1) {
      reader.fail("expected " + std::to_string(dim) + " coordinates and a value, got " + std::to_string(parts.size()) + " fields");
    }
    for (const auto f : parts) {
      double v = 0.0;
      if (!parse_real(f, v)) reader.fail("invalid number '" + std::string(f) + "'");
      flat.push_back(v);
    }
    values.push_back(flat.back());
    flat.pop_back();
  }
  if (values.empty()) reader.fail("sample file has no samples");
  SampleSet set;
  const auto n = static_cast<Index>(values.size());
  set.points = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(flat.data(), n, dim);
  set.values = Eigen::Map<const Eigen::VectorXd>(values.data(), n);
  return set;
}

SampleSet load_samples(const std::filesystem::path& path) {
  auto in = open_input(path);
  return load_samples(in);
}

void write_report(std::ostream& out, const Report& report) {
  for (std::size_t c = 0; c < report.columns.size(); ++c) out << (c ? "," : "") << report.columns[c];
  out << '\n';
  for (const auto& row : report.rows) {
    if (row.size() != report.columns.size()) throw DimensionError("report row width does not match columns");
    for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << row[c];
    out << '\n';
  }
}

void write_report(const std::filesystem::path& path, const Report& report) {
  write_file(path, [&](std::ostream& out) { write_report(out, report); });
}

}  // namespace fcbnn::io
