#pragma once

// Fully connected binarized networks: ±1 hidden weights, real thresholds,
// real or binary-plus-scale output layer. Two forward engines are provided,
// a dense one doing plain ±1 arithmetic and a packed one doing XNOR/popcount
// on 64-bit words. They agree bit for bit wherever both apply.

#include <algorithm>
#include <bit>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "fcbnn/error.hpp"

namespace fcbnn {

using Index = Eigen::Index;
using Sign = std::int8_t;
using SignVector = Eigen::Matrix<Sign, Eigen::Dynamic, 1>;
using SignMatrix = Eigen::Matrix<Sign, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Word = std::uint64_t;

inline constexpr Index kWordBits = 64;

inline constexpr Index words_for_bits(Index bits) { return (bits + kWordBits - 1) / kWordBits; }

// +1 iff t > b, else -1. Throws InvalidArgument on non-finite arguments.
Sign activate(double t, double b);

namespace detail {
inline Sign sigma(double t, double b) noexcept { return t > b ? Sign{1} : Sign{-1}; }
}  // namespace detail

// Pre-activation sum_i w_i x_i, accumulated left to right so the result is
// reproducible. For ±1 inputs it is an integer with the parity of the length.
template <typename WeightDerived, typename InputDerived>
auto mac_dense(const Eigen::MatrixBase<WeightDerived>& weights,
               const Eigen::MatrixBase<InputDerived>& input) {
  using Acc = decltype(double{} * typename InputDerived::Scalar{});
  if (weights.size() != input.size()) {
    throw DimensionError("mac_dense: weight length " + std::to_string(weights.size()) +
                         " != input length " + std::to_string(input.size()));
  }
  Acc acc{0};
  for (Index i = 0; i < weights.size(); ++i) {
    acc += static_cast<Acc>(weights.coeff(i)) * static_cast<Acc>(input.coeff(i));
  }
  return acc;
}

class HiddenLayer {
 public:
  // Row j holds the incoming weights of neuron j. Throws ValidationError
  // unless every weight is ±1, thresholds are finite and one per row.
  HiddenLayer(SignMatrix weights, Eigen::VectorXd thresholds);

  const SignMatrix& weights() const noexcept { return weights_; }
  const Eigen::VectorXd& thresholds() const noexcept { return thresholds_; }
  Index width() const noexcept { return weights_.rows(); }
  Index fan_in() const noexcept { return weights_.cols(); }

  friend bool operator==(const HiddenLayer& a, const HiddenLayer& b);

 private:
  SignMatrix weights_;
  Eigen::VectorXd thresholds_;
};

struct RealWeights {
  Eigen::VectorXd weights;
};

// Output sum_i signs_i * phi_i scaled by alpha = 1/denominator.
struct BinaryScaled {
  SignVector signs;
  std::int64_t denominator = 1;

  double alpha() const noexcept { return 1.0 / static_cast<double>(denominator); }
};

using OutputLayer = std::variant<RealWeights, BinaryScaled>;

Index output_fan_in(const OutputLayer& output);
bool operator==(const RealWeights& a, const RealWeights& b);
bool operator==(const BinaryScaled& a, const BinaryScaled& b);

class Bnn {
 public:
  // Validates the layer chain: hidden[0] has input_dim columns, each later
  // layer consumes the previous width, the output consumes the last width.
  Bnn(Index input_dim, std::vector<HiddenLayer> hidden, OutputLayer output);

  Index input_dim() const noexcept { return input_dim_; }
  const std::vector<HiddenLayer>& hidden() const noexcept { return hidden_; }
  const OutputLayer& output() const noexcept { return output_; }
  bool has_binary_output() const noexcept {
    return std::holds_alternative<BinaryScaled>(output_);
  }

  friend bool operator==(const Bnn& a, const Bnn& b);

 private:
  Index input_dim_;
  std::vector<HiddenLayer> hidden_;
  OutputLayer output_;
};

enum class Engine { dense, packed };

// Hidden-layer response to an arbitrary real input, dense arithmetic.
SignVector apply_layer(const HiddenLayer& layer, const Eigen::Ref<const Eigen::VectorXd>& input);

// out(phi) for the last hidden activations phi.
double evaluate_output(const OutputLayer& output, const SignVector& phi);

bool is_sign_vector(const Eigen::Ref<const Eigen::VectorXd>& x);

// Network output. The packed engine uses XNOR/popcount for every layer whose
// input is ±1; a real-valued input makes the first layer fall back to dense.
double forward(const Bnn& bnn, const Eigen::Ref<const Eigen::VectorXd>& x,
               Engine engine = Engine::dense);

// ---------------------------------------------------------------------------
// Bit packing. Bit k of word k/64 (LSB first) stores element k, 1 <-> +1.

template <typename Derived>
std::vector<Word> pack_signs(const Eigen::MatrixBase<Derived>& values) {
  std::vector<Word> words(static_cast<std::size_t>(words_for_bits(values.size())), 0);
  for (Index i = 0; i < values.size(); ++i) {
    if (values.coeff(i) > 0) words[static_cast<std::size_t>(i / kWordBits)] |= Word{1} << (i % kWordBits);
  }
  return words;
}

SignVector unpack_signs(std::span<const Word> words, Index n);

namespace detail {
inline std::int64_t mac_packed_unchecked(const Word* row, const Word* input, Index n) noexcept {
  const Index full = n / kWordBits;
  const Index rem = n % kWordBits;
  std::int64_t ones = 0;
  for (Index w = 0; w < full; ++w) ones += std::popcount(~(row[w] ^ input[w]));
  if (rem != 0) {
    const Word mask = (Word{1} << rem) - 1;
    ones += std::popcount(~(row[full] ^ input[full]) & mask);
  }
  return 2 * ones - static_cast<std::int64_t>(n);
}
}  // namespace detail

// 2 * popcount(XNOR(row, input)) - n over the first n bits. Bits past n are
// masked off, so padding never contributes.
inline std::int64_t mac_packed(std::span<const Word> row, std::span<const Word> input, Index n) {
  const auto capacity = static_cast<Index>(std::min(row.size(), input.size())) * kWordBits;
  if (n < 0 || n > capacity) {
    throw DimensionError("mac_packed: " + std::to_string(n) + " bits exceed operand capacity " +
                         std::to_string(capacity));
  }
  return detail::mac_packed_unchecked(row.data(), input.data(), n);
}

class PackedLayer {
 public:
  // words holds width rows of words_for_bits(valid_bits) words each.
  PackedLayer(std::vector<Word> words, Index valid_bits, Eigen::VectorXd thresholds);

  Index width() const noexcept { return thresholds_.size(); }
  Index valid_bits() const noexcept { return valid_bits_; }
  Index words_per_row() const noexcept { return words_per_row_; }
  const Eigen::VectorXd& thresholds() const noexcept { return thresholds_; }
  std::span<const Word> row(Index j) const noexcept {
    return {words_.data() + j * words_per_row_, static_cast<std::size_t>(words_per_row_)};
  }
  std::span<const Word> words() const noexcept { return words_; }

  // Activations of all neurons for a packed ±1 input, packed again.
  std::vector<Word> apply(std::span<const Word> input) const;

 private:
  std::vector<Word> words_;
  Index valid_bits_;
  Index words_per_row_;
  Eigen::VectorXd thresholds_;
};

PackedLayer pack_layer(const HiddenLayer& layer);
HiddenLayer unpack_layer(const PackedLayer& packed);

// Bnn with every hidden layer pre-packed, for repeated packed evaluation.
// Keeps the dense first layer for real-valued inputs.
class PackedBnn {
 public:
  explicit PackedBnn(const Bnn& bnn);

  Index input_dim() const noexcept { return first_dense_.fan_in(); }
  double forward(const Eigen::Ref<const Eigen::VectorXd>& x) const;

 private:
  HiddenLayer first_dense_;
  std::vector<PackedLayer> layers_;
  OutputLayer output_;
};

}  // namespace fcbnn
