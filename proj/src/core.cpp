#include "fcbnn/core.hpp"

#include <cmath>

namespace fcbnn {

namespace {

template <typename A, typename B>
bool same_matrix(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && (a.size() == 0 || a == b);
}

}  // namespace

Sign activate(double t, double b) {
  if (!std::isfinite(t) || !std::isfinite(b)) {
    throw InvalidArgument("activate: non-finite argument");
  }
  return detail::sigma(t, b);
}

HiddenLayer::HiddenLayer(SignMatrix weights, Eigen::VectorXd thresholds)
    : weights_(std::move(weights)), thresholds_(std::move(thresholds)) {
  if (weights_.rows() < 1 || weights_.cols() < 1) {
    throw ValidationError("hidden layer must have at least one neuron and one input");
  }
  if (thresholds_.size() != weights_.rows()) {
    throw ValidationError("hidden layer has " + std::to_string(weights_.rows()) + " rows but " +
                          std::to_string(thresholds_.size()) + " thresholds");
  }
  for (Index j = 0; j < weights_.rows(); ++j) {
    for (Index i = 0; i < weights_.cols(); ++i) {
      const Sign w = weights_(j, i);
      if (w != 1 && w != -1) {
        throw ValidationError("hidden weight (" + std::to_string(j) + ", " + std::to_string(i) +
                              ") is " + std::to_string(int{w}) + ", expected +1 or -1");
      }
    }
    if (!std::isfinite(thresholds_(j))) {
      throw ValidationError("threshold " + std::to_string(j) + " is not finite");
    }
  }
}

bool operator==(const HiddenLayer& a, const HiddenLayer& b) {
  return same_matrix(a.weights_, b.weights_) && same_matrix(a.thresholds_, b.thresholds_);
}

bool operator==(const RealWeights& a, const RealWeights& b) { return same_matrix(a.weights, b.weights); }

bool operator==(const BinaryScaled& a, const BinaryScaled& b) {
  return a.denominator == b.denominator && same_matrix(a.signs, b.signs);
}

Index output_fan_in(const OutputLayer& output) {
  return std::visit([](const auto& o) -> Index {
    if constexpr (std::is_same_v<std::decay_t<decltype(o)>, RealWeights>) {
      return o.weights.size();
    } else {
      return o.signs.size();
    }
  }, output);
}

Bnn::Bnn(Index input_dim, std::vector<HiddenLayer> hidden, OutputLayer output)
    : input_dim_(input_dim), hidden_(std::move(hidden)), output_(std::move(output)) {
  if (input_dim_ < 1) throw DimensionError("input dimension must be at least 1");
  if (hidden_.empty()) throw ValidationError("network needs at least one hidden layer");
  Index expected = input_dim_;
  for (std::size_t k = 0; k < hidden_.size(); ++k) {
    if (hidden_[k].fan_in() != expected) {
      throw DimensionError("hidden layer " + std::to_string(k) + " expects " +
                           std::to_string(hidden_[k].fan_in()) + " inputs, previous width is " +
                           std::to_string(expected));
    }
    expected = hidden_[k].width();
  }
  if (output_fan_in(output_) != expected) {
    throw DimensionError("output layer has " + std::to_string(output_fan_in(output_)) +
                         " weights, last hidden width is " + std::to_string(expected));
  }
  if (const auto* real = std::get_if<RealWeights>(&output_)) {
    if (!real->weights.allFinite()) throw ValidationError("output weights must be finite");
  } else {
    const auto& bin = std::get<BinaryScaled>(output_);
    if (bin.denominator < 1) throw ValidationError("scale denominator must be a positive integer");
    for (Index i = 0; i < bin.signs.size(); ++i) {
      if (bin.signs(i) != 1 && bin.signs(i) != -1) {
        throw ValidationError("output sign " + std::to_string(i) + " is not +1 or -1");
      }
    }
  }
}

bool operator==(const Bnn& a, const Bnn& b) {
  return a.input_dim_ == b.input_dim_ && a.hidden_ == b.hidden_ && a.output_ == b.output_;
}

SignVector apply_layer(const HiddenLayer& layer, const Eigen::Ref<const Eigen::VectorXd>& input) {
  if (input.size() != layer.fan_in()) {
    throw DimensionError("layer expects " + std::to_string(layer.fan_in()) + " inputs, got " +
                         std::to_string(input.size()));
  }
  SignVector out(layer.width());
  for (Index j = 0; j < layer.width(); ++j) {
    out(j) = detail::sigma(mac_dense(layer.weights().row(j), input), layer.thresholds()(j));
  }
  return out;
}

double evaluate_output(const OutputLayer& output, const SignVector& phi) {
  if (output_fan_in(output) != phi.size()) {
    throw DimensionError("output layer expects " + std::to_string(output_fan_in(output)) +
                         " activations, got " + std::to_string(phi.size()));
  }
  if (const auto* real = std::get_if<RealWeights>(&output)) {
    double acc = 0.0;
    for (Index i = 0; i < phi.size(); ++i) acc += real->weights(i) * static_cast<double>(phi(i));
    return acc;
  }
  const auto& bin = std::get<BinaryScaled>(output);
  std::int64_t acc = 0;
  for (Index i = 0; i < phi.size(); ++i) acc += std::int64_t{bin.signs(i)} * phi(i);
  return static_cast<double>(acc) / static_cast<double>(bin.denominator);
}

bool is_sign_vector(const Eigen::Ref<const Eigen::VectorXd>& x) {
  for (Index i = 0; i < x.size(); ++i) {
    if (x(i) != 1.0 && x(i) != -1.0) return false;
  }
  return true;
}

namespace {

void check_input(Index input_dim, const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (x.size() != input_dim) {
    throw DimensionError("network expects " + std::to_string(input_dim) + " inputs, got " +
                         std::to_string(x.size()));
  }
  if (!x.allFinite()) throw InvalidArgument("network input is not finite");
}

}  // namespace

double forward(const Bnn& bnn, const Eigen::Ref<const Eigen::VectorXd>& x, Engine engine) {
  if (engine == Engine::packed) return PackedBnn(bnn).forward(x);
  check_input(bnn.input_dim(), x);
  Eigen::VectorXd phi = x;
  SignVector out;
  for (const auto& layer : bnn.hidden()) {
    out = apply_layer(layer, phi);
    phi = out.cast<double>();
  }
  return evaluate_output(bnn.output(), out);
}

SignVector unpack_signs(std::span<const Word> words, Index n) {
  if (n < 0 || n > static_cast<Index>(words.size()) * kWordBits) {
    throw DimensionError("unpack_signs: " + std::to_string(n) + " bits exceed capacity");
  }
  SignVector out(n);
  for (Index i = 0; i < n; ++i) {
    out(i) = (words[static_cast<std::size_t>(i / kWordBits)] >> (i % kWordBits)) & 1 ? 1 : -1;
  }
  return out;
}

PackedLayer::PackedLayer(std::vector<Word> words, Index valid_bits, Eigen::VectorXd thresholds)
    : words_(std::move(words)),
      valid_bits_(valid_bits),
      words_per_row_(words_for_bits(valid_bits)),
      thresholds_(std::move(thresholds)) {
  if (valid_bits_ < 1) throw DimensionError("packed layer needs at least one input bit");
  if (static_cast<Index>(words_.size()) != words_per_row_ * thresholds_.size()) {
    throw DimensionError("packed layer word count does not match width x words per row");
  }
  const Index rem = valid_bits_ % kWordBits;
  if (rem != 0) {
    const Word padding = ~((Word{1} << rem) - 1);
    for (Index j = 0; j < width(); ++j) {
      if (row(j).back() & padding) throw ValidationError("packed layer padding bits must be zero");
    }
  }
}

std::vector<Word> PackedLayer::apply(std::span<const Word> input) const {
  if (static_cast<Index>(input.size()) < words_per_row_) {
    throw DimensionError("packed input shorter than layer fan-in");
  }
  std::vector<Word> out(static_cast<std::size_t>(words_for_bits(width())), 0);
  const Word* in = input.data();
  for (Index j = 0; j < width(); ++j) {
    const auto pre = detail::mac_packed_unchecked(words_.data() + j * words_per_row_, in, valid_bits_);
    if (static_cast<double>(pre) > thresholds_(j)) {
      out[static_cast<std::size_t>(j / kWordBits)] |= Word{1} << (j % kWordBits);
    }
  }
  return out;
}

PackedLayer pack_layer(const HiddenLayer& layer) {
  const Index per_row = words_for_bits(layer.fan_in());
  std::vector<Word> words;
  words.reserve(static_cast<std::size_t>(per_row * layer.width()));
  for (Index j = 0; j < layer.width(); ++j) {
    const auto row = pack_signs(layer.weights().row(j));
    words.insert(words.end(), row.begin(), row.end());
  }
  return PackedLayer(std::move(words), layer.fan_in(), layer.thresholds());
}

HiddenLayer unpack_layer(const PackedLayer& packed) {
  SignMatrix weights(packed.width(), packed.valid_bits());
  for (Index j = 0; j < packed.width(); ++j) {
    weights.row(j) = unpack_signs(packed.row(j), packed.valid_bits()).transpose();
  }
  return HiddenLayer(std::move(weights), packed.thresholds());
}

PackedBnn::PackedBnn(const Bnn& bnn) : first_dense_(bnn.hidden().front()), output_(bnn.output()) {
  layers_.reserve(bnn.hidden().size());
  for (const auto& layer : bnn.hidden()) layers_.push_back(pack_layer(layer));
}

double PackedBnn::forward(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  check_input(input_dim(), x);
  std::vector<Word> bits;
  std::size_t start = 0;
  if (is_sign_vector(x)) {
    bits = pack_signs(x);
  } else {
    bits = pack_signs(apply_layer(first_dense_, x));
    start = 1;
  }
  for (std::size_t k = start; k < layers_.size(); ++k) bits = layers_[k].apply(bits);
  return evaluate_output(output_, unpack_signs(bits, layers_.back().width()));
}

}  // namespace fcbnn
