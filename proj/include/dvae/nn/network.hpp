#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dvae/common.hpp"

namespace dvae::nn {

/// Tag values are part of the checkpoint format; do not renumber.
enum class Activation : std::uint8_t { identity = 0, tanh = 1, relu = 2 };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& name);

struct DenseLayer {
  Matrix weight;  // out x in
  Vector bias;    // out
  Activation activation = Activation::identity;

  std::size_t in_width() const { return static_cast<std::size_t>(weight.cols()); }
  std::size_t out_width() const { return static_cast<std::size_t>(weight.rows()); }
};

/// Per-layer inputs and activations recorded by forward_cached and
/// consumed by backward.
struct ForwardCache {
  std::vector<Matrix> inputs;
  std::vector<Matrix> outputs;

  const Matrix& output() const { return outputs.back(); }
};

struct LayerGradient {
  Matrix weight;
  Vector bias;
};

/// Parameter gradients, shape-congruent with the network they came from,
/// plus the gradient with respect to the network input.
struct GradientSet {
  std::vector<LayerGradient> layers;
  Matrix input;

  /// Adds `other` into this set; shapes must match.
  GradientSet& operator+=(const GradientSet& other);
  bool finite() const;
};

/// A stack of affine layers with elementwise activations.
class DenseNetwork {
 public:
  DenseNetwork() = default;

  /// Validates that adjacent widths chain and parameters are finite.
  explicit DenseNetwork(std::vector<DenseLayer> layers);

  /// Builds a network with the given widths (input first, output last).
  /// Weights are drawn from a Glorot-uniform (tanh/identity) or He-uniform
  /// (relu) distribution; biases start at zero.
  static DenseNetwork make(std::span<const std::size_t> widths, Activation hidden,
                           Activation output, std::uint64_t seed);

  std::size_t input_width() const;
  std::size_t output_width() const;
  std::size_t layer_count() const { return layers_.size(); }
  std::size_t parameter_count() const;

  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& mutable_layers() { return layers_; }

  Matrix forward(const Matrix& batch) const;
  ForwardCache forward_cached(const Matrix& batch) const;

  bool operator==(const DenseNetwork& other) const;

 private:
  std::vector<DenseLayer> layers_;
};

/// Reverse-mode gradient of a scalar loss whose gradient with respect to
/// the network output is `upstream` (B x Dout).
GradientSet backward(const DenseNetwork& net, const ForwardCache& cache, const Matrix& upstream);

GradientSet zero_gradients(const DenseNetwork& net);

/// Flattened parameter vector: per layer, W row-major then b.
std::vector<double> flatten_parameters(const DenseNetwork& net);
void assign_parameters(DenseNetwork& net, std::span<const double> values);
std::vector<double> flatten_gradients(const GradientSet& grads);

}  // namespace dvae::nn
