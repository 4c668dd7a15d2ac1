#include "dvae/nn/network.hpp"

#include <cmath>
#include <random>
#include <sstream>

namespace dvae::nn {

namespace {

void apply_activation(Matrix& z, Activation a) {
  switch (a) {
    case Activation::identity:
      break;
    case Activation::tanh:
      z = z.array().tanh();
      break;
    case Activation::relu:
      z = z.array().max(0.0);
      break;
  }
}

// Derivative expressed through the activation output y.
void multiply_activation_derivative(Matrix& grad, const Matrix& y, Activation a) {
  switch (a) {
    case Activation::identity:
      break;
    case Activation::tanh:
      grad.array() *= 1.0 - y.array().square();
      break;
    case Activation::relu:
      grad.array() *= (y.array() > 0.0).cast<double>();
      break;
  }
}

}  // namespace

std::string to_string(Activation a) {
  switch (a) {
    case Activation::identity: return "identity";
    case Activation::tanh: return "tanh";
    case Activation::relu: return "relu";
  }
  return "unknown";
}

Activation activation_from_string(const std::string& name) {
  if (name == "identity") return Activation::identity;
  if (name == "tanh") return Activation::tanh;
  if (name == "relu") return Activation::relu;
  throw InvalidArgument("unknown activation '" + name + "' (expected identity, tanh or relu)");
}

GradientSet& GradientSet::operator+=(const GradientSet& other) {
  if (other.layers.size() != layers.size()) {
    throw InvalidArgument("GradientSet: layer count mismatch");
  }
  for (std::size_t l = 0; l < layers.size(); ++l) {
    require_shape(other.layers[l].weight, layers[l].weight.rows(), layers[l].weight.cols(),
                  "GradientSet weight");
    layers[l].weight += other.layers[l].weight;
    layers[l].bias += other.layers[l].bias;
  }
  if (input.size() == other.input.size()) input += other.input;
  return *this;
}

bool GradientSet::finite() const {
  for (const auto& g : layers) {
    if (!g.weight.allFinite() || !g.bias.allFinite()) return false;
  }
  return true;
}

DenseNetwork::DenseNetwork(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& layer = layers_[l];
    if (static_cast<std::size_t>(layer.bias.size()) != layer.out_width()) {
      std::ostringstream os;
      os << "layer " << l << ": bias length " << layer.bias.size() << " != output width "
         << layer.out_width();
      throw InvalidArgument(os.str());
    }
    if (l > 0 && layers_[l - 1].out_width() != layer.in_width()) {
      std::ostringstream os;
      os << "layer " << l << ": input width " << layer.in_width()
         << " does not chain with previous output width " << layers_[l - 1].out_width();
      throw InvalidArgument(os.str());
    }
    if (!layer.weight.allFinite() || !layer.bias.allFinite()) {
      throw InvalidArgument("layer " + std::to_string(l) + ": non-finite parameters");
    }
  }
}

DenseNetwork DenseNetwork::make(std::span<const std::size_t> widths, Activation hidden,
                                Activation output, std::uint64_t seed) {
  if (widths.size() < 2) throw InvalidArgument("DenseNetwork::make: need at least two widths");
  std::mt19937_64 rng(seed);
  std::vector<DenseLayer> layers;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const std::size_t in = widths[l];
    const std::size_t out = widths[l + 1];
    if (in == 0 || out == 0) throw InvalidArgument("DenseNetwork::make: zero width");
    DenseLayer layer;
    layer.activation = (l + 2 == widths.size()) ? output : hidden;
    const double limit = layer.activation == Activation::relu
                             ? std::sqrt(6.0 / static_cast<double>(in))
                             : std::sqrt(6.0 / static_cast<double>(in + out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    layer.weight.resize(static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(in));
    for (Eigen::Index i = 0; i < layer.weight.size(); ++i) layer.weight.data()[i] = dist(rng);
    layer.bias = Vector::Zero(static_cast<Eigen::Index>(out));
    layers.push_back(std::move(layer));
  }
  return DenseNetwork(std::move(layers));
}

std::size_t DenseNetwork::input_width() const {
  return layers_.empty() ? 0 : layers_.front().in_width();
}

std::size_t DenseNetwork::output_width() const {
  return layers_.empty() ? 0 : layers_.back().out_width();
}

std::size_t DenseNetwork::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  return n;
}

Matrix DenseNetwork::forward(const Matrix& batch) const {
  if (layers_.empty()) throw InvalidArgument("forward: empty network");
  if (static_cast<std::size_t>(batch.cols()) != input_width()) {
    std::ostringstream os;
    os << "forward: batch " << shape_string(batch) << " does not match network input width "
       << input_width();
    throw InvalidArgument(os.str());
  }
  Matrix act = batch;
  for (const auto& layer : layers_) {
    Matrix z = act * layer.weight.transpose();
    z.rowwise() += layer.bias.transpose();
    apply_activation(z, layer.activation);
    act = std::move(z);
  }
  return act;
}

ForwardCache DenseNetwork::forward_cached(const Matrix& batch) const {
  if (layers_.empty()) throw InvalidArgument("forward: empty network");
  if (static_cast<std::size_t>(batch.cols()) != input_width()) {
    std::ostringstream os;
    os << "forward: batch " << shape_string(batch) << " does not match network input width "
       << input_width();
    throw InvalidArgument(os.str());
  }
  ForwardCache cache;
  cache.inputs.reserve(layers_.size());
  cache.outputs.reserve(layers_.size());
  const Matrix* act = &batch;
  for (const auto& layer : layers_) {
    cache.inputs.push_back(*act);
    Matrix z = *act * layer.weight.transpose();
    z.rowwise() += layer.bias.transpose();
    apply_activation(z, layer.activation);
    cache.outputs.push_back(std::move(z));
    act = &cache.outputs.back();
  }
  return cache;
}

bool DenseNetwork::operator==(const DenseNetwork& other) const {
  if (layers_.size() != other.layers_.size()) return false;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& a = layers_[l];
    const auto& b = other.layers_[l];
    if (a.activation != b.activation || a.weight.rows() != b.weight.rows() ||
        a.weight.cols() != b.weight.cols() || a.weight != b.weight || a.bias != b.bias) {
      return false;
    }
  }
  return true;
}

GradientSet backward(const DenseNetwork& net, const ForwardCache& cache, const Matrix& upstream) {
  const auto& layers = net.layers();
  if (cache.inputs.size() != layers.size() || cache.outputs.size() != layers.size()) {
    throw InvalidArgument("backward: no cached activations for this network (run forward_cached)");
  }
  const Matrix& out = cache.output();
  require_shape(upstream, out.rows(), out.cols(), "backward: upstream gradient");

  GradientSet grads;
  grads.layers.resize(layers.size());
  Matrix delta = upstream;
  for (std::size_t l = layers.size(); l-- > 0;) {
    const auto& layer = layers[l];
    multiply_activation_derivative(delta, cache.outputs[l], layer.activation);
    grads.layers[l].weight = delta.transpose() * cache.inputs[l];
    grads.layers[l].bias = delta.colwise().sum().transpose();
    delta = delta * layer.weight;
  }
  grads.input = std::move(delta);
  return grads;
}

GradientSet zero_gradients(const DenseNetwork& net) {
  GradientSet g;
  for (const auto& layer : net.layers()) {
    g.layers.push_back({Matrix::Zero(layer.weight.rows(), layer.weight.cols()),
                        Vector::Zero(layer.bias.size())});
  }
  return g;
}

std::vector<double> flatten_parameters(const DenseNetwork& net) {
  std::vector<double> out;
  out.reserve(net.parameter_count());
  for (const auto& layer : net.layers()) {
    out.insert(out.end(), layer.weight.data(), layer.weight.data() + layer.weight.size());
    out.insert(out.end(), layer.bias.data(), layer.bias.data() + layer.bias.size());
  }
  return out;
}

void assign_parameters(DenseNetwork& net, std::span<const double> values) {
  if (values.size() != net.parameter_count()) {
    throw InvalidArgument("assign_parameters: expected " + std::to_string(net.parameter_count()) +
                          " values, got " + std::to_string(values.size()));
  }
  std::size_t pos = 0;
  for (auto& layer : net.mutable_layers()) {
    std::copy_n(values.begin() + static_cast<std::ptrdiff_t>(pos), layer.weight.size(),
                layer.weight.data());
    pos += static_cast<std::size_t>(layer.weight.size());
    std::copy_n(values.begin() + static_cast<std::ptrdiff_t>(pos), layer.bias.size(),
                layer.bias.data());
    pos += static_cast<std::size_t>(layer.bias.size());
  }
}

std::vector<double> flatten_gradients(const GradientSet& grads) {
  std::vector<double> out;
  for (const auto& g : grads.layers) {
    out.insert(out.end(), g.weight.data(), g.weight.data() + g.weight.size());
    out.insert(out.end(), g.bias.data(), g.bias.data() + g.bias.size());
  }
  return out;
}

}  // namespace dvae::nn
