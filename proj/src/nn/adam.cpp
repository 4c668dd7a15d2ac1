#include "dvae/nn/adam.hpp"

#include <cmath>

namespace dvae::nn {

OptimizerState OptimizerState::for_network(const DenseNetwork& net, const AdamConfig& config) {
  OptimizerState s;
  s.config = config;
  for (const auto& layer : net.layers()) {
    s.first_moment.push_back({Matrix::Zero(layer.weight.rows(), layer.weight.cols()),
                              Vector::Zero(layer.bias.size())});
    s.second_moment.push_back({Matrix::Zero(layer.weight.rows(), layer.weight.cols()),
                               Vector::Zero(layer.bias.size())});
  }
  return s;
}

namespace {

template <typename Param, typename Grad>
void update(Param& p, const Grad& g, Param& m, Param& v, const AdamConfig& c, double correction1,
            double correction2) {
  m = c.beta1 * m + (1.0 - c.beta1) * g;
  v = c.beta2 * v + (1.0 - c.beta2) * g.cwiseProduct(g);
  p.array() -= c.learning_rate * (m.array() / correction1) /
               ((v.array() / correction2).sqrt() + c.epsilon);
}

}  // namespace

void adam_step(DenseNetwork& net, const GradientSet& grads, OptimizerState& state) {
  auto& layers = net.mutable_layers();
  if (grads.layers.size() != layers.size() || state.first_moment.size() != layers.size()) {
    throw InvalidArgument("adam_step: gradient/state layer count does not match network");
  }
  for (std::size_t l = 0; l < layers.size(); ++l) {
    require_shape(grads.layers[l].weight, layers[l].weight.rows(), layers[l].weight.cols(),
                  "adam_step: weight gradient of layer " + std::to_string(l));
    if (grads.layers[l].bias.size() != layers[l].bias.size()) {
      throw InvalidArgument("adam_step: bias gradient of layer " + std::to_string(l) +
                            " has wrong length");
    }
  }
  if (!grads.finite()) {
    throw NumericalError("adam_step: non-finite gradient at step " +
                         std::to_string(state.step + 1) + "; update rejected");
  }

  const std::uint64_t t = state.step + 1;
  const double correction1 = 1.0 - std::pow(state.config.beta1, static_cast<double>(t));
  const double correction2 = 1.0 - std::pow(state.config.beta2, static_cast<double>(t));
  for (std::size_t l = 0; l < layers.size(); ++l) {
    update(layers[l].weight, grads.layers[l].weight, state.first_moment[l].weight,
           state.second_moment[l].weight, state.config, correction1, correction2);
    update(layers[l].bias, grads.layers[l].bias, state.first_moment[l].bias,
           state.second_moment[l].bias, state.config, correction1, correction2);
  }
  state.step = t;
}

}  // namespace dvae::nn
