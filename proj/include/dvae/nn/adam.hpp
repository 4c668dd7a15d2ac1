#pragma once

#include <cstdint>
#include <vector>

#include "dvae/nn/network.hpp"

namespace dvae::nn {

struct AdamConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Moment accumulators for one network.
struct OptimizerState {
  AdamConfig config;
  std::uint64_t step = 0;
  std::vector<LayerGradient> first_moment;
  std::vector<LayerGradient> second_moment;

  static OptimizerState for_network(const DenseNetwork& net, const AdamConfig& config);
};

/// Bias-corrected adaptive-moment update, in place. Throws NumericalError
/// and leaves both `net` and `state` untouched when any gradient is
/// non-finite; throws InvalidArgument on shape mismatch.
void adam_step(DenseNetwork& net, const GradientSet& grads, OptimizerState& state);

}  // namespace dvae::nn
