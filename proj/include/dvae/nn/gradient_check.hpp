#pragma once

#include <functional>
#include <span>
#include <utility>

#include "dvae/nn/network.hpp"

namespace dvae::nn {

using ParameterLoss = std::function<double(std::span<const double>)>;

/// max over parameters of |analytic - central| / max(|analytic|, |central|, 1e-8),
/// where central is the central difference of `loss` with step `eps`.
double max_relative_error(std::span<const double> parameters, std::span<const double> analytic,
                          const ParameterLoss& loss, double eps);

/// Loss on a network output: returns the scalar and its gradient w.r.t. the output.
using OutputLoss = std::function<std::pair<double, Matrix>(const Matrix& output)>;

/// Checks backward() for `net` on `input` against central differences.
double finite_difference_check(const DenseNetwork& net, const OutputLoss& loss_fn,
                               const Matrix& input, double eps);

}  // namespace dvae::nn
