#include "dvae/nn/gradient_check.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace dvae::nn {

double max_relative_error(std::span<const double> parameters, std::span<const double> analytic,
                          const ParameterLoss& loss, double eps) {
  if (!(eps > 0.0)) throw InvalidArgument("finite difference step must be positive");
  if (parameters.size() != analytic.size()) {
    throw InvalidArgument("max_relative_error: parameter and gradient sizes differ");
  }
  std::vector<double> probe(parameters.begin(), parameters.end());
  double worst = 0.0;
  for (std::size_t i = 0; i < probe.size(); ++i) {
    const double saved = probe[i];
    probe[i] = saved + eps;
    const double up = loss(probe);
    probe[i] = saved - eps;
    const double down = loss(probe);
    probe[i] = saved;
    const double central = (up - down) / (2.0 * eps);
    const double denom = std::max({std::abs(analytic[i]), std::abs(central), 1e-8});
    worst = std::max(worst, std::abs(analytic[i] - central) / denom);
  }
  return worst;
}

double finite_difference_check(const DenseNetwork& net, const OutputLoss& loss_fn,
                               const Matrix& input, double eps) {
  const ForwardCache cache = net.forward_cached(input);
  const auto [value, upstream] = loss_fn(cache.output());
  (void)value;
  const std::vector<double> analytic = flatten_gradients(backward(net, cache, upstream));
  const std::vector<double> params = flatten_parameters(net);
  DenseNetwork scratch = net;
  return max_relative_error(params, analytic,
                            [&](std::span<const double> p) {
                              assign_parameters(scratch, p);
                              return loss_fn(scratch.forward(input)).first;
                            },
                            eps);
}

}  // namespace dvae::nn
