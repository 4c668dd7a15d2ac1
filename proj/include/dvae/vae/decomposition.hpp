#pragma once

#include "dvae/vae/model.hpp"

namespace dvae::vae {

/// How the aggregate posterior q(s) is approximated from a minibatch.
///  - weighted: every minibatch posterior gets weight 1/B.
///  - stratified: the sample's own posterior gets 1/N, one neighbour gets
///    (N-M)/(N*M) and the remaining ones 1/M, with M = B-1.
enum class MarginalEstimator { weighted, stratified };

std::string to_string(MarginalEstimator e);
MarginalEstimator marginal_estimator_from_string(const std::string& name);

/// Minibatch estimates of the KL decomposition KL = MI + TC + DKL.
struct Decomposition {
  double mi = 0.0;
  double tc = 0.0;
  double dkl = 0.0;

  double sum() const { return mi + tc + dkl; }
};

/// Gradient of alpha*mi + beta*tc + gamma*dkl, holding samples fixed as an
/// independent input (the caller chains samples through reparameterize).
struct DecompositionGradient {
  Matrix mu;
  Matrix log_var;
  Matrix samples;
};

/// `samples` row i must have been drawn from posterior row i. Requires
/// B >= 2 and dataset_size >= B.
Decomposition estimate_decomposition(const GaussianPosterior& post, const Matrix& samples,
                                     std::size_t dataset_size,
                                     MarginalEstimator estimator = MarginalEstimator::weighted);

/// As above, and fills `grad` with the gradient of the weighted sum.
Decomposition estimate_decomposition(const GaussianPosterior& post, const Matrix& samples,
                                     std::size_t dataset_size, MarginalEstimator estimator,
                                     double alpha, double beta, double gamma,
                                     DecompositionGradient& grad);

}  // namespace dvae::vae
