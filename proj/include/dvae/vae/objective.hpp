#pragma once

#include <string>

#include "dvae/nn/network.hpp"
#include "dvae/vae/decomposition.hpp"
#include "dvae/vae/model.hpp"

namespace dvae::vae {

enum class Objective { beta_vae, tcvae };

std::string to_string(Objective o);
Objective objective_from_string(const std::string& name);

/// alpha/beta/gamma weight MI/TC/DKL in the decomposed objective;
/// beta_s weights the analytic KL in the beta-VAE objective.
struct LossWeights {
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  double beta_s = 1.0;

  /// alpha = beta = gamma = b: the decomposed objective reduces to the
  /// beta-VAE one with beta_s = b.
  static LossWeights tied(double b) { return {b, b, b, b}; }

  void validate() const;
};

struct LossBreakdown {
  double rec = 0.0;
  double mi_hat = 0.0;
  double tc_hat = 0.0;
  double dkl_hat = 0.0;
  double kl_analytic = 0.0;
  double total = 0.0;

  bool finite() const;
};

/// rec + alpha*mi + beta*tc + gamma*dkl
double tcvae_loss(double rec, double mi_hat, double tc_hat, double dkl_hat, const LossWeights& w);

/// rec + beta_s*kl
double beta_vae_loss(double rec, double kl_analytic, double beta_s);

struct LossEvaluation {
  LossBreakdown breakdown;
  nn::GradientSet encoder;
  nn::GradientSet decoder;
};

struct LossOptions {
  Objective objective = Objective::tcvae;
  LossWeights weights;
  std::size_t dataset_size = 0;  // 0: use the batch size
  MarginalEstimator estimator = MarginalEstimator::weighted;
};

/// One-sample loss on batch x with injected standard-normal `noise`
/// (B x D). Gradients are filled only when with_gradients is set.
LossEvaluation evaluate_loss(const VaeModel& model, const Matrix& x, const Matrix& noise,
                             const LossOptions& options, bool with_gradients);

}  // namespace dvae::vae
