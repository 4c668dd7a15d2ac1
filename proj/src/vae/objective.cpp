#include "dvae/vae/objective.hpp"

#include <cmath>

namespace dvae::vae {

std::string to_string(Objective o) { return o == Objective::beta_vae ? "beta_vae" : "tcvae"; }

Objective objective_from_string(const std::string& name) {
  if (name == "beta_vae") return Objective::beta_vae;
  if (name == "tcvae") return Objective::tcvae;
  throw InvalidArgument("unknown objective '" + name + "' (expected beta_vae or tcvae)");
}

void LossWeights::validate() const {
  for (double w : {alpha, beta, gamma, beta_s}) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw InvalidArgument("loss weights must be finite and non-negative");
    }
  }
}

bool LossBreakdown::finite() const {
  return std::isfinite(rec) && std::isfinite(mi_hat) && std::isfinite(tc_hat) &&
         std::isfinite(dkl_hat) && std::isfinite(kl_analytic) && std::isfinite(total);
}

double tcvae_loss(double rec, double mi_hat, double tc_hat, double dkl_hat, const LossWeights& w) {
  return rec + w.alpha * mi_hat + w.beta * tc_hat + w.gamma * dkl_hat;
}

double beta_vae_loss(double rec, double kl_analytic, double beta_s) {
  return rec + beta_s * kl_analytic;
}

LossEvaluation evaluate_loss(const VaeModel& model, const Matrix& x, const Matrix& noise,
                             const LossOptions& options, bool with_gradients) {
  const auto d = static_cast<Eigen::Index>(model.latent_dim());
  const auto b = x.rows();
  require_shape(noise, b, d, "evaluate_loss: noise");
  const auto& w = options.weights;

  const nn::ForwardCache enc = model.encoder.forward_cached(x);
  const Matrix& raw = enc.output();
  const GaussianPosterior post(raw.leftCols(d), raw.rightCols(d));
  const Matrix std_dev = (0.5 * post.log_var().array()).exp();
  const Matrix samples = reparameterize(post, noise);
  const nn::ForwardCache dec = model.decoder.forward_cached(samples);

  LossEvaluation out;
  auto& bd = out.breakdown;
  bd.rec = reconstruction_loss(x, dec.output());
  bd.kl_analytic = analytic_kl(post);
  const std::size_t n = options.dataset_size == 0 ? static_cast<std::size_t>(b) : options.dataset_size;

  DecompositionGradient dgrad;
  const bool decomposed_grad = with_gradients && options.objective == Objective::tcvae;
  const Decomposition dec_terms =
      decomposed_grad
          ? estimate_decomposition(post, samples, n, options.estimator, w.alpha, w.beta, w.gamma, dgrad)
          : estimate_decomposition(post, samples, n, options.estimator);
  bd.mi_hat = dec_terms.mi;
  bd.tc_hat = dec_terms.tc;
  bd.dkl_hat = dec_terms.dkl;
  bd.total = options.objective == Objective::tcvae
                 ? tcvae_loss(bd.rec, bd.mi_hat, bd.tc_hat, bd.dkl_hat, w)
                 : beta_vae_loss(bd.rec, bd.kl_analytic, w.beta_s);

  if (!with_gradients) return out;

  const double inv_b = 1.0 / static_cast<double>(b);
  out.decoder = nn::backward(model.decoder, dec, (dec.output() - x) * inv_b);
  Matrix grad_samples = out.decoder.input;
  Matrix grad_mu, grad_lv;
  if (options.objective == Objective::tcvae) {
    grad_samples += dgrad.samples;
    grad_mu = dgrad.mu;
    grad_lv = dgrad.log_var;
  } else {
    grad_mu = w.beta_s * inv_b * post.mu();
    grad_lv = (w.beta_s * inv_b * 0.5) * (post.log_var().array().exp() - 1.0).matrix();
  }
  grad_mu += grad_samples;
  grad_lv.array() += grad_samples.array() * 0.5 * std_dev.array() * noise.array();
  // Clamped entries do not move with the raw encoder output.
  const auto raw_lv = raw.rightCols(d).array();
  grad_lv.array() *= ((raw_lv > kLogVarMin) && (raw_lv < kLogVarMax)).cast<double>();

  Matrix upstream(b, 2 * d);
  upstream.leftCols(d) = grad_mu;
  upstream.rightCols(d) = grad_lv;
  out.encoder = nn::backward(model.encoder, enc, upstream);
  return out;
}

}  // namespace dvae::vae
