#include "dvae/vae/decomposition.hpp"

#include <cmath>
#include <vector>

namespace dvae::vae {

std::string to_string(MarginalEstimator e) {
  return e == MarginalEstimator::weighted ? "weighted" : "stratified";
}

MarginalEstimator marginal_estimator_from_string(const std::string& name) {
  if (name == "weighted") return MarginalEstimator::weighted;
  if (name == "stratified") return MarginalEstimator::stratified;
  throw InvalidArgument("unknown marginal estimator '" + name + "' (expected weighted or stratified)");
}

namespace {

Matrix log_weight_matrix(std::size_t batch, std::size_t dataset_size, MarginalEstimator estimator) {
  const auto b = static_cast<Eigen::Index>(batch);
  if (estimator == MarginalEstimator::weighted) {
    return Matrix::Constant(b, b, -std::log(static_cast<double>(batch)));
  }
  const double n = static_cast<double>(dataset_size);
  const double m = static_cast<double>(batch - 1);
  Matrix w = Matrix::Constant(b, b, 1.0 / m);
  for (Eigen::Index i = 0; i < b; ++i) {
    w(i, i) = 1.0 / n;
    w(i, (i + 1) % b) = (n - m) / (n * m);
  }
  return w.array().log();
}

Decomposition evaluate(const GaussianPosterior& post, const Matrix& samples,
                       std::size_t dataset_size, MarginalEstimator estimator, double alpha,
                       double beta, double gamma, DecompositionGradient* grad) {
  const std::size_t batch = post.batch();
  const std::size_t dim = post.dim();
  if (batch < 2) {
    throw InvalidArgument("estimate_decomposition: batch size " + std::to_string(batch) +
                          " < 2; the minibatch estimator is undefined");
  }
  if (dataset_size < batch) {
    throw InvalidArgument("estimate_decomposition: dataset size smaller than batch");
  }
  require_shape(samples, post.mu().rows(), post.mu().cols(), "estimate_decomposition: samples");

  const Matrix log_w = log_weight_matrix(batch, dataset_size, estimator);
  const Matrix& mu = post.mu();
  const Matrix& lv = post.log_var();
  const Matrix inv_var = (-lv.array()).exp();

  if (grad != nullptr) {
    grad->mu = Matrix::Zero(mu.rows(), mu.cols());
    grad->log_var = Matrix::Zero(mu.rows(), mu.cols());
    grad->samples = Matrix::Zero(mu.rows(), mu.cols());
  }

  // ell[k * dim + j] = log N(s_ij; mu_kj, var_kj) for the current row i.
  std::vector<double> ell(batch * dim);
  std::vector<double> joint(batch);
  std::vector<double> column(batch);
  std::vector<double> joint_resp(batch);
  std::vector<double> marginal_resp(batch * dim);

  const double inv_b = 1.0 / static_cast<double>(batch);
  double mi_acc = 0.0, tc_acc = 0.0, dkl_acc = 0.0;
  for (std::size_t i = 0; i < batch; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    for (std::size_t k = 0; k < batch; ++k) {
      const auto kk = static_cast<Eigen::Index>(k);
      double row_sum = 0.0;
      for (std::size_t j = 0; j < dim; ++j) {
        const auto jj = static_cast<Eigen::Index>(j);
        const double v = log_normal_density(samples(ii, jj), mu(kk, jj), lv(kk, jj));
        ell[k * dim + j] = v;
        row_sum += v;
      }
      joint[k] = row_sum + log_w(ii, kk);
    }
    const double log_q_joint = log_sum_exp(joint);

    double log_q_own = 0.0;
    double log_prior = 0.0;
    double sum_log_q_marginal = 0.0;
    for (std::size_t j = 0; j < dim; ++j) {
      const double s = samples(ii, static_cast<Eigen::Index>(j));
      log_q_own += ell[i * dim + j];
      log_prior += log_normal_density(s, 0.0, 0.0);
      for (std::size_t k = 0; k < batch; ++k) column[k] = ell[k * dim + j] + log_w(ii, static_cast<Eigen::Index>(k));
      const double lq = log_sum_exp(column);
      sum_log_q_marginal += lq;
      if (grad != nullptr) {
        for (std::size_t k = 0; k < batch; ++k) marginal_resp[k * dim + j] = std::exp(column[k] - lq);
      }
    }
    mi_acc += log_q_own - log_q_joint;
    tc_acc += log_q_joint - sum_log_q_marginal;
    dkl_acc += sum_log_q_marginal - log_prior;

    if (grad == nullptr) continue;
    for (std::size_t k = 0; k < batch; ++k) joint_resp[k] = std::exp(joint[k] - log_q_joint);
    for (std::size_t k = 0; k < batch; ++k) {
      const auto kk = static_cast<Eigen::Index>(k);
      for (std::size_t j = 0; j < dim; ++j) {
        const auto jj = static_cast<Eigen::Index>(j);
        const double coeff = inv_b * ((k == i ? alpha : 0.0) + (beta - alpha) * joint_resp[k] +
                                      (gamma - beta) * marginal_resp[k * dim + j]);
        if (coeff == 0.0) continue;
        const double diff = samples(ii, jj) - mu(kk, jj);
        const double scaled = diff * inv_var(kk, jj);
        grad->samples(ii, jj) -= coeff * scaled;
        grad->mu(kk, jj) += coeff * scaled;
        grad->log_var(kk, jj) += coeff * 0.5 * (diff * scaled - 1.0);
      }
    }
    for (std::size_t j = 0; j < dim; ++j) {
      const auto jj = static_cast<Eigen::Index>(j);
      grad->samples(ii, jj) += gamma * inv_b * samples(ii, jj);
    }
  }
  return {mi_acc * inv_b, tc_acc * inv_b, dkl_acc * inv_b};
}

}  // namespace

Decomposition estimate_decomposition(const GaussianPosterior& post, const Matrix& samples,
                                     std::size_t dataset_size, MarginalEstimator estimator) {
  return evaluate(post, samples, dataset_size, estimator, 0.0, 0.0, 0.0, nullptr);
}

Decomposition estimate_decomposition(const GaussianPosterior& post, const Matrix& samples,
                                     std::size_t dataset_size, MarginalEstimator estimator,
                                     double alpha, double beta, double gamma,
                                     DecompositionGradient& grad) {
  return evaluate(post, samples, dataset_size, estimator, alpha, beta, gamma, &grad);
}

}  // namespace dvae::vae
