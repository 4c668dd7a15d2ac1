#include "dvae/metrics/information.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace dvae::metrics {

namespace {

// Latents drawn from each row's posterior; row n belongs to owner[n].
struct LatentDraws {
  Matrix points;
  std::vector<std::size_t> owner;
};

LatentDraws draw_latents(const vae::GaussianPosterior& post, std::size_t mc_samples,
                         std::uint64_t seed) {
  if (post.batch() < 2) throw InvalidArgument("MI estimation needs at least two datapoints");
  if (mc_samples < 1) throw InvalidArgument("MI estimation needs at least one draw per datapoint");
  const auto m = static_cast<Eigen::Index>(post.batch());
  const auto d = static_cast<Eigen::Index>(post.dim());
  const auto t = static_cast<Eigen::Index>(mc_samples);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  LatentDraws draws;
  draws.points.resize(m * t, d);
  draws.owner.resize(static_cast<std::size_t>(m * t));
  const Matrix sd = (0.5 * post.log_var().array()).exp();
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index k = 0; k < t; ++k) {
      const Eigen::Index row = i * t + k;
      draws.owner[static_cast<std::size_t>(row)] = static_cast<std::size_t>(i);
      for (Eigen::Index j = 0; j < d; ++j) {
        draws.points(row, j) = post.mu()(i, j) + sd(i, j) * normal(rng);
      }
    }
  }
  return draws;
}

Estimate mean_and_error(const Matrix& values, Eigen::Index col) {
  const auto n = static_cast<double>(values.rows());
  CompensatedSum sum;
  for (Eigen::Index r = 0; r < values.rows(); ++r) sum.add(values(r, col));
  const double mean = sum.value() / n;
  CompensatedSum sq;
  for (Eigen::Index r = 0; r < values.rows(); ++r) {
    const double dlt = values(r, col) - mean;
    sq.add(dlt * dlt);
  }
  const double var = values.rows() > 1 ? sq.value() / (n - 1.0) : 0.0;
  return {mean, std::sqrt(var / n)};
}

void check_dims(const vae::GaussianPosterior& post, std::span<const std::size_t> dims) {
  if (dims.empty()) throw InvalidArgument("estimate_mi: dimension subset is empty");
  for (auto j : dims) {
    if (j >= post.dim()) {
      throw InvalidArgument("estimate_mi: dimension " + std::to_string(j) + " out of range for D=" +
                            std::to_string(post.dim()));
    }
  }
}

}  // namespace

Estimate estimate_mi(const vae::GaussianPosterior& aggregate, std::span<const std::size_t> dims,
                     std::size_t mc_samples, std::uint64_t seed) {
  check_dims(aggregate, dims);
  const LatentDraws draws = draw_latents(aggregate, mc_samples, seed);
  const std::size_t m = aggregate.batch();
  const double log_m = std::log(static_cast<double>(m));
  const auto& mu = aggregate.mu();
  const auto& lv = aggregate.log_var();
  Matrix values(draws.points.rows(), 1);
  parallel_for(static_cast<std::size_t>(draws.points.rows()), [&](std::size_t n) {
    const auto nn = static_cast<Eigen::Index>(n);
    std::vector<double> comp(m);
    for (std::size_t k = 0; k < m; ++k) {
      double acc = 0.0;
      for (auto j : dims) {
        const auto jj = static_cast<Eigen::Index>(j);
        acc += log_normal_density(draws.points(nn, jj), mu(static_cast<Eigen::Index>(k), jj),
                                  lv(static_cast<Eigen::Index>(k), jj));
      }
      comp[k] = acc;
    }
    values(nn, 0) = comp[draws.owner[n]] - (log_sum_exp(comp) - log_m);
  });
  return mean_and_error(values, 0);
}

Estimate estimate_mi(const vae::VaeModel& model, const Matrix& sample,
                     std::span<const std::size_t> dims, std::size_t mc_samples, std::uint64_t seed) {
  return estimate_mi(vae::encode(model, sample), dims, mc_samples, seed);
}

EntropyEstimate estimate_entropy(const vae::GaussianPosterior& aggregate, std::size_t dim,
                                 std::size_t mc_samples, std::uint64_t seed) {
  if (dim >= aggregate.dim()) throw InvalidArgument("estimate_entropy: dimension out of range");
  const LatentDraws draws = draw_latents(aggregate, mc_samples, seed);
  const std::size_t m = aggregate.batch();
  const double log_m = std::log(static_cast<double>(m));
  const auto j = static_cast<Eigen::Index>(dim);
  Matrix values(draws.points.rows(), 1);
  parallel_for(static_cast<std::size_t>(draws.points.rows()), [&](std::size_t n) {
    const auto nn = static_cast<Eigen::Index>(n);
    std::vector<double> comp(m);
    for (std::size_t k = 0; k < m; ++k) {
      const auto kk = static_cast<Eigen::Index>(k);
      comp[k] = log_normal_density(draws.points(nn, j), aggregate.mu()(kk, j), aggregate.log_var()(kk, j));
    }
    values(nn, 0) = -(log_sum_exp(comp) - log_m);
  });
  const Estimate e = mean_and_error(values, 0);
  return {e.value, e.std_error, e.value < kEntropyFloor};
}

EntropyEstimate estimate_entropy(const vae::VaeModel& model, const Matrix& sample, std::size_t dim,
                                 std::size_t mc_samples, std::uint64_t seed) {
  return estimate_entropy(vae::encode(model, sample), dim, mc_samples, seed);
}

namespace {

// Marginal MI below the resolution is round-off from identical posteriors.
double informative(double mi) { return mi > kMiResolution ? mi : 0.0; }

}  // namespace

WsepinResult wsepin(const vae::GaussianPosterior& aggregate, std::size_t mc_samples,
                    std::uint64_t seed) {
  const std::size_t d = aggregate.dim();
  if (d < 2) throw InvalidArgument("wsepin: needs at least two latent dimensions");
  const LatentDraws draws = draw_latents(aggregate, mc_samples, seed);
  const std::size_t m = aggregate.batch();
  const double log_m = std::log(static_cast<double>(m));
  const auto& mu = aggregate.mu();
  const auto& lv = aggregate.log_var();

  // Per draw: [joint, conditional_j (d), marginal_j (d), entropy_j (d)].
  const auto cols = static_cast<Eigen::Index>(1 + 3 * d);
  Matrix values(draws.points.rows(), cols);
  parallel_for(static_cast<std::size_t>(draws.points.rows()), [&](std::size_t n) {
    const auto nn = static_cast<Eigen::Index>(n);
    const std::size_t own = draws.owner[n];
    std::vector<double> ell(m * d);
    std::vector<double> comp(m);
    std::vector<double> full(m);
    for (std::size_t k = 0; k < m; ++k) {
      const auto kk = static_cast<Eigen::Index>(k);
      double acc = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        const auto jj = static_cast<Eigen::Index>(j);
        const double v = log_normal_density(draws.points(nn, jj), mu(kk, jj), lv(kk, jj));
        ell[k * d + j] = v;
        acc += v;
      }
      full[k] = acc;
    }
    const double joint = full[own] - (log_sum_exp(full) - log_m);
    values(nn, 0) = joint;
    for (std::size_t j = 0; j < d; ++j) {
      // log q(s_{-j} | x_k) summed without the j-th term.
      for (std::size_t k = 0; k < m; ++k) {
        double acc = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
          if (i != j) acc += ell[k * d + i];
        }
        comp[k] = acc;
      }
      const double without_j = comp[own] - (log_sum_exp(comp) - log_m);
      values(nn, static_cast<Eigen::Index>(1 + j)) = joint - without_j;

      for (std::size_t k = 0; k < m; ++k) comp[k] = ell[k * d + j];
      const double log_marginal = log_sum_exp(comp) - log_m;
      values(nn, static_cast<Eigen::Index>(1 + d + j)) = ell[own * d + j] - log_marginal;
      values(nn, static_cast<Eigen::Index>(1 + 2 * d + j)) = -log_marginal;
    }
  });

  WsepinResult r;
  r.joint_mi = mean_and_error(values, 0);
  double marginal_total = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    r.conditional_mi.push_back(mean_and_error(values, static_cast<Eigen::Index>(1 + j)));
    r.marginal_mi.push_back(mean_and_error(values, static_cast<Eigen::Index>(1 + d + j)));
    const Estimate h = mean_and_error(values, static_cast<Eigen::Index>(1 + 2 * d + j));
    r.entropy.push_back({h.value, h.std_error, h.value < kEntropyFloor});
    marginal_total += informative(r.marginal_mi.back().value);
  }
  if (!(marginal_total > 0.0)) {
    r.flagged = true;
    r.value = 0.0;
    r.rho.assign(d, 0.0);
    return r;
  }
  CompensatedSum total;
  for (std::size_t j = 0; j < d; ++j) {
    const double rho = informative(r.marginal_mi[j].value) / marginal_total;
    r.rho.push_back(rho);
    double h = r.entropy[j].value;
    if (r.entropy[j].flagged) {
      h = kEntropyFloor;
      r.flagged = true;
    }
    total.add(rho / h * std::max(0.0, r.conditional_mi[j].value));
  }
  r.value = std::max(0.0, total.value());
  return r;
}

WsepinResult wsepin(const vae::VaeModel& model, const Matrix& sample, std::size_t mc_samples,
                    std::uint64_t seed) {
  return wsepin(vae::encode(model, sample), mc_samples, seed);
}

}  // namespace dvae::metrics
