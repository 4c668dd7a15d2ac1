#pragma once

#include <span>
#include <vector>

#include "dvae/vae/model.hpp"

namespace dvae::metrics {

/// Monte Carlo estimate with the standard error of the mean.
struct Estimate {
  double value = 0.0;
  double std_error = 0.0;
};

/// Entropies below this are clamped in WSEPIN and flagged.
inline constexpr double kEntropyFloor = 1e-3;

/// Marginal MI at or below this many nats counts as zero in WSEPIN.
inline constexpr double kMiResolution = 1e-9;

struct EntropyEstimate {
  double value = 0.0;
  double std_error = 0.0;
  bool flagged = false;  // value < kEntropyFloor
};

/// I(x; s_dims) under the aggregate posterior q(s) = 1/M sum_m q(s|x_m) of
/// the M rows of `aggregate`. Draws `mc_samples` latents per row and keeps
/// only the selected coordinates (0-based). Requires M >= 2, dims non-empty.
Estimate estimate_mi(const vae::GaussianPosterior& aggregate, std::span<const std::size_t> dims,
                     std::size_t mc_samples, std::uint64_t seed);
Estimate estimate_mi(const vae::VaeModel& model, const Matrix& sample,
                     std::span<const std::size_t> dims, std::size_t mc_samples, std::uint64_t seed);

/// Differential entropy (nats) of the 1-D aggregate-posterior mixture of
/// coordinate `dim`.
EntropyEstimate estimate_entropy(const vae::GaussianPosterior& aggregate, std::size_t dim,
                                 std::size_t mc_samples, std::uint64_t seed);
EntropyEstimate estimate_entropy(const vae::VaeModel& model, const Matrix& sample, std::size_t dim,
                                 std::size_t mc_samples, std::uint64_t seed);

/// All WSEPIN constituents, estimated on one shared set of latent draws.
struct WsepinResult {
  double value = 0.0;
  bool flagged = false;
  Estimate joint_mi;                       // I(x; s)
  std::vector<Estimate> conditional_mi;    // I(x; s) - I(x; s_{-j}), paired
  std::vector<Estimate> marginal_mi;       // I(x; s_j)
  std::vector<EntropyEstimate> entropy;    // H(s_j)
  std::vector<double> rho;                 // I(x; s_j) / sum_i I(x; s_i), values <= kMiResolution floored
};

/// sum_j rho_j / H(s_j) * max(0, I(x;s) - I(x;s_{-j})). Entropies below
/// kEntropyFloor are clamped and flag the result; when no I(x; s_i)
/// exceeds kMiResolution the result is 0 with the flag set. Requires D >= 2.
WsepinResult wsepin(const vae::GaussianPosterior& aggregate, std::size_t mc_samples,
                    std::uint64_t seed);
WsepinResult wsepin(const vae::VaeModel& model, const Matrix& sample, std::size_t mc_samples,
                    std::uint64_t seed);

}  // namespace dvae::metrics
