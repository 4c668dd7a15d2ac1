#pragma once

#include <filesystem>
#include <functional>
#include <vector>

#include "dvae/data/dataset.hpp"
#include "dvae/nn/adam.hpp"
#include "dvae/vae/objective.hpp"

namespace dvae::vae {

struct TrainConfig {
  std::size_t iterations = 10000;
  std::size_t batch_size = 64;
  double learning_rate = 1e-4;
  std::uint64_t seed = 0;
  std::size_t eval_every = 100;
  Objective objective = Objective::tcvae;
  MarginalEstimator estimator = MarginalEstimator::weighted;

  void validate() const;
};

struct LogRecord {
  std::size_t iteration = 0;
  LossBreakdown loss;
};

/// Minibatch loss breakdowns at iteration 1, every eval_every iterations
/// and at the final iteration.
struct TrainingLog {
  std::vector<LogRecord> records;

  /// Header `iteration,rec,mi_hat,tc_hat,dkl_hat,kl_analytic,total`.
  void write_csv(const std::filesystem::path& path) const;
  static TrainingLog read_csv(const std::filesystem::path& path);
};

struct TrainResult {
  VaeModel model;
  TrainingLog log;
};

/// Raised when the loss turns non-finite; carries where and what.
class TrainingError : public NumericalError {
 public:
  TrainingError(std::size_t iteration, const LossBreakdown& breakdown);

  std::size_t iteration() const { return iteration_; }
  const LossBreakdown& breakdown() const { return breakdown_; }

 private:
  std::size_t iteration_;
  LossBreakdown breakdown_;
};

/// Minibatch training with one latent sample per datapoint and Adam on
/// both networks. Batches come from seeded epoch permutations, so the
/// result is a pure function of (dataset, init, config, weights).
TrainResult train(const data::Dataset& dataset, VaeModel init, const TrainConfig& config,
                  const LossWeights& weights);

/// Dataset-level diagnostics for a trained model: analytic KL averaged over
/// all rows, and decomposition estimates averaged over consecutive batches.
struct KlDiagnostics {
  double kl_analytic = 0.0;
  double mi_hat = 0.0;
  double tc_hat = 0.0;
  double dkl_hat = 0.0;
};

KlDiagnostics kl_diagnostics(const VaeModel& model, const Matrix& x, std::size_t batch_size,
                             std::uint64_t seed,
                             MarginalEstimator estimator = MarginalEstimator::weighted);

}  // namespace dvae::vae
