#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "dvae/data/synthetic.hpp"
#include "dvae/metrics/dci.hpp"
#include "dvae/vae/train.hpp"

namespace dvae::cli {

// Subcommand parameters. Each struct round-trips through JSON; that JSON is
// the config echoed into reports and accepted back through --config.
// Output locations and parallelism are execution details and stay out of it.

struct SynthOptions {
  std::size_t speakers = 200;
  std::size_t utterances = 10;
  std::size_t factors = 8;
  std::size_t observation_dim = 64;
  std::string correlation;  // optional K x K CSV
  std::string mixing = "linear";
  double session_noise = 0.1;
  std::uint64_t seed = 0;

  data::SyntheticConfig to_synthetic() const;
  void validate() const;
};

struct TrainOptions {
  std::string data;
  std::size_t latent_dim = 16;
  std::vector<std::size_t> hidden{256, 256, 256, 256};
  std::string activation = "tanh";
  std::string objective = "tcvae";
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  double beta_s = 1.0;
  std::size_t iterations = 10000;
  std::size_t batch_size = 64;
  double learning_rate = 1e-4;
  std::size_t eval_every = 100;
  std::string estimator = "weighted";
  std::uint64_t seed = 0;

  vae::ModelConfig model_config(std::size_t observation_dim) const;
  vae::TrainConfig train_config() const;
  vae::LossWeights weights() const;
  void validate() const;
};

struct EvalOptions {
  std::string data;
  std::string model;       // checkpoint; unused in bypass mode
  bool bypass = false;     // score raw observations instead of a model
  std::string trials;      // optional trial-list file
  std::size_t trials_per_class = 20;
  std::size_t mi_rows = 2048;
  std::size_t mc_samples = 8;
  std::size_t kl_batch = 64;
  std::string estimator = "weighted";
  std::string importance = "forest";
  std::size_t forest_trees = 100;
  std::size_t forest_depth = 8;
  double lasso_lambda = 0.01;
  double train_fraction = 0.8;
  std::uint64_t seed = 0;

  metrics::ImportanceConfig importance_config() const;
  void validate() const;
};

struct SweepOptions {
  TrainOptions train;
  EvalOptions eval;  // model and bypass are ignored
  std::vector<double> beta_s;  // non-empty: beta-VAE cells over this grid
  std::vector<double> alpha;   // otherwise: TC-VAE cells over alpha x beta x gamma
  std::vector<double> beta;
  std::vector<double> gamma;

  void validate() const;
};

struct RankOptions {
  std::string table;
  std::size_t top_k = 10;
  double ridge = 1e-6;
  double train_fraction = 0.8;
  std::uint64_t seed = 0;

  void validate() const;
};

nlohmann::json to_json(const SynthOptions& o);
nlohmann::json to_json(const TrainOptions& o);
nlohmann::json to_json(const EvalOptions& o);
nlohmann::json to_json(const SweepOptions& o);
nlohmann::json to_json(const RankOptions& o);

// Reads every key of `j` into `o`; unknown keys are rejected so typos in a
// config file do not pass silently.
void from_json(const nlohmann::json& j, SynthOptions& o);
void from_json(const nlohmann::json& j, TrainOptions& o);
void from_json(const nlohmann::json& j, EvalOptions& o);
void from_json(const nlohmann::json& j, SweepOptions& o);
void from_json(const nlohmann::json& j, RankOptions& o);

/// Loads --config: either a bare options object or a report carrying one
/// under "config". Returns the options object.
nlohmann::json load_config_document(const std::filesystem::path& path);

/// Applies a config document on top of flag-derived options (config wins).
template <typename Options>
void apply_config(Options& options, const nlohmann::json& overrides) {
  nlohmann::json merged = to_json(options);
  merged.merge_patch(overrides);
  from_json(merged, options);
}

}  // namespace dvae::cli
