#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "dvae/metrics/forest.hpp"

namespace dvae::metrics {

/// R (K factors x D latent dims) of non-negative regressor importances.
struct ImportanceMatrix {
  Matrix values;
  std::vector<std::string> factor_names;

  std::size_t factors() const { return static_cast<std::size_t>(values.rows()); }
  std::size_t dims() const { return static_cast<std::size_t>(values.cols()); }

  /// Non-negative, finite, one name per row.
  void validate() const;

  /// `factor,d1,...,dD` header then one row per factor.
  void write_csv(const std::filesystem::path& path) const;
  static ImportanceMatrix read_csv(const std::filesystem::path& path);
};

enum class ImportanceMethod { forest, lasso };

std::string to_string(ImportanceMethod m);
ImportanceMethod importance_method_from_string(const std::string& name);

struct ImportanceConfig {
  ImportanceMethod method = ImportanceMethod::forest;
  ForestConfig forest;
  LassoConfig lasso;
  double train_fraction = 0.8;
};

struct ImportanceFit {
  ImportanceMatrix importance;
  std::vector<double> explicitness;  // held-out MSE per standardized factor
};

/// One regressor per factor on a seeded 80/20 row split. Factors are
/// standardized (population statistics) before fitting; constant columns
/// are rejected. Requires N >= 100.
ImportanceFit fit_importance(const Matrix& latents, const Matrix& factors,
                             const std::vector<std::string>& factor_names, std::uint64_t split_seed,
                             const ImportanceConfig& config = {});

/// Entropy-based scores with the indices of all-zero rows/columns, which
/// score 0.
struct EntropyScores {
  std::vector<double> scores;
  std::vector<std::size_t> flagged;
};

/// Comp_k = 1 + sum_d p_kd log_D p_kd with p_kd = r_kd / sum_d r_kd.
EntropyScores compactness(const ImportanceMatrix& r);

/// Mod_d = 1 + sum_k q_kd log_K q_kd with q_kd = r_kd / sum_k r_kd.
EntropyScores modularity(const ImportanceMatrix& r);

struct DciScores {
  std::vector<double> compactness_per_factor;
  std::vector<double> modularity_per_dim;
  std::vector<double> explicitness_per_factor;
  /// Importance-weighted means (weights: row/column share of total importance).
  double compactness = 0.0;
  double modularity = 0.0;
  /// Plain means.
  double mean_compactness = 0.0;
  double mean_modularity = 0.0;
  double explicitness = 0.0;
  std::vector<std::size_t> flagged_factors;
  std::vector<std::size_t> flagged_dims;
};

DciScores dci_scores(const ImportanceMatrix& r, const std::vector<double>& explicitness);

}  // namespace dvae::metrics
