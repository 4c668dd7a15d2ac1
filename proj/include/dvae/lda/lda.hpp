#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "dvae/lda/functional_table.hpp"

namespace dvae::lda {

struct LdaResult {
  std::vector<std::string> names;
  Vector projection;       // unit norm, largest-magnitude entry positive
  double eigenvalue = 0.0; // generalized Rayleigh quotient of `projection`
  std::size_t iterations = 0;
  // Shared-covariance Gaussian discriminant over all training classes.
  std::vector<std::string> class_names;
  Matrix class_means;      // C x Nf
  Vector log_priors;
  Matrix precision;        // inverse pooled covariance
};

/// Top discriminant direction of (S_W + ridge I)^-1 S_B by power iteration
/// on the symmetrized problem. Expects standardized columns and at least
/// two classes. Rejects a singular S_W when ridge is 0.
LdaResult fit_lda(const FunctionalTable& train, double ridge = 1e-6);

/// Dense reference solution of the same generalized eigenproblem.
Vector reference_direction(const FunctionalTable& train, double ridge = 1e-6);

struct RankedFeature {
  std::size_t index = 0;
  std::string name;
  double score = 0.0;  // |w_i|
};

/// Features by |w| descending, ties broken by column index.
std::vector<RankedFeature> rank_features(const LdaResult& result, std::size_t top_k);

/// `rank,name,score` with ranks starting at 1.
void write_ranking(const std::filesystem::path& path, const std::vector<RankedFeature>& ranking);

/// Discriminant argmax per row, as indices into result.class_names.
std::vector<std::size_t> predict(const LdaResult& result, const Matrix& values);

/// Share of rows whose predicted class equals the true label. Labels are
/// matched by class name; a class never seen in training is rejected.
double evaluate_accuracy(const LdaResult& result, const FunctionalTable& test);

}  // namespace dvae::lda
