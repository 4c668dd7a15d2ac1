#pragma once

#include <vector>

#include "dvae/common.hpp"

namespace dvae::metrics {

struct ForestConfig {
  std::size_t trees = 100;
  std::size_t max_depth = 8;
  std::size_t min_samples_leaf = 1;
  std::size_t max_features = 0;  // 0: consider every feature at each split
  std::uint64_t seed = 0;
};

/// Bagged CART regression trees with variance-reduction splits.
class RegressionForest {
 public:
  explicit RegressionForest(ForestConfig config = {}) : config_(config) {}

  void fit(const Matrix& x, std::span<const double> y);
  std::vector<double> predict(const Matrix& x) const;

  /// Mean over trees of the per-tree normalized impurity decrease per
  /// feature (trees that never split contribute zeros).
  const std::vector<double>& importances() const { return importances_; }

 private:
  struct Node {
    std::size_t feature = 0;
    double threshold = 0.0;
    double value = 0.0;
    std::size_t left = 0;  // 0 marks a leaf
    std::size_t right = 0;
  };
  using Tree = std::vector<Node>;

  Tree grow(const Matrix& x, std::span<const double> y, std::vector<std::size_t> rows,
            std::uint64_t seed, std::vector<double>& decrease) const;
  static double predict_one(const Tree& tree, const Matrix& x, Eigen::Index row);

  ForestConfig config_;
  std::vector<Tree> trees_;
  std::vector<double> importances_;
};

struct LassoConfig {
  double lambda = 0.01;
  std::size_t max_iterations = 2000;
  double tolerance = 1e-10;
};

/// L1-penalized least squares, 1/(2n)|y - Xw - b|^2 + lambda |w|_1, by
/// cyclic coordinate descent on internally standardized columns.
class LassoRegression {
 public:
  explicit LassoRegression(LassoConfig config = {}) : config_(config) {}

  void fit(const Matrix& x, std::span<const double> y);
  std::vector<double> predict(const Matrix& x) const;

  /// |w| in standardized-column units.
  std::vector<double> importances() const;

 private:
  LassoConfig config_;
  Vector mean_, scale_, weights_;
  double intercept_ = 0.0;
};

}  // namespace dvae::metrics
