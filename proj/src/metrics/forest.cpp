#include "dvae/metrics/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace dvae::metrics {

void RegressionForest::fit(const Matrix& x, std::span<const double> y) {
  const auto n = static_cast<std::size_t>(x.rows());
  if (n == 0 || y.size() != n) throw InvalidArgument("RegressionForest::fit: x/y row mismatch or empty");
  if (config_.trees == 0 || config_.max_depth == 0) {
    throw InvalidArgument("RegressionForest: trees and max_depth must be positive");
  }
  const auto features = static_cast<std::size_t>(x.cols());
  trees_.assign(config_.trees, {});
  std::vector<std::vector<double>> per_tree(config_.trees, std::vector<double>(features, 0.0));
  parallel_for(config_.trees, [&](std::size_t t) {
    std::mt19937_64 rng(derive_seed(config_.seed, t));
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::vector<std::size_t> rows(n);
    for (auto& r : rows) r = pick(rng);
    trees_[t] = grow(x, y, std::move(rows), rng(), per_tree[t]);
  });
  importances_.assign(features, 0.0);
  for (const auto& dec : per_tree) {
    const double total = std::accumulate(dec.begin(), dec.end(), 0.0);
    if (total <= 0.0) continue;
    for (std::size_t f = 0; f < features; ++f) importances_[f] += dec[f] / total;
  }
  for (auto& v : importances_) v /= static_cast<double>(config_.trees);
}

RegressionForest::Tree RegressionForest::grow(const Matrix& x, std::span<const double> y,
                                              std::vector<std::size_t> rows, std::uint64_t seed,
                                              std::vector<double>& decrease) const {
  const auto features = static_cast<std::size_t>(x.cols());
  const std::size_t try_features =
      config_.max_features == 0 ? features : std::min(config_.max_features, features);
  const std::size_t min_leaf = std::max<std::size_t>(1, config_.min_samples_leaf);
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> feature_order(features);
  std::iota(feature_order.begin(), feature_order.end(), 0);

  Tree tree;
  struct Pending {
    std::size_t node;
    std::size_t begin, end, depth;
  };
  tree.push_back({});
  std::vector<Pending> stack{{0, 0, rows.size(), 0}};
  std::vector<std::pair<double, double>> sorted;
  while (!stack.empty()) {
    const Pending p = stack.back();
    stack.pop_back();
    const std::size_t count = p.end - p.begin;
    double sum = 0.0;
    for (std::size_t i = p.begin; i < p.end; ++i) sum += y[rows[i]];
    tree[p.node].value = sum / static_cast<double>(count);
    if (p.depth >= config_.max_depth || count < 2 * min_leaf) continue;

    if (try_features < features) std::shuffle(feature_order.begin(), feature_order.end(), rng);
    const double parent_score = sum * sum / static_cast<double>(count);
    double best_gain = 0.0;
    std::size_t best_feature = 0;
    double best_threshold = 0.0;
    for (std::size_t fi = 0; fi < try_features; ++fi) {
      const std::size_t f = feature_order[fi];
      const auto ff = static_cast<Eigen::Index>(f);
      sorted.clear();
      for (std::size_t i = p.begin; i < p.end; ++i) {
        sorted.emplace_back(x(static_cast<Eigen::Index>(rows[i]), ff), y[rows[i]]);
      }
      std::sort(sorted.begin(), sorted.end());
      double left_sum = 0.0;
      for (std::size_t k = 0; k + 1 < count; ++k) {
        left_sum += sorted[k].second;
        const std::size_t n_left = k + 1;
        if (n_left < min_leaf || count - n_left < min_leaf) continue;
        if (sorted[k].first == sorted[k + 1].first) continue;
        const double right_sum = sum - left_sum;
        const double gain = left_sum * left_sum / static_cast<double>(n_left) +
                            right_sum * right_sum / static_cast<double>(count - n_left) -
                            parent_score;
        if (gain > best_gain) {
          best_gain = gain;
          best_feature = f;
          best_threshold = 0.5 * (sorted[k].first + sorted[k + 1].first);
        }
      }
    }
    if (!(best_gain > 1e-12)) continue;

    const auto bf = static_cast<Eigen::Index>(best_feature);
    const auto mid = std::partition(rows.begin() + static_cast<std::ptrdiff_t>(p.begin),
                                    rows.begin() + static_cast<std::ptrdiff_t>(p.end),
                                    [&](std::size_t r) {
                                      return x(static_cast<Eigen::Index>(r), bf) <= best_threshold;
                                    });
    const auto split = static_cast<std::size_t>(mid - rows.begin());
    decrease[best_feature] += best_gain;
    const std::size_t left = tree.size();
    tree.push_back({});
    tree.push_back({});
    tree[p.node].feature = best_feature;
    tree[p.node].threshold = best_threshold;
    tree[p.node].left = left;
    tree[p.node].right = left + 1;
    stack.push_back({left + 1, split, p.end, p.depth + 1});
    stack.push_back({left, p.begin, split, p.depth + 1});
  }
  return tree;
}

double RegressionForest::predict_one(const Tree& tree, const Matrix& x, Eigen::Index row) {
  std::size_t node = 0;
  while (tree[node].left != 0) {
    node = x(row, static_cast<Eigen::Index>(tree[node].feature)) <= tree[node].threshold ? tree[node].left
                                                                                          : tree[node].right;
  }
  return tree[node].value;
}

std::vector<double> RegressionForest::predict(const Matrix& x) const {
  if (trees_.empty()) throw InvalidArgument("RegressionForest::predict: model not fitted");
  std::vector<double> out(static_cast<std::size_t>(x.rows()), 0.0);
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    double acc = 0.0;
    for (const auto& tree : trees_) acc += predict_one(tree, x, r);
    out[static_cast<std::size_t>(r)] = acc / static_cast<double>(trees_.size());
  }
  return out;
}

void LassoRegression::fit(const Matrix& x, std::span<const double> y) {
  const auto n = x.rows();
  const auto p = x.cols();
  if (n < 2 || static_cast<std::size_t>(n) != y.size()) {
    throw InvalidArgument("LassoRegression::fit: need >= 2 rows matching y");
  }
  mean_ = x.colwise().mean().transpose();
  scale_.resize(p);
  Matrix z = x.rowwise() - mean_.transpose();
  for (Eigen::Index j = 0; j < p; ++j) {
    const double sd = std::sqrt(z.col(j).squaredNorm() / static_cast<double>(n));
    scale_[j] = sd > 0.0 ? sd : 1.0;
    z.col(j) /= scale_[j];
  }
  const Eigen::Map<const Vector> target(y.data(), n);
  intercept_ = target.mean();
  Vector residual = target.array() - intercept_;
  weights_ = Vector::Zero(p);
  const double nn = static_cast<double>(n);
  for (std::size_t it = 0; it < config_.max_iterations; ++it) {
    double max_change = 0.0;
    for (Eigen::Index j = 0; j < p; ++j) {
      const double col_sq = z.col(j).squaredNorm() / nn;
      if (col_sq == 0.0) continue;
      const double rho = z.col(j).dot(residual) / nn + col_sq * weights_[j];
      const double updated =
          std::copysign(std::max(0.0, std::abs(rho) - config_.lambda), rho) / col_sq;
      const double delta = updated - weights_[j];
      if (delta != 0.0) {
        residual -= delta * z.col(j);
        weights_[j] = updated;
        max_change = std::max(max_change, std::abs(delta));
      }
    }
    if (max_change < config_.tolerance) break;
  }
}

std::vector<double> LassoRegression::predict(const Matrix& x) const {
  if (weights_.size() != x.cols()) throw InvalidArgument("LassoRegression::predict: width mismatch");
  std::vector<double> out(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    double acc = intercept_;
    for (Eigen::Index j = 0; j < x.cols(); ++j) acc += weights_[j] * (x(r, j) - mean_[j]) / scale_[j];
    out[static_cast<std::size_t>(r)] = acc;
  }
  return out;
}

std::vector<double> LassoRegression::importances() const {
  std::vector<double> out(static_cast<std::size_t>(weights_.size()));
  for (Eigen::Index j = 0; j < weights_.size(); ++j) out[static_cast<std::size_t>(j)] = std::abs(weights_[j]);
  return out;
}

}  // namespace dvae::metrics
