#include "dvae/metrics/dci.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include "dvae/data/csv.hpp"

namespace dvae::metrics {

void ImportanceMatrix::validate() const {
  if (factor_names.size() != factors()) {
    throw InvalidArgument("importance matrix: " + std::to_string(factor_names.size()) +
                          " names for " + std::to_string(factors()) + " rows");
  }
  if (!values.allFinite() || (values.size() > 0 && values.minCoeff() < 0.0)) {
    throw InvalidArgument("importance matrix entries must be finite and non-negative");
  }
}

void ImportanceMatrix::write_csv(const std::filesystem::path& path) const {
  validate();
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << "factor";
  for (std::size_t d = 0; d < dims(); ++d) out << ",d" << (d + 1);
  out << '\n';
  for (std::size_t k = 0; k < factors(); ++k) {
    out << factor_names[k];
    for (std::size_t d = 0; d < dims(); ++d) {
      out << ',' << format_double(values(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(d)));
    }
    out << '\n';
  }
}

ImportanceMatrix ImportanceMatrix::read_csv(const std::filesystem::path& path) {
  const auto table = data::read_csv(path);
  if (table.header.empty() || table.header[0] != "factor") {
    throw InvalidArgument(path.string() + ": not an importance matrix");
  }
  ImportanceMatrix r;
  r.values.resize(static_cast<Eigen::Index>(table.rows.size()),
                  static_cast<Eigen::Index>(table.header.size() - 1));
  for (std::size_t k = 0; k < table.rows.size(); ++k) {
    r.factor_names.push_back(table.rows[k][0]);
    for (std::size_t d = 1; d < table.header.size(); ++d) {
      r.values(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(d - 1)) =
          data::parse_real(table.rows[k][d], table.line_numbers[k], table.header[d]);
    }
  }
  r.validate();
  return r;
}

std::string to_string(ImportanceMethod m) { return m == ImportanceMethod::forest ? "forest" : "lasso"; }

ImportanceMethod importance_method_from_string(const std::string& name) {
  if (name == "forest") return ImportanceMethod::forest;
  if (name == "lasso") return ImportanceMethod::lasso;
  throw InvalidArgument("unknown importance method '" + name + "' (expected forest or lasso)");
}

ImportanceFit fit_importance(const Matrix& latents, const Matrix& factors,
                             const std::vector<std::string>& factor_names, std::uint64_t split_seed,
                             const ImportanceConfig& config) {
  const auto n = latents.rows();
  if (factors.rows() != n) throw InvalidArgument("fit_importance: latent/factor row counts differ");
  if (n < 100) throw InvalidArgument("fit_importance: needs at least 100 rows, got " + std::to_string(n));
  if (static_cast<std::size_t>(factors.cols()) != factor_names.size()) {
    throw InvalidArgument("fit_importance: factor names do not match factor columns");
  }
  if (!(config.train_fraction > 0.0 && config.train_fraction < 1.0)) {
    throw InvalidArgument("fit_importance: train fraction must lie in (0, 1)");
  }

  Matrix standardized = factors;
  for (Eigen::Index k = 0; k < factors.cols(); ++k) {
    const double mean = factors.col(k).mean();
    const double sd = std::sqrt((factors.col(k).array() - mean).square().sum() / static_cast<double>(n));
    if (!(sd > 0.0)) {
      throw InvalidArgument("fit_importance: factor '" + factor_names[static_cast<std::size_t>(k)] +
                            "' is constant; cannot standardize");
    }
    standardized.col(k) = (factors.col(k).array() - mean) / sd;
  }

  std::vector<std::size_t> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(split_seed);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_train = static_cast<Eigen::Index>(
      std::clamp<long long>(std::llround(config.train_fraction * static_cast<double>(n)), 1, n - 1));
  Matrix x_train(n_train, latents.cols()), x_test(n - n_train, latents.cols());
  Matrix y_train(n_train, factors.cols()), y_test(n - n_train, factors.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto src = static_cast<Eigen::Index>(order[static_cast<std::size_t>(i)]);
    if (i < n_train) {
      x_train.row(i) = latents.row(src);
      y_train.row(i) = standardized.row(src);
    } else {
      x_test.row(i - n_train) = latents.row(src);
      y_test.row(i - n_train) = standardized.row(src);
    }
  }

  ImportanceFit fit;
  fit.importance.factor_names = factor_names;
  fit.importance.values = Matrix::Zero(factors.cols(), latents.cols());
  fit.explicitness.resize(static_cast<std::size_t>(factors.cols()));
  for (Eigen::Index k = 0; k < factors.cols(); ++k) {
    const Vector target_train = y_train.col(k);
    std::vector<double> importances, predicted;
    if (config.method == ImportanceMethod::forest) {
      ForestConfig fc = config.forest;
      fc.seed = derive_seed(config.forest.seed, static_cast<std::uint64_t>(k));
      RegressionForest forest(fc);
      forest.fit(x_train, std::span<const double>(target_train.data(), target_train.size()));
      importances = forest.importances();
      predicted = forest.predict(x_test);
    } else {
      LassoRegression lasso(config.lasso);
      lasso.fit(x_train, std::span<const double>(target_train.data(), target_train.size()));
      importances = lasso.importances();
      predicted = lasso.predict(x_test);
    }
    for (std::size_t d = 0; d < importances.size(); ++d) {
      fit.importance.values(k, static_cast<Eigen::Index>(d)) = std::abs(importances[d]);
    }
    double sse = 0.0;
    for (Eigen::Index i = 0; i < x_test.rows(); ++i) {
      const double e = predicted[static_cast<std::size_t>(i)] - y_test(i, k);
      sse += e * e;
    }
    fit.explicitness[static_cast<std::size_t>(k)] = sse / static_cast<double>(x_test.rows());
  }
  return fit;
}

namespace {

// 1 - H(p)/log(base) for p proportional to `weights`; 0 with flag for an
// all-zero vector. Terms are summed as p_i * (log(S / r_i) / log(base)) with
// compensation so that one-hot and uniform inputs land exactly on 1 and 0.
double normalized_entropy_score(std::vector<double> weights, bool& flagged) {
  // Scaling by the maximum first makes equal weights exactly 1.
  const double peak = weights.empty() ? 0.0 : *std::max_element(weights.begin(), weights.end());
  if (peak > 0.0) {
    for (double& w : weights) w /= peak;
  }
  CompensatedSum total;
  for (double w : weights) total.add(w);
  const double s = total.value();
  flagged = !(s > 0.0);
  if (flagged) return 0.0;
  if (weights.size() < 2) return 1.0;
  const double log_base = std::log(static_cast<double>(weights.size()));
  CompensatedSum entropy;
  for (double w : weights) {
    if (w <= 0.0) continue;
    entropy.add((w / s) * (std::log(s / w) / log_base));
  }
  return std::clamp(1.0 - entropy.value(), 0.0, 1.0);
}

}  // namespace

EntropyScores compactness(const ImportanceMatrix& r) {
  r.validate();
  EntropyScores out;
  for (std::size_t k = 0; k < r.factors(); ++k) {
    std::vector<double> row(r.dims());
    for (std::size_t d = 0; d < r.dims(); ++d) {
      row[d] = r.values(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(d));
    }
    bool flagged = false;
    out.scores.push_back(normalized_entropy_score(row, flagged));
    if (flagged) out.flagged.push_back(k);
  }
  return out;
}

EntropyScores modularity(const ImportanceMatrix& r) {
  r.validate();
  EntropyScores out;
  for (std::size_t d = 0; d < r.dims(); ++d) {
    std::vector<double> col(r.factors());
    for (std::size_t k = 0; k < r.factors(); ++k) {
      col[k] = r.values(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(d));
    }
    bool flagged = false;
    out.scores.push_back(normalized_entropy_score(col, flagged));
    if (flagged) out.flagged.push_back(d);
  }
  return out;
}

DciScores dci_scores(const ImportanceMatrix& r, const std::vector<double>& explicitness) {
  if (explicitness.size() != r.factors()) {
    throw InvalidArgument("dci_scores: explicitness length differs from factor count");
  }
  const EntropyScores comp = compactness(r);
  const EntropyScores mod = modularity(r);
  DciScores s;
  s.compactness_per_factor = comp.scores;
  s.modularity_per_dim = mod.scores;
  s.explicitness_per_factor = explicitness;
  s.flagged_factors = comp.flagged;
  s.flagged_dims = mod.flagged;

  const double total = r.values.sum();
  const auto mean = [](const std::vector<double>& v) {
    return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  };
  s.mean_compactness = mean(comp.scores);
  s.mean_modularity = mean(mod.scores);
  s.explicitness = mean(explicitness);
  if (total > 0.0) {
    CompensatedSum c, m;
    for (std::size_t k = 0; k < r.factors(); ++k) {
      c.add(r.values.row(static_cast<Eigen::Index>(k)).sum() / total * comp.scores[k]);
    }
    for (std::size_t d = 0; d < r.dims(); ++d) {
      m.add(r.values.col(static_cast<Eigen::Index>(d)).sum() / total * mod.scores[d]);
    }
    s.compactness = std::clamp(c.value(), 0.0, 1.0);
    s.modularity = std::clamp(m.value(), 0.0, 1.0);
  }
  return s;
}

}  // namespace dvae::metrics
