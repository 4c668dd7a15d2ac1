#include "dvae/lda/lda.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

namespace dvae::lda {

namespace {

constexpr double kPowerTolerance = 1e-10;
constexpr std::size_t kPowerMaxIterations = 1'000'000;

struct Scatter {
  Matrix within;
  Matrix between;
  Matrix class_means;
  std::vector<std::size_t> counts;
  std::vector<std::size_t> present;  // class indices with at least one row
};

Scatter scatter(const FunctionalTable& t) {
  t.validate();
  const auto nf = t.values.cols();
  const std::size_t classes = t.class_names.size();
  Scatter s;
  s.counts.assign(classes, 0);
  Matrix sums = Matrix::Zero(static_cast<Eigen::Index>(classes), nf);
  for (std::size_t r = 0; r < t.size(); ++r) {
    sums.row(static_cast<Eigen::Index>(t.labels[r])) += t.values.row(static_cast<Eigen::Index>(r));
    ++s.counts[t.labels[r]];
  }
  for (std::size_t c = 0; c < classes; ++c) {
    if (s.counts[c] > 0) s.present.push_back(c);
  }
  if (s.present.size() < 2) {
    throw InvalidArgument("fit_lda: need at least two classes, got " + std::to_string(s.present.size()));
  }
  s.class_means.resize(static_cast<Eigen::Index>(s.present.size()), nf);
  for (std::size_t i = 0; i < s.present.size(); ++i) {
    const auto c = s.present[i];
    s.class_means.row(static_cast<Eigen::Index>(i)) =
        sums.row(static_cast<Eigen::Index>(c)) / static_cast<double>(s.counts[c]);
  }
  std::vector<std::size_t> slot(classes, 0);
  for (std::size_t i = 0; i < s.present.size(); ++i) slot[s.present[i]] = i;

  Matrix centered = t.values;
  for (std::size_t r = 0; r < t.size(); ++r) {
    centered.row(static_cast<Eigen::Index>(r)) -= s.class_means.row(static_cast<Eigen::Index>(slot[t.labels[r]]));
  }
  s.within = centered.transpose() * centered;

  const Eigen::RowVectorXd grand = t.values.colwise().mean();
  s.between = Matrix::Zero(nf, nf);
  for (std::size_t i = 0; i < s.present.size(); ++i) {
    const Eigen::RowVectorXd d = s.class_means.row(static_cast<Eigen::Index>(i)) - grand;
    s.between += static_cast<double>(s.counts[s.present[i]]) * (d.transpose() * d);
  }
  return s;
}

Eigen::LLT<Eigen::MatrixXd> regularized_cholesky(const Matrix& within, double ridge) {
  if (!(ridge >= 0.0) || !std::isfinite(ridge)) throw InvalidArgument("fit_lda: ridge must be >= 0");
  Eigen::MatrixXd a = within;
  a.diagonal().array() += ridge;
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  bool singular = llt.info() != Eigen::Success;
  if (!singular) {
    const Eigen::VectorXd diag = Eigen::MatrixXd(llt.matrixL()).diagonal();
    singular = diag.minCoeff() <= 1e-7 * diag.maxCoeff();
  }
  if (singular) {
    throw InvalidArgument(ridge == 0.0
                              ? "fit_lda: within-class scatter is singular; use a positive ridge (e.g. 1e-6)"
                              : "fit_lda: regularized within-class scatter is not positive definite");
  }
  return llt;
}

void fix_sign(Vector& w) {
  Eigen::Index arg = 0;
  w.cwiseAbs().maxCoeff(&arg);
  if (w(arg) < 0.0) w = -w;
}

}  // namespace

LdaResult fit_lda(const FunctionalTable& train, double ridge) {
  const Scatter s = scatter(train);
  const auto nf = train.values.cols();
  const auto llt = regularized_cholesky(s.within, ridge);
  const auto lower = llt.matrixL();

  // M = L^-1 S_B L^-T, symmetric positive semi-definite.
  Eigen::MatrixXd m = lower.solve(Eigen::MatrixXd(s.between));
  m = lower.solve(Eigen::MatrixXd(m.transpose()));
  m = 0.5 * (m + m.transpose());

  LdaResult result;
  result.names = train.names;
  Eigen::VectorXd v(nf);
  std::mt19937_64 rng(0x6c6461);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Eigen::Index i = 0; i < nf; ++i) v(i) = normal(rng);
  v.normalize();
  for (std::size_t it = 1; it <= kPowerMaxIterations; ++it) {
    Eigen::VectorXd next = m * v;
    const double norm = next.norm();
    result.iterations = it;
    if (!(norm > 0.0)) break;  // S_B = 0: every direction is equally (un)informative
    next /= norm;
    if (next.dot(v) < 0.0) next = -next;
    const double step = (next - v).norm();
    v = next;
    if (step < kPowerTolerance) break;
  }
  Eigen::VectorXd w = lower.transpose().solve(v);
  w.normalize();
  result.projection = w;
  fix_sign(result.projection);
  result.eigenvalue = v.dot(m * v);

  result.class_means = s.class_means;
  result.log_priors.resize(static_cast<Eigen::Index>(s.present.size()));
  for (std::size_t i = 0; i < s.present.size(); ++i) {
    result.class_names.push_back(train.class_names[s.present[i]]);
    result.log_priors(static_cast<Eigen::Index>(i)) =
        std::log(static_cast<double>(s.counts[s.present[i]]) / static_cast<double>(train.size()));
  }
  const double dof = train.size() > s.present.size()
                         ? static_cast<double>(train.size() - s.present.size())
                         : static_cast<double>(train.size());
  Eigen::MatrixXd pooled = s.within / dof;
  pooled.diagonal().array() += std::max(ridge, 1e-12);
  result.precision = pooled.llt().solve(Eigen::MatrixXd::Identity(nf, nf));
  return result;
}

Vector reference_direction(const FunctionalTable& train, double ridge) {
  const Scatter s = scatter(train);
  Eigen::MatrixXd a = s.within;
  a.diagonal().array() += ridge;
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> solver(Eigen::MatrixXd(s.between), a);
  if (solver.info() != Eigen::Success) throw NumericalError("reference_direction: eigensolver failed");
  Vector w = solver.eigenvectors().col(solver.eigenvectors().cols() - 1);
  w.normalize();
  fix_sign(w);
  return w;
}

std::vector<RankedFeature> rank_features(const LdaResult& result, std::size_t top_k) {
  const auto nf = static_cast<std::size_t>(result.projection.size());
  if (top_k > nf) {
    throw InvalidArgument("rank_features: top_k " + std::to_string(top_k) + " exceeds " +
                          std::to_string(nf) + " features");
  }
  std::vector<std::size_t> order(nf);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::abs(result.projection(static_cast<Eigen::Index>(a))) >
           std::abs(result.projection(static_cast<Eigen::Index>(b)));
  });
  std::vector<RankedFeature> ranked;
  for (std::size_t i = 0; i < top_k; ++i) {
    ranked.push_back({order[i], result.names[order[i]],
                      std::abs(result.projection(static_cast<Eigen::Index>(order[i])))});
  }
  return ranked;
}

void write_ranking(const std::filesystem::path& path, const std::vector<RankedFeature>& ranking) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << "rank,name,score\n";
  for (std::size_t i = 0; i < ranking.size(); ++i) {
    out << (i + 1) << ',' << ranking[i].name << ',' << format_double(ranking[i].score) << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::vector<std::size_t> predict(const LdaResult& result, const Matrix& values) {
  require_shape(values, values.rows(), result.precision.rows(), "lda predict input");
  // Linear discriminant: x' P mu_c - 1/2 mu_c' P mu_c + log prior_c.
  const Eigen::MatrixXd pm = result.precision * result.class_means.transpose();  // Nf x C
  Eigen::VectorXd offset(pm.cols());
  for (Eigen::Index c = 0; c < pm.cols(); ++c) {
    offset(c) = -0.5 * result.class_means.row(c).dot(pm.col(c)) + result.log_priors(c);
  }
  const Eigen::MatrixXd scores = (values * pm).rowwise() + offset.transpose();
  std::vector<std::size_t> out(static_cast<std::size_t>(values.rows()));
  for (Eigen::Index r = 0; r < scores.rows(); ++r) {
    Eigen::Index best = 0;
    scores.row(r).maxCoeff(&best);
    out[static_cast<std::size_t>(r)] = static_cast<std::size_t>(best);
  }
  return out;
}

double evaluate_accuracy(const LdaResult& result, const FunctionalTable& test) {
  test.validate();
  if (test.names != result.names) throw InvalidArgument("evaluate_accuracy: column names differ from training");
  if (test.size() == 0) throw InvalidArgument("evaluate_accuracy: empty test table");
  std::vector<std::size_t> truth(test.size());
  for (std::size_t r = 0; r < test.size(); ++r) {
    const auto& name = test.class_names[test.labels[r]];
    const auto it = std::find(result.class_names.begin(), result.class_names.end(), name);
    if (it == result.class_names.end()) {
      throw InvalidArgument("evaluate_accuracy: test label '" + name + "' (id " + test.ids[r] +
                            ") was not seen in training");
    }
    truth[r] = static_cast<std::size_t>(it - result.class_names.begin());
  }
  const auto predicted = predict(result, test.values);
  std::size_t correct = 0;
  for (std::size_t r = 0; r < truth.size(); ++r) correct += predicted[r] == truth[r];
  return static_cast<double>(correct) / static_cast<double>(truth.size());
}

}  // namespace dvae::lda
