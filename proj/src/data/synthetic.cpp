#include "dvae/data/synthetic.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

#include "dvae/data/csv.hpp"

namespace dvae::data {

std::string to_string(Mixing m) { return m == Mixing::linear ? "linear" : "tanh"; }

Mixing mixing_from_string(const std::string& name) {
  if (name == "linear") return Mixing::linear;
  if (name == "tanh") return Mixing::tanh;
  throw InvalidArgument("unknown mixing '" + name + "' (expected linear or tanh)");
}

namespace {

Matrix correlation_or_identity(const SyntheticConfig& c) {
  if (c.factor_correlation.size() == 0) {
    return Matrix::Identity(static_cast<Eigen::Index>(c.factors), static_cast<Eigen::Index>(c.factors));
  }
  return c.factor_correlation;
}

Matrix cholesky_factor(const SyntheticConfig& c) {
  const Matrix corr = correlation_or_identity(c);
  Eigen::LLT<Eigen::MatrixXd> llt(corr);
  if (llt.info() != Eigen::Success) {
    throw InvalidArgument("factor correlation matrix is not positive definite (Cholesky failed)");
  }
  return llt.matrixL().toDenseMatrix();
}

}  // namespace

void validate(const SyntheticConfig& c) {
  if (c.n_speakers == 0 || c.utterances_per_speaker == 0) {
    throw InvalidArgument("synthetic config: speakers and utterances per speaker must be positive");
  }
  if (c.factors == 0) throw InvalidArgument("synthetic config: need at least one factor");
  if (c.observation_dim < c.factors) {
    throw InvalidArgument("synthetic config: observation dim " + std::to_string(c.observation_dim) +
                          " must be >= number of factors " + std::to_string(c.factors));
  }
  if (!(c.session_noise_std >= 0.0) || !std::isfinite(c.session_noise_std)) {
    throw InvalidArgument("synthetic config: session noise std must be finite and >= 0");
  }
  const Matrix corr = correlation_or_identity(c);
  const auto k = static_cast<Eigen::Index>(c.factors);
  if (corr.rows() != k || corr.cols() != k) {
    throw InvalidArgument("factor correlation matrix must be " + std::to_string(k) + "x" +
                          std::to_string(k) + ", got " + shape_string(corr));
  }
  if (!corr.allFinite()) throw InvalidArgument("factor correlation matrix has non-finite entries");
  if (!corr.isApprox(corr.transpose(), 1e-12)) {
    throw InvalidArgument("factor correlation matrix is not symmetric");
  }
  for (Eigen::Index i = 0; i < k; ++i) {
    if (std::abs(corr(i, i) - 1.0) > 1e-12) {
      throw InvalidArgument("factor correlation matrix must have unit diagonal");
    }
  }
  cholesky_factor(c);
  if (c.mixing_matrix) {
    require_shape(*c.mixing_matrix, static_cast<Eigen::Index>(c.observation_dim), k,
                  "synthetic config: mixing matrix");
  }
}

Matrix mixing_matrix(const SyntheticConfig& c) {
  if (c.mixing_matrix) return *c.mixing_matrix;
  std::mt19937_64 rng(derive_seed(c.seed, 0));
  std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(c.factors)));
  Matrix a(static_cast<Eigen::Index>(c.observation_dim), static_cast<Eigen::Index>(c.factors));
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = normal(rng);
  return a;
}

Dataset generate_synthetic(const SyntheticConfig& c) {
  validate(c);
  const Matrix chol = cholesky_factor(c);
  const Matrix a = mixing_matrix(c);
  const auto k = static_cast<Eigen::Index>(c.factors);
  const auto dx = static_cast<Eigen::Index>(c.observation_dim);
  const std::size_t n = c.n_speakers * c.utterances_per_speaker;

  Dataset ds;
  ds.observations.resize(static_cast<Eigen::Index>(n), dx);
  ds.factors = Matrix(static_cast<Eigen::Index>(n), k);
  ds.labels = std::vector<std::size_t>(n);
  for (Eigen::Index j = 0; j < k; ++j) ds.factor_names.push_back(std::to_string(j + 1));

  const std::uint64_t speaker_stream = derive_seed(c.seed, 1);
  char buf[64];
  for (std::size_t spk = 0; spk < c.n_speakers; ++spk) {
    std::mt19937_64 rng(derive_seed(speaker_stream, spk));
    std::normal_distribution<double> normal(0.0, 1.0);
    Vector z(k);
    for (Eigen::Index j = 0; j < k; ++j) z[j] = normal(rng);
    const Vector f = chol * z;
    Vector clean = a * f;
    if (c.mixing == Mixing::tanh) clean = clean.array().tanh();

    std::snprintf(buf, sizeof(buf), "spk%05zu", spk);
    ds.class_names.emplace_back(buf);
    for (std::size_t u = 0; u < c.utterances_per_speaker; ++u) {
      const std::size_t row = spk * c.utterances_per_speaker + u;
      const auto r = static_cast<Eigen::Index>(row);
      std::snprintf(buf, sizeof(buf), "spk%05zu_utt%04zu", spk, u);
      ds.ids.emplace_back(buf);
      for (Eigen::Index d = 0; d < dx; ++d) {
        ds.observations(r, d) = clean[d] + c.session_noise_std * normal(rng);
      }
      ds.factors->row(r) = f.transpose();
      (*ds.labels)[row] = spk;
    }
  }
  ds.validate();
  return ds;
}

Matrix load_matrix_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open matrix file " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> row;
    for (const auto& cell : split_fields(line)) row.push_back(parse_real(cell, line_no, "matrix"));
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw InvalidArgument(path.string() + ": line " + std::to_string(line_no) + ": ragged matrix row");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw InvalidArgument(path.string() + ": empty matrix file");
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return m;
}

}  // namespace dvae::data
