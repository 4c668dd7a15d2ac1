#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "dvae/vae/model.hpp"

namespace dvae::testing {

inline Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, scale);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
  return m;
}

inline nn::DenseLayer layer(Matrix w, Vector b, nn::Activation a = nn::Activation::identity) {
  return {std::move(w), std::move(b), a};
}

/// mu = x, tight posterior, decoder = identity: reconstructions equal inputs.
inline vae::VaeModel identity_model(std::size_t dim, double log_var = -10.0) {
  const auto d = static_cast<Eigen::Index>(dim);
  Matrix enc = Matrix::Zero(2 * d, d);
  enc.topRows(d) = Matrix::Identity(d, d);
  Vector enc_b = Vector::Zero(2 * d);
  enc_b.tail(d).setConstant(log_var);
  vae::VaeModel m;
  m.encoder = nn::DenseNetwork({layer(enc, enc_b)});
  m.decoder = nn::DenseNetwork({layer(Matrix::Identity(d, d), Vector::Zero(d))});
  return m;
}

/// Encoder ignores its input: every posterior is N(0, 1); decoder emits a
/// constant vector.
inline vae::VaeModel collapsed_model(std::size_t obs_dim, std::size_t latent_dim) {
  const auto dx = static_cast<Eigen::Index>(obs_dim);
  const auto d = static_cast<Eigen::Index>(latent_dim);
  vae::VaeModel m;
  m.encoder = nn::DenseNetwork({layer(Matrix::Zero(2 * d, dx), Vector::Zero(2 * d))});
  m.decoder = nn::DenseNetwork({layer(Matrix::Zero(dx, d), Vector::Ones(dx))});
  return m;
}

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("dvae_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace dvae::testing
