#pragma once

#include <filesystem>
#include <vector>

#include "dvae/nn/network.hpp"

namespace dvae::vae {

inline constexpr double kLogVarMin = -12.0;
inline constexpr double kLogVarMax = 12.0;

/// Diagonal Gaussian q(s|x) per row. log_var is clamped to
/// [kLogVarMin, kLogVarMax] on construction.
class GaussianPosterior {
 public:
  GaussianPosterior() = default;
  GaussianPosterior(Matrix mu, Matrix log_var);

  const Matrix& mu() const { return mu_; }
  const Matrix& log_var() const { return log_var_; }
  std::size_t batch() const { return static_cast<std::size_t>(mu_.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(mu_.cols()); }

  /// Rows selected by index, in the given order.
  GaussianPosterior rows(const std::vector<std::size_t>& index) const;

 private:
  Matrix mu_;
  Matrix log_var_;
};

struct ModelConfig {
  std::size_t observation_dim = 64;
  std::size_t latent_dim = 16;
  std::vector<std::size_t> hidden{256, 256, 256, 256};
  nn::Activation activation = nn::Activation::tanh;
};

/// Encoder maps Dx -> 2D (mu then log-variance); decoder maps D -> Dx.
struct VaeModel {
  nn::DenseNetwork encoder;
  nn::DenseNetwork decoder;

  std::size_t latent_dim() const { return decoder.input_width(); }
  std::size_t observation_dim() const { return decoder.output_width(); }

  /// Throws InvalidArgument unless encoder/decoder widths agree.
  void validate() const;

  static VaeModel make(const ModelConfig& config, std::uint64_t seed);

  bool operator==(const VaeModel& other) const = default;
};

/// Splits the encoder output into (mu, clamped log-variance).
GaussianPosterior encode(const VaeModel& model, const Matrix& x);

Matrix decode(const VaeModel& model, const Matrix& latents);

/// Mean-latent reconstruction: decode(encode(x).mu).
Matrix reconstruct(const VaeModel& model, const Matrix& x);

/// s = mu + exp(log_var / 2) * noise.
Matrix reparameterize(const GaussianPosterior& post, const Matrix& noise);

/// Batch mean of 0.5 * ||x - x_hat||^2.
double reconstruction_loss(const Matrix& x, const Matrix& x_hat);

/// Batch mean of KL(q(s|x) || N(0, I)).
double analytic_kl(const GaussianPosterior& post);

/// Encoder record followed by decoder record, both in the network
/// checkpoint format.
void save_model(const std::filesystem::path& path, const VaeModel& model);
VaeModel load_model(const std::filesystem::path& path);

}  // namespace dvae::vae
