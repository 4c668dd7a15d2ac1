#include "dvae/vae/model.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "dvae/nn/checkpoint.hpp"

namespace dvae::vae {

GaussianPosterior::GaussianPosterior(Matrix mu, Matrix log_var)
    : mu_(std::move(mu)), log_var_(std::move(log_var)) {
  require_shape(log_var_, mu_.rows(), mu_.cols(), "GaussianPosterior log_var");
  if (!mu_.allFinite() || !log_var_.allFinite()) {
    throw NumericalError("GaussianPosterior: non-finite mean or log-variance");
  }
  log_var_ = log_var_.cwiseMax(kLogVarMin).cwiseMin(kLogVarMax);
}

GaussianPosterior GaussianPosterior::rows(const std::vector<std::size_t>& index) const {
  Matrix mu(static_cast<Eigen::Index>(index.size()), mu_.cols());
  Matrix lv(static_cast<Eigen::Index>(index.size()), mu_.cols());
  for (std::size_t i = 0; i < index.size(); ++i) {
    const auto src = static_cast<Eigen::Index>(index[i]);
    if (src >= mu_.rows()) throw InvalidArgument("GaussianPosterior::rows: index out of range");
    mu.row(static_cast<Eigen::Index>(i)) = mu_.row(src);
    lv.row(static_cast<Eigen::Index>(i)) = log_var_.row(src);
  }
  return GaussianPosterior(std::move(mu), std::move(lv));
}

void VaeModel::validate() const {
  if (encoder.layer_count() == 0 || decoder.layer_count() == 0) {
    throw InvalidArgument("VaeModel: encoder and decoder must be non-empty");
  }
  if (encoder.output_width() != 2 * decoder.input_width()) {
    std::ostringstream os;
    os << "VaeModel: encoder output width " << encoder.output_width()
       << " must be twice the decoder input width " << decoder.input_width();
    throw InvalidArgument(os.str());
  }
  if (encoder.input_width() != decoder.output_width()) {
    std::ostringstream os;
    os << "VaeModel: encoder input width " << encoder.input_width()
       << " differs from decoder output width " << decoder.output_width();
    throw InvalidArgument(os.str());
  }
}

VaeModel VaeModel::make(const ModelConfig& config, std::uint64_t seed) {
  if (config.observation_dim == 0 || config.latent_dim == 0) {
    throw InvalidArgument("ModelConfig: observation and latent dimensions must be positive");
  }
  std::vector<std::size_t> enc{config.observation_dim};
  enc.insert(enc.end(), config.hidden.begin(), config.hidden.end());
  enc.push_back(2 * config.latent_dim);
  std::vector<std::size_t> dec{config.latent_dim};
  dec.insert(dec.end(), config.hidden.rbegin(), config.hidden.rend());
  dec.push_back(config.observation_dim);
  VaeModel m{nn::DenseNetwork::make(enc, config.activation, nn::Activation::identity,
                                    derive_seed(seed, 0)),
             nn::DenseNetwork::make(dec, config.activation, nn::Activation::identity,
                                    derive_seed(seed, 1))};
  m.validate();
  return m;
}

GaussianPosterior encode(const VaeModel& model, const Matrix& x) {
  if (!x.allFinite()) throw InvalidArgument("encode: input contains non-finite values");
  const Matrix out = model.encoder.forward(x);
  const auto d = static_cast<Eigen::Index>(model.latent_dim());
  if (out.cols() != 2 * d) throw InvalidArgument("encode: encoder output width is not 2*latent_dim");
  return GaussianPosterior(out.leftCols(d), out.rightCols(d));
}

Matrix decode(const VaeModel& model, const Matrix& latents) { return model.decoder.forward(latents); }

Matrix reconstruct(const VaeModel& model, const Matrix& x) {
  return decode(model, encode(model, x).mu());
}

Matrix reparameterize(const GaussianPosterior& post, const Matrix& noise) {
  require_shape(noise, post.mu().rows(), post.mu().cols(), "reparameterize: noise");
  return post.mu().array() + (0.5 * post.log_var().array()).exp() * noise.array();
}

double reconstruction_loss(const Matrix& x, const Matrix& x_hat) {
  require_shape(x_hat, x.rows(), x.cols(), "reconstruction_loss: x_hat");
  if (x.rows() == 0) throw InvalidArgument("reconstruction_loss: empty batch");
  return 0.5 * (x - x_hat).squaredNorm() / static_cast<double>(x.rows());
}

double analytic_kl(const GaussianPosterior& post) {
  if (post.batch() == 0) throw InvalidArgument("analytic_kl: empty batch");
  const auto& mu = post.mu().array();
  const auto& lv = post.log_var().array();
  const double total = 0.5 * (mu.square() + lv.exp() - 1.0 - lv).sum();
  return total / static_cast<double>(post.batch());
}

void save_model(const std::filesystem::path& path, const VaeModel& model) {
  model.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  nn::write_network(out, model.encoder);
  nn::write_network(out, model.decoder);
}

VaeModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open checkpoint " + path.string());
  VaeModel m{nn::read_network(in), nn::read_network(in)};
  m.validate();
  return m;
}

}  // namespace dvae::vae
