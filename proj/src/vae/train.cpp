#include "dvae/vae/train.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "dvae/data/csv.hpp"

namespace dvae::vae {

void TrainConfig::validate() const {
  if (iterations < 1) throw InvalidArgument("train: iterations must be >= 1");
  if (batch_size < 2) throw InvalidArgument("train: batch size must be >= 2");
  if (eval_every < 1) throw InvalidArgument("train: eval_every must be >= 1");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw InvalidArgument("train: learning rate must be finite and >= 0");
  }
}

namespace {

std::string describe(const LossBreakdown& b) {
  std::ostringstream os;
  os << "rec=" << b.rec << " mi=" << b.mi_hat << " tc=" << b.tc_hat << " dkl=" << b.dkl_hat
     << " kl=" << b.kl_analytic << " total=" << b.total;
  return os.str();
}

Matrix standard_normal(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
  return m;
}

}  // namespace

TrainingError::TrainingError(std::size_t iteration, const LossBreakdown& breakdown)
    : NumericalError("non-finite loss at iteration " + std::to_string(iteration) + " (" +
                     describe(breakdown) + ")"),
      iteration_(iteration),
      breakdown_(breakdown) {}

void TrainingLog::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << "iteration,rec,mi_hat,tc_hat,dkl_hat,kl_analytic,total\n";
  for (const auto& r : records) {
    out << r.iteration << ',' << format_double(r.loss.rec) << ',' << format_double(r.loss.mi_hat)
        << ',' << format_double(r.loss.tc_hat) << ',' << format_double(r.loss.dkl_hat) << ','
        << format_double(r.loss.kl_analytic) << ',' << format_double(r.loss.total) << '\n';
  }
}

TrainingLog TrainingLog::read_csv(const std::filesystem::path& path) {
  const auto table = data::read_csv(path);
  if (table.header.size() != 7 || table.header[0] != "iteration") {
    throw InvalidArgument(path.string() + ": not a training log");
  }
  TrainingLog log;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::size_t line = table.line_numbers[r];
    LogRecord rec;
    rec.iteration = static_cast<std::size_t>(data::parse_real(row[0], line, "iteration"));
    rec.loss.rec = data::parse_real(row[1], line, "rec");
    rec.loss.mi_hat = data::parse_real(row[2], line, "mi_hat");
    rec.loss.tc_hat = data::parse_real(row[3], line, "tc_hat");
    rec.loss.dkl_hat = data::parse_real(row[4], line, "dkl_hat");
    rec.loss.kl_analytic = data::parse_real(row[5], line, "kl_analytic");
    rec.loss.total = data::parse_real(row[6], line, "total");
    log.records.push_back(rec);
  }
  return log;
}

TrainResult train(const data::Dataset& dataset, VaeModel init, const TrainConfig& config,
                  const LossWeights& weights) {
  config.validate();
  weights.validate();
  init.validate();
  if (static_cast<std::size_t>(dataset.observations.cols()) != init.observation_dim()) {
    throw InvalidArgument("train: dataset observation width " +
                          std::to_string(dataset.observations.cols()) +
                          " does not match model input width " +
                          std::to_string(init.observation_dim()));
  }
  const std::size_t n = dataset.size();
  if (n < config.batch_size) {
    throw InvalidArgument("train: dataset has fewer rows than one batch");
  }

  TrainResult result{std::move(init), {}};
  VaeModel& model = result.model;
  const nn::AdamConfig adam{config.learning_rate, 0.9, 0.999, 1e-8};
  nn::OptimizerState enc_state = nn::OptimizerState::for_network(model.encoder, adam);
  nn::OptimizerState dec_state = nn::OptimizerState::for_network(model.decoder, adam);

  LossOptions options;
  options.objective = config.objective;
  options.weights = weights;
  options.dataset_size = n;
  options.estimator = config.estimator;

  std::mt19937_64 batch_rng(derive_seed(config.seed, 100));
  std::mt19937_64 noise_rng(derive_seed(config.seed, 101));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::size_t cursor = n;

  const auto b = static_cast<Eigen::Index>(config.batch_size);
  const auto d = static_cast<Eigen::Index>(model.latent_dim());
  Matrix batch(b, dataset.observations.cols());
  for (std::size_t it = 1; it <= config.iterations; ++it) {
    if (cursor + config.batch_size > n) {
      std::shuffle(order.begin(), order.end(), batch_rng);
      cursor = 0;
    }
    for (Eigen::Index r = 0; r < b; ++r) {
      batch.row(r) = dataset.observations.row(static_cast<Eigen::Index>(order[cursor++]));
    }
    const Matrix noise = standard_normal(noise_rng, b, d);
    LossEvaluation eval = evaluate_loss(model, batch, noise, options, true);
    if (!eval.breakdown.finite() || !eval.encoder.finite() || !eval.decoder.finite()) {
      throw TrainingError(it, eval.breakdown);
    }
    if (it == 1 || it % config.eval_every == 0 || it == config.iterations) {
      result.log.records.push_back({it, eval.breakdown});
    }
    nn::adam_step(model.encoder, eval.encoder, enc_state);
    nn::adam_step(model.decoder, eval.decoder, dec_state);
  }
  return result;
}

KlDiagnostics kl_diagnostics(const VaeModel& model, const Matrix& x, std::size_t batch_size,
                             std::uint64_t seed, MarginalEstimator estimator) {
  if (x.rows() < 2) throw InvalidArgument("kl_diagnostics: need at least two rows");
  const GaussianPosterior post = encode(model, x);
  KlDiagnostics out;
  out.kl_analytic = analytic_kl(post);

  const std::size_t n = post.batch();
  const std::size_t b = std::clamp<std::size_t>(batch_size, 2, n);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::size_t batches = 0;
  for (std::size_t start = 0; start + b <= n; start += b) {
    std::vector<std::size_t> rows(b);
    std::iota(rows.begin(), rows.end(), start);
    const GaussianPosterior part = post.rows(rows);
    Matrix noise(part.mu().rows(), part.mu().cols());
    for (Eigen::Index i = 0; i < noise.size(); ++i) noise.data()[i] = normal(rng);
    const Decomposition dec = estimate_decomposition(part, reparameterize(part, noise), n, estimator);
    out.mi_hat += dec.mi;
    out.tc_hat += dec.tc;
    out.dkl_hat += dec.dkl;
    ++batches;
  }
  out.mi_hat /= static_cast<double>(batches);
  out.tc_hat /= static_cast<double>(batches);
  out.dkl_hat /= static_cast<double>(batches);
  return out;
}

}  // namespace dvae::vae
