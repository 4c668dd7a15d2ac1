#include "dvae/cli/run_config.hpp"

#include <cmath>
#include <set>

#include "dvae/metrics/report.hpp"

namespace dvae::cli {

using nlohmann::json;

namespace {

// Pulls typed fields out of a JSON object and rejects keys nobody asked for.
class Reader {
 public:
  Reader(const json& j, std::string what) : j_(j), what_(std::move(what)) {
    if (!j_.is_object()) throw InvalidArgument(what_ + " config must be a JSON object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    const auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const json::exception&) {
      throw InvalidArgument(what_ + " config: field '" + key + "' has the wrong type");
    }
  }

  const json* sub(const char* key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.contains(key)) throw InvalidArgument(what_ + " config: unknown field '" + key + "'");
    }
  }

 private:
  const json& j_;
  std::string what_;
  std::set<std::string> seen_;
};

void require_positive(std::size_t v, const char* name) {
  if (v == 0) throw InvalidArgument(std::string(name) + " must be positive");
}

void require_fraction(double v, const char* name) {
  if (!(v > 0.0 && v < 1.0)) throw InvalidArgument(std::string(name) + " must lie strictly between 0 and 1");
}

void require_grid(const std::vector<double>& grid, const char* name) {
  if (grid.empty()) throw InvalidArgument(std::string(name) + " grid must not be empty");
  for (double v : grid) {
    if (!std::isfinite(v) || v < 0.0) throw InvalidArgument(std::string(name) + " grid values must be finite and >= 0");
  }
}

}  // namespace

data::SyntheticConfig SynthOptions::to_synthetic() const {
  data::SyntheticConfig c;
  c.n_speakers = speakers;
  c.utterances_per_speaker = utterances;
  c.factors = factors;
  c.observation_dim = observation_dim;
  c.mixing = data::mixing_from_string(mixing);
  c.session_noise_std = session_noise;
  c.seed = seed;
  if (!correlation.empty()) c.factor_correlation = data::load_matrix_csv(correlation);
  return c;
}

void SynthOptions::validate() const { data::validate(to_synthetic()); }

vae::ModelConfig TrainOptions::model_config(std::size_t observation_dim) const {
  vae::ModelConfig c;
  c.observation_dim = observation_dim;
  c.latent_dim = latent_dim;
  c.hidden = hidden;
  c.activation = nn::activation_from_string(activation);
  return c;
}

vae::TrainConfig TrainOptions::train_config() const {
  vae::TrainConfig c;
  c.iterations = iterations;
  c.batch_size = batch_size;
  c.learning_rate = learning_rate;
  c.seed = seed;
  c.eval_every = eval_every;
  c.objective = vae::objective_from_string(objective);
  c.estimator = vae::marginal_estimator_from_string(estimator);
  return c;
}

vae::LossWeights TrainOptions::weights() const { return {alpha, beta, gamma, beta_s}; }

void TrainOptions::validate() const {
  if (data.empty()) throw InvalidArgument("a dataset path is required (--data)");
  require_positive(latent_dim, "latent_dim");
  for (auto h : hidden) require_positive(h, "hidden layer width");
  nn::activation_from_string(activation);
  train_config().validate();
  weights().validate();
}

metrics::ImportanceConfig EvalOptions::importance_config() const {
  metrics::ImportanceConfig c;
  c.method = metrics::importance_method_from_string(importance);
  c.forest.trees = forest_trees;
  c.forest.max_depth = forest_depth;
  c.forest.seed = derive_seed(seed, 15);
  c.lasso.lambda = lasso_lambda;
  c.train_fraction = train_fraction;
  return c;
}

void EvalOptions::validate() const {
  if (data.empty()) throw InvalidArgument("a dataset path is required (--data)");
  require_positive(trials_per_class, "trials_per_class");
  if (mi_rows < 2) throw InvalidArgument("mi_rows must be at least 2");
  require_positive(mc_samples, "mc_samples");
  if (kl_batch < 2) throw InvalidArgument("kl_batch must be at least 2");
  vae::marginal_estimator_from_string(estimator);
  importance_config();
  require_positive(forest_trees, "forest_trees");
  require_positive(forest_depth, "forest_depth");
  if (!(lasso_lambda >= 0.0)) throw InvalidArgument("lasso_lambda must be >= 0");
  require_fraction(train_fraction, "train_fraction");
}

void SweepOptions::validate() const {
  train.validate();
  EvalOptions e = eval;
  e.data = train.data;
  e.validate();
  const bool tc_grid = !alpha.empty() || !beta.empty() || !gamma.empty();
  if (!beta_s.empty()) {
    if (tc_grid) throw InvalidArgument("give either a beta_s grid or alpha/beta/gamma grids, not both");
    require_grid(beta_s, "beta_s");
  } else {
    require_grid(alpha, "alpha");
    require_grid(beta, "beta");
    require_grid(gamma, "gamma");
  }
}

void RankOptions::validate() const {
  if (table.empty()) throw InvalidArgument("a functional table path is required (--table)");
  require_positive(top_k, "top_k");
  if (!(ridge >= 0.0) || !std::isfinite(ridge)) throw InvalidArgument("ridge must be >= 0");
  require_fraction(train_fraction, "train_fraction");
}

json to_json(const SynthOptions& o) {
  return {{"speakers", o.speakers},       {"utterances", o.utterances},
          {"factors", o.factors},         {"observation_dim", o.observation_dim},
          {"correlation", o.correlation}, {"mixing", o.mixing},
          {"session_noise", o.session_noise}, {"seed", o.seed}};
}

json to_json(const TrainOptions& o) {
  return {{"data", o.data},
          {"latent_dim", o.latent_dim},
          {"hidden", o.hidden},
          {"activation", o.activation},
          {"objective", o.objective},
          {"alpha", o.alpha},
          {"beta", o.beta},
          {"gamma", o.gamma},
          {"beta_s", o.beta_s},
          {"iterations", o.iterations},
          {"batch_size", o.batch_size},
          {"learning_rate", o.learning_rate},
          {"eval_every", o.eval_every},
          {"estimator", o.estimator},
          {"seed", o.seed}};
}

json to_json(const EvalOptions& o) {
  return {{"data", o.data},
          {"model", o.model},
          {"bypass", o.bypass},
          {"trials", o.trials},
          {"trials_per_class", o.trials_per_class},
          {"mi_rows", o.mi_rows},
          {"mc_samples", o.mc_samples},
          {"kl_batch", o.kl_batch},
          {"estimator", o.estimator},
          {"importance", o.importance},
          {"forest_trees", o.forest_trees},
          {"forest_depth", o.forest_depth},
          {"lasso_lambda", o.lasso_lambda},
          {"train_fraction", o.train_fraction},
          {"seed", o.seed}};
}

json to_json(const SweepOptions& o) {
  return {{"train", to_json(o.train)},
          {"eval", to_json(o.eval)},
          {"beta_s", o.beta_s},
          {"alpha", o.alpha},
          {"beta", o.beta},
          {"gamma", o.gamma}};
}

json to_json(const RankOptions& o) {
  return {{"table", o.table},
          {"top_k", o.top_k},
          {"ridge", o.ridge},
          {"train_fraction", o.train_fraction},
          {"seed", o.seed}};
}

void from_json(const json& j, SynthOptions& o) {
  Reader r(j, "synth");
  r.get("speakers", o.speakers);
  r.get("utterances", o.utterances);
  r.get("factors", o.factors);
  r.get("observation_dim", o.observation_dim);
  r.get("correlation", o.correlation);
  r.get("mixing", o.mixing);
  r.get("session_noise", o.session_noise);
  r.get("seed", o.seed);
  r.finish();
}

void from_json(const json& j, TrainOptions& o) {
  Reader r(j, "train");
  r.get("data", o.data);
  r.get("latent_dim", o.latent_dim);
  r.get("hidden", o.hidden);
  r.get("activation", o.activation);
  r.get("objective", o.objective);
  r.get("alpha", o.alpha);
  r.get("beta", o.beta);
  r.get("gamma", o.gamma);
  r.get("beta_s", o.beta_s);
  r.get("iterations", o.iterations);
  r.get("batch_size", o.batch_size);
  r.get("learning_rate", o.learning_rate);
  r.get("eval_every", o.eval_every);
  r.get("estimator", o.estimator);
  r.get("seed", o.seed);
  r.finish();
}

void from_json(const json& j, EvalOptions& o) {
  Reader r(j, "eval");
  r.get("data", o.data);
  r.get("model", o.model);
  r.get("bypass", o.bypass);
  r.get("trials", o.trials);
  r.get("trials_per_class", o.trials_per_class);
  r.get("mi_rows", o.mi_rows);
  r.get("mc_samples", o.mc_samples);
  r.get("kl_batch", o.kl_batch);
  r.get("estimator", o.estimator);
  r.get("importance", o.importance);
  r.get("forest_trees", o.forest_trees);
  r.get("forest_depth", o.forest_depth);
  r.get("lasso_lambda", o.lasso_lambda);
  r.get("train_fraction", o.train_fraction);
  r.get("seed", o.seed);
  r.finish();
}

void from_json(const json& j, SweepOptions& o) {
  Reader r(j, "sweep");
  if (const json* t = r.sub("train")) from_json(*t, o.train);
  if (const json* e = r.sub("eval")) from_json(*e, o.eval);
  r.get("beta_s", o.beta_s);
  r.get("alpha", o.alpha);
  r.get("beta", o.beta);
  r.get("gamma", o.gamma);
  r.finish();
}

void from_json(const json& j, RankOptions& o) {
  Reader r(j, "rank");
  r.get("table", o.table);
  r.get("top_k", o.top_k);
  r.get("ridge", o.ridge);
  r.get("train_fraction", o.train_fraction);
  r.get("seed", o.seed);
  r.finish();
}

json load_config_document(const std::filesystem::path& path) {
  json doc = metrics::read_json(path);
  if (doc.is_object() && doc.contains("config")) doc = doc["config"];
  if (!doc.is_object()) throw InvalidArgument(path.string() + ": config must be a JSON object");
  return doc;
}

}  // namespace dvae::cli
