#include "dvae/cli/commands.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <mutex>
#include <numeric>
#include <random>
#include <thread>

#include <CLI11.hpp>

#include "dvae/data/dataset.hpp"
#include "dvae/data/synthetic.hpp"
#include "dvae/lda/lda.hpp"
#include "dvae/metrics/eer.hpp"

namespace dvae::cli {

namespace fs = std::filesystem;
using nlohmann::json;

vae::TrainResult train_model(const data::Dataset& dataset, const TrainOptions& options) {
  options.validate();
  const auto model_config = options.model_config(static_cast<std::size_t>(dataset.observations.cols()));
  auto init = vae::VaeModel::make(model_config, derive_seed(options.seed, 1));
  return vae::train(dataset, std::move(init), options.train_config(), options.weights());
}

Evaluation evaluate(const vae::VaeModel* model, const data::Dataset& ds, const EvalOptions& o) {
  o.validate();
  Evaluation ev;
  auto& report = ev.report;
  const Matrix& x = ds.observations;
  const auto n = static_cast<std::size_t>(x.rows());

  Matrix latents;
  if (model) {
    if (model->observation_dim() != static_cast<std::size_t>(x.cols())) {
      throw InvalidArgument("model expects " + std::to_string(model->observation_dim()) +
                            "-dimensional observations but the dataset has " + std::to_string(x.cols()));
    }
    latents = vae::encode(*model, x).mu();
  } else {
    latents = x;
  }

  if (ds.has_labels()) {
    ev.trials = o.trials.empty() ? metrics::build_trial_list(*ds.labels, o.trials_per_class, derive_seed(o.seed, 10))
                                 : metrics::read_trial_list(o.trials, ds);
    if (model) {
      report.eer = metrics::eer_on_reconstructions(*model, ds, *ev.trials);
    } else {
      const auto scores = metrics::score_trials(x, *ev.trials);
      report.eer = metrics::compute_eer(scores.target, scores.nontarget);
    }
  } else {
    report.notices.push_back("EER skipped: dataset has no class labels");
  }

  if (model) {
    if (model->latent_dim() >= 2) {
      std::vector<std::size_t> order(n);
      std::iota(order.begin(), order.end(), 0);
      std::mt19937_64 rng(derive_seed(o.seed, 11));
      std::shuffle(order.begin(), order.end(), rng);
      order.resize(std::min(n, o.mi_rows));
      Matrix sample(static_cast<Eigen::Index>(order.size()), x.cols());
      for (std::size_t i = 0; i < order.size(); ++i) {
        sample.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(order[i]));
      }
      report.wsepin = metrics::wsepin(*model, sample, o.mc_samples, derive_seed(o.seed, 12));
      if (report.wsepin->flagged) {
        report.notices.push_back("WSEPIN flagged: entropy clamped or no informative dimension");
      }
    } else {
      report.notices.push_back("WSEPIN skipped: needs at least two latent dimensions");
    }
    report.kld = vae::kl_diagnostics(*model, x, std::min(o.kl_batch, n), derive_seed(o.seed, 13),
                                     vae::marginal_estimator_from_string(o.estimator));
  } else {
    report.notices.push_back("WSEPIN and KLD skipped: bypass mode has no posterior");
  }

  if (!ds.has_factors()) {
    report.notices.push_back("DCI skipped: dataset has no factor columns");
  } else if (n < 100) {
    report.notices.push_back("DCI skipped: needs at least 100 rows, dataset has " + std::to_string(n));
  } else {
    const auto fit = metrics::fit_importance(latents, *ds.factors, ds.factor_names, derive_seed(o.seed, 14),
                                             o.importance_config());
    report.dci = metrics::dci_scores(fit.importance, fit.explicitness);
    for (auto k : report.dci->flagged_factors) {
      report.notices.push_back("DCI: factor '" + ds.factor_names[k] + "' has zero total importance");
    }
    ev.importance = fit.importance;
  }
  return ev;
}

namespace {

void require_file(const std::string& path, const std::string& flag) {
  if (path.empty()) throw InvalidArgument(flag + " is required");
  if (!fs::is_regular_file(path)) throw InvalidArgument(flag + ": no such file '" + path + "'");
}

fs::path prepare_dir(const std::string& out) {
  if (out.empty()) throw InvalidArgument("--out is required");
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec || !fs::is_directory(out)) throw InvalidArgument("--out: cannot create directory '" + out + "'");
  return fs::path(out);
}

std::string cell_value(const json& v) {
  if (v.is_null()) return "";
  if (v.is_boolean()) return v.get<bool>() ? "1" : "0";
  return format_double(v.get<double>());
}

// Report sections that carry measurements (everything but the config echo).
json metrics_only(const json& report) {
  json out = report;
  out.erase("config");
  return out;
}

// ---- synth ----

int cmd_synth(SynthOptions& o, const std::string& out, std::ostream& os) {
  o.validate();
  if (out.empty()) throw InvalidArgument("--out is required");
  const data::Dataset ds = data::generate_synthetic(o.to_synthetic());
  const fs::path path(out);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  data::save_dataset(path, ds);
  os << "wrote " << ds.size() << " rows (" << ds.class_names.size() << " speakers, " << ds.factor_names.size()
     << " factors, " << ds.observations.cols() << " dims) to " << path.string() << '\n';
  return kExitOk;
}

// ---- train ----

int cmd_train(TrainOptions& o, const std::string& out, std::ostream& os) {
  o.validate();
  require_file(o.data, "--data");
  const fs::path dir = prepare_dir(out);
  const data::Dataset ds = data::load_dataset(o.data);
  const auto result = train_model(ds, o);
  vae::save_model(dir / "model.bin", result.model);
  result.log.write_csv(dir / "train_log.csv");
  const auto& last = result.log.records.back().loss;
  json doc = {{"version", kToolkitVersion},
              {"final",
               {{"iteration", result.log.records.back().iteration},
                {"rec", last.rec},
                {"mi_hat", last.mi_hat},
                {"tc_hat", last.tc_hat},
                {"dkl_hat", last.dkl_hat},
                {"kl_analytic", last.kl_analytic},
                {"total", last.total}}},
              {"config", to_json(o)}};
  metrics::write_json(dir / "train.json", doc);
  os << "trained " << o.iterations << " iterations: rec " << format_double(last.rec) << ", kl "
     << format_double(last.kl_analytic) << ", total " << format_double(last.total) << '\n';
  return kExitOk;
}

// ---- eval ----

void write_evaluation(const Evaluation& ev, const data::Dataset& ds, const fs::path& dir) {
  ev.report.write(dir / "report.json");
  if (ev.importance) ev.importance->write_csv(dir / "importance.csv");
  if (ev.trials) metrics::write_trial_list(dir / "trials.txt", *ev.trials, ds);
}

int cmd_eval(EvalOptions& o, const std::string& out, std::ostream& os) {
  o.validate();
  require_file(o.data, "--data");
  if (!o.bypass) require_file(o.model, "--model");
  if (!o.trials.empty()) require_file(o.trials, "--trials");
  const fs::path dir = prepare_dir(out);
  const data::Dataset ds = data::load_dataset(o.data);
  std::optional<vae::VaeModel> model;
  if (!o.bypass) model = vae::load_model(o.model);
  Evaluation ev = evaluate(model ? &*model : nullptr, ds, o);
  ev.report.config = to_json(o);
  write_evaluation(ev, ds, dir);
  const auto& r = ev.report;
  if (r.eer) os << "eer " << format_double(*r.eer) << '\n';
  if (r.wsepin) os << "wsepin " << format_double(r.wsepin->value) << (r.wsepin->flagged ? " (flagged)" : "") << '\n';
  if (r.kld) os << "kld " << format_double(r.kld->kl_analytic) << '\n';
  if (r.dci) {
    os << "compactness " << format_double(r.dci->compactness) << ", modularity " << format_double(r.dci->modularity)
       << ", explicitness " << format_double(r.dci->explicitness) << '\n';
  }
  for (const auto& notice : r.notices) os << "note: " << notice << '\n';
  return kExitOk;
}

// ---- sweep ----

struct Cell {
  TrainOptions train;
  EvalOptions eval;
  std::string status;
  std::string error;
  json report;
};

std::vector<Cell> expand_grid(const SweepOptions& o) {
  std::vector<Cell> cells;
  EvalOptions eval = o.eval;
  eval.data = o.train.data;
  eval.model.clear();
  eval.bypass = false;
  if (!o.beta_s.empty()) {
    for (double b : o.beta_s) {
      Cell c{o.train, eval, {}, {}, {}};
      c.train.objective = to_string(vae::Objective::beta_vae);
      c.train.beta_s = b;
      cells.push_back(std::move(c));
    }
  } else {
    for (double a : o.alpha) {
      for (double b : o.beta) {
        for (double g : o.gamma) {
          Cell c{o.train, eval, {}, {}, {}};
          c.train.objective = to_string(vae::Objective::tcvae);
          c.train.alpha = a;
          c.train.beta = b;
          c.train.gamma = g;
          cells.push_back(std::move(c));
        }
      }
    }
  }
  return cells;
}

std::string cell_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "cell_%03zu", i);
  return buf;
}

void run_cell(Cell& cell, const data::Dataset& ds, const fs::path& dir) {
  const json config = {{"train", to_json(cell.train)}, {"eval", to_json(cell.eval)}};
  const fs::path done = dir / "done";
  if (fs::exists(done) && fs::exists(dir / "config.json") && fs::exists(dir / "report.json") &&
      metrics::read_json(dir / "config.json") == config) {
    cell.report = metrics::read_json(dir / "report.json");
    cell.status = "ok";
    return;
  }
  fs::create_directories(dir);
  fs::remove(done);
  metrics::write_json(dir / "config.json", config);
  const auto result = train_model(ds, cell.train);
  vae::save_model(dir / "model.bin", result.model);
  result.log.write_csv(dir / "train_log.csv");
  Evaluation ev = evaluate(&result.model, ds, cell.eval);
  ev.report.config = config;
  write_evaluation(ev, ds, dir);
  cell.report = ev.report.to_json();
  std::ofstream(done) << "ok\n";
  cell.status = "ok";
}

int cmd_sweep(SweepOptions& o, const std::string& out, std::size_t jobs, std::ostream& os, std::ostream& es) {
  o.eval.data = o.train.data;
  o.validate();
  require_file(o.train.data, "--data");
  if (!o.eval.trials.empty()) require_file(o.eval.trials, "--trials");
  const fs::path dir = prepare_dir(out);
  const data::Dataset ds = data::load_dataset(o.train.data);
  std::vector<Cell> cells = expand_grid(o);

  std::mutex log_mutex;
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      try {
        run_cell(cells[i], ds, dir / cell_name(i));
      } catch (const std::exception& e) {
        cells[i].status = "failed";
        cells[i].error = e.what();
      }
      std::lock_guard lock(log_mutex);
      es << cell_name(i) << ": " << cells[i].status << (cells[i].error.empty() ? "" : " (" + cells[i].error + ")")
         << '\n';
    }
  };
  const std::size_t workers = std::clamp<std::size_t>(jobs, 1, cells.size());
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  // Weights, EER on reconstructions, WSEPIN, KLD, DCI aggregates.
  std::ofstream table(dir / "table.csv");
  table << "cell,objective,alpha,beta,gamma,beta_s,eer,wsepin,wsepin_flagged,kld,compactness,modularity,"
           "explicitness,status\n";
  std::ofstream series(dir / "series.csv");
  series << "cell,alpha,beta,gamma,beta_s,metric,value\n";
  json summary = json::array();
  std::size_t failures = 0;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const Cell& c = cells[i];
    const json& r = c.report;
    const auto field = [&](const char* section, const char* key) -> json {
      if (!r.is_object() || !r.contains(section) || r[section].is_null()) return nullptr;
      return r[section][key];
    };
    const auto aggregate = [&](const char* key) -> json {
      const json dci = r.is_object() && r.contains("dci") ? r["dci"] : json(nullptr);
      return dci.is_null() ? json(nullptr) : dci["aggregates"][key];
    };
    const json eer = r.is_object() && r.contains("eer") ? r["eer"] : json(nullptr);
    const std::vector<std::pair<std::string, json>> values = {
        {"eer", eer},
        {"wsepin", field("wsepin", "value")},
        {"kld", field("kld", "kl_analytic")},
        {"compactness", aggregate("compactness")},
        {"modularity", aggregate("modularity")},
        {"explicitness", aggregate("explicitness")}};
    const std::string weights = format_double(c.train.alpha) + ',' + format_double(c.train.beta) + ',' +
                                format_double(c.train.gamma) + ',' + format_double(c.train.beta_s);
    table << cell_name(i) << ',' << c.train.objective << ',' << weights << ',' << cell_value(values[0].second)
          << ',' << cell_value(values[1].second) << ',' << cell_value(field("wsepin", "flagged")) << ','
          << cell_value(values[2].second) << ',' << cell_value(values[3].second) << ','
          << cell_value(values[4].second) << ',' << cell_value(values[5].second) << ',' << c.status << '\n';
    for (const auto& [metric, value] : values) {
      if (!value.is_null()) series << cell_name(i) << ',' << weights << ',' << metric << ',' << cell_value(value) << '\n';
    }
    json entry = {{"cell", cell_name(i)},
                  {"objective", c.train.objective},
                  {"alpha", c.train.alpha},
                  {"beta", c.train.beta},
                  {"gamma", c.train.gamma},
                  {"beta_s", c.train.beta_s},
                  {"status", c.status}};
    if (c.status == "ok") {
      entry["metrics"] = metrics_only(r);
    } else {
      entry["error"] = c.error;
      ++failures;
    }
    summary.push_back(std::move(entry));
  }
  metrics::write_json(dir / "sweep.json",
                      {{"version", kToolkitVersion}, {"cells", summary}, {"config", to_json(o)}});
  os << "sweep: " << cells.size() - failures << " of " << cells.size() << " cells completed, table at "
     << (dir / "table.csv").string() << '\n';
  return failures == 0 ? kExitOk : kExitRuntime;
}

// ---- rank ----

int cmd_rank(RankOptions& o, const std::string& out, std::ostream& os) {
  o.validate();
  require_file(o.table, "--table");
  const fs::path dir = prepare_dir(out);
  const auto table = lda::read_functional_table(o.table);
  auto [train_raw, test_raw] = lda::split(table, o.train_fraction, derive_seed(o.seed, 0));
  const auto [train, stats] = lda::standardize(train_raw);
  const auto test = stats.apply(test_raw);
  const auto result = lda::fit_lda(train, o.ridge);
  const std::size_t k = std::min(o.top_k, table.features());
  if (k < o.top_k) os << "note: table has only " << k << " functionals; ranking all of them\n";
  const auto ranking = lda::rank_features(result, k);
  const double accuracy = lda::evaluate_accuracy(result, test);
  lda::write_ranking(dir / "ranking.csv", ranking);
  json ranked = json::array();
  for (const auto& r : ranking) ranked.push_back({{"name", r.name}, {"score", r.score}});
  std::vector<double> projection(result.projection.data(), result.projection.data() + result.projection.size());
  metrics::write_json(dir / "rank.json", {{"version", kToolkitVersion},
                                          {"accuracy", accuracy},
                                          {"ranking", ranked},
                                          {"projection", projection},
                                          {"config", to_json(o)}});
  for (std::size_t i = 0; i < ranking.size(); ++i) {
    os << (i + 1) << ' ' << ranking[i].name << ' ' << format_double(ranking[i].score) << '\n';
  }
  os << "accuracy: " << format_double(accuracy) << '\n';
  return kExitOk;
}

// ---- flag wiring ----

void add_train_flags(CLI::App* app, TrainOptions& o) {
  app->add_option("--data", o.data, "Dataset CSV");
  app->add_option("--latent-dim", o.latent_dim, "Latent dimension D");
  app->add_option("--hidden", o.hidden, "Hidden layer widths, comma separated")->delimiter(',');
  app->add_option("--activation", o.activation, "Hidden activation (tanh, relu, identity)");
  app->add_option("--objective", o.objective, "beta_vae or tcvae");
  app->add_option("--alpha", o.alpha, "Weight of the index-code MI term");
  app->add_option("--beta", o.beta, "Weight of the total-correlation term");
  app->add_option("--gamma", o.gamma, "Weight of the dimension-wise KL term");
  app->add_option("--beta-s", o.beta_s, "Weight of the analytic KL (beta_vae)");
  app->add_option("--iterations", o.iterations, "Training iterations");
  app->add_option("--batch-size", o.batch_size, "Minibatch size");
  app->add_option("--lr", o.learning_rate, "Adam learning rate");
  app->add_option("--eval-every", o.eval_every, "Log interval in iterations");
  app->add_option("--estimator", o.estimator, "Aggregate posterior estimator (weighted, stratified)");
}

void add_eval_flags(CLI::App* app, EvalOptions& o, bool standalone) {
  if (standalone) {
    app->add_option("--data", o.data, "Dataset CSV");
    app->add_option("--model", o.model, "Model checkpoint");
    app->add_flag("--bypass", o.bypass, "Evaluate raw observations instead of a model");
    app->add_option("--estimator", o.estimator, "Estimator for the KL diagnostics");
  }
  app->add_option("--trials", o.trials, "Trial list file (default: built from labels)");
  app->add_option("--trials-per-class", o.trials_per_class, "Target trials per class");
  app->add_option("--mi-rows", o.mi_rows, "Observations used for WSEPIN");
  app->add_option("--mc-samples", o.mc_samples, "Latent draws per observation for WSEPIN");
  app->add_option("--kl-batch", o.kl_batch, "Batch size for the KL decomposition diagnostics");
  app->add_option("--importance", o.importance, "DCI regressor (forest, lasso)");
  app->add_option("--forest-trees", o.forest_trees, "Trees per forest");
  app->add_option("--forest-depth", o.forest_depth, "Maximum tree depth");
  app->add_option("--lasso-lambda", o.lasso_lambda, "Lasso penalty");
  app->add_option("--train-fraction", o.train_fraction, "Regressor training share");
}

template <typename Options>
void apply_config_file(Options& options, const std::string& path) {
  if (path.empty()) return;
  require_file(path, "--config");
  apply_config(options, load_config_document(path));
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Disentanglement evaluation toolkit for variational autoencoders", "dvae"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolkitVersion);

  std::string config, out_path;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
  const auto common = [&](CLI::App* sub) {
    sub->add_option("--seed", seed, "Random seed");
    sub->add_option("--out", out_path, "Output location");
    sub->add_option("--config", config, "JSON config (or report) overriding the flags");
  };

  SynthOptions synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic dataset with planted factors");
  common(synth_cmd);
  synth_cmd->add_option("--speakers", synth.speakers, "Number of speakers");
  synth_cmd->add_option("--utterances", synth.utterances, "Utterances per speaker");
  synth_cmd->add_option("--factors", synth.factors, "Number of factors K");
  synth_cmd->add_option("--dim", synth.observation_dim, "Observation dimension");
  synth_cmd->add_option("--correlation", synth.correlation, "K x K factor correlation CSV");
  synth_cmd->add_option("--mixing", synth.mixing, "linear or tanh");
  synth_cmd->add_option("--noise", synth.session_noise, "Session noise standard deviation");

  TrainOptions train;
  auto* train_cmd = app.add_subcommand("train", "Train a beta-VAE or TC-VAE");
  common(train_cmd);
  add_train_flags(train_cmd, train);

  EvalOptions eval;
  auto* eval_cmd = app.add_subcommand("eval", "Compute EER, WSEPIN, KLD and DCI");
  common(eval_cmd);
  add_eval_flags(eval_cmd, eval, true);

  SweepOptions sweep;
  auto* sweep_cmd = app.add_subcommand("sweep", "Train and evaluate over a weight grid");
  common(sweep_cmd);
  add_train_flags(sweep_cmd, sweep.train);
  add_eval_flags(sweep_cmd, sweep.eval, false);
  sweep_cmd->add_option("--beta-s-grid", sweep.beta_s, "beta_s values (beta_vae cells)")->delimiter(',');
  sweep_cmd->add_option("--alpha-grid", sweep.alpha, "alpha values (tcvae cells)")->delimiter(',');
  sweep_cmd->add_option("--beta-grid", sweep.beta, "beta values (tcvae cells)")->delimiter(',');
  sweep_cmd->add_option("--gamma-grid", sweep.gamma, "gamma values (tcvae cells)")->delimiter(',');
  sweep_cmd->add_option("--jobs", jobs, "Cells trained in parallel");

  RankOptions rank;
  auto* rank_cmd = app.add_subcommand("rank", "Rank functionals by LDA importance");
  common(rank_cmd);
  rank_cmd->add_option("--table", rank.table, "Functional table CSV");
  rank_cmd->add_option("--top-k", rank.top_k, "Number of ranked functionals to report");
  rank_cmd->add_option("--ridge", rank.ridge, "Ridge added to the within-class scatter");
  rank_cmd->add_option("--train-fraction", rank.train_fraction, "Share of utterances used to fit");

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (synth_cmd->parsed()) {
      synth.seed = seed;
      apply_config_file(synth, config);
      return cmd_synth(synth, out_path, out);
    }
    if (train_cmd->parsed()) {
      train.seed = seed;
      apply_config_file(train, config);
      return cmd_train(train, out_path, out);
    }
    if (eval_cmd->parsed()) {
      eval.seed = seed;
      apply_config_file(eval, config);
      return cmd_eval(eval, out_path, out);
    }
    if (sweep_cmd->parsed()) {
      sweep.train.seed = seed;
      sweep.eval.seed = seed;
      sweep.eval.estimator = sweep.train.estimator;
      apply_config_file(sweep, config);
      return cmd_sweep(sweep, out_path, jobs, out, err);
    }
    rank.seed = seed;
    apply_config_file(rank, config);
    return cmd_rank(rank, out_path, out);
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const vae::TrainingError& e) {
    const auto& b = e.breakdown();
    err << "error: training diverged at iteration " << e.iteration() << " (rec " << b.rec << ", mi " << b.mi_hat
        << ", tc " << b.tc_hat << ", dkl " << b.dkl_hat << ", kl " << b.kl_analytic << ")\n";
    return kExitRuntime;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

int run(int argc, char** argv) {
  return run(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}

}  // namespace dvae::cli
