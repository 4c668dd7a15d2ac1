// Acceptance checks. One PASS/FAIL line per criterion; exit status is
// nonzero if any criterion fails that is not listed in --known-failures.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "dvae/cli/commands.hpp"
#include "dvae/data/synthetic.hpp"
#include "dvae/lda/lda.hpp"
#include "dvae/metrics/dci.hpp"
#include "dvae/metrics/eer.hpp"
#include "dvae/metrics/information.hpp"
#include "dvae/metrics/report.hpp"
#include "dvae/nn/gradient_check.hpp"
#include "dvae/vae/decomposition.hpp"
#include "dvae/vae/objective.hpp"

using namespace dvae;
namespace fs = std::filesystem;

namespace {

// Tolerances and budgets.
constexpr double kGradTolerance = 1e-4;
constexpr double kGradBudget = 10.0;
constexpr double kDecompSigmas = 3.0;
constexpr double kDecompBudget = 60.0;
constexpr double kCollapseKld = 0.1;
constexpr double kSweepBudget = 600.0;
constexpr double kDciAggregate = 0.9;
constexpr double kDciExplicitness = 0.05;
constexpr double kTwoClusterTolerance = 0.05;
constexpr double kEntropyTolerance = 0.02;
constexpr double kChanceSigmas = 3.0;
constexpr double kOracleAngle = 1e-6;

struct Outcome {
  bool pass;
  std::string detail;
};

Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, scale);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
  return m;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("dvae_acceptance_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int dvae_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "dvae");
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  if (code != 0) std::fprintf(stderr, "%s", err.str().c_str());
  return code;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::map<std::string, std::string> tree(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) files[fs::relative(e.path(), dir).string()] = slurp(e.path());
  }
  return files;
}

Outcome gradient_check() {
  vae::ModelConfig config;
  config.observation_dim = 3;
  config.latent_dim = 2;
  config.hidden = {16, 16};
  const auto model = vae::VaeModel::make(config, 17);
  const Matrix x = random_matrix(4, 3, 18);
  const Matrix noise = random_matrix(4, 2, 19);
  vae::LossOptions opt;
  opt.objective = vae::Objective::tcvae;
  opt.weights = {0.4, 1.3, 0.7, 1.0};
  opt.dataset_size = 16;
  const auto eval = vae::evaluate_loss(model, x, noise, opt, true);
  auto params = nn::flatten_parameters(model.encoder);
  const auto dec = nn::flatten_parameters(model.decoder);
  params.insert(params.end(), dec.begin(), dec.end());
  auto analytic = nn::flatten_gradients(eval.encoder);
  const auto dg = nn::flatten_gradients(eval.decoder);
  analytic.insert(analytic.end(), dg.begin(), dg.end());
  const std::size_t split = model.encoder.parameter_count();
  const auto loss = [&](std::span<const double> p) {
    vae::VaeModel probe = model;
    nn::assign_parameters(probe.encoder, p.first(split));
    nn::assign_parameters(probe.decoder, p.subspan(split));
    return vae::evaluate_loss(probe, x, noise, opt, false).breakdown.total;
  };
  const double err = nn::max_relative_error(params, analytic, loss, 1e-5);
  return {err < kGradTolerance, "max relative error " + fmt(err) + " over " + std::to_string(params.size()) + " parameters"};
}

Outcome decomposition_identity() {
  std::vector<double> diff;
  for (std::uint64_t r = 0; r < 30; ++r) {
    const vae::GaussianPosterior post(random_matrix(64, 8, 100 + r), random_matrix(64, 8, 200 + r, 0.5));
    const Matrix s = vae::reparameterize(post, random_matrix(64, 8, 300 + r));
    diff.push_back(vae::estimate_decomposition(post, s, 1024).sum() - vae::analytic_kl(post));
  }
  const double n = static_cast<double>(diff.size());
  const double mean = std::accumulate(diff.begin(), diff.end(), 0.0) / n;
  double ss = 0.0;
  for (double d : diff) ss += (d - mean) * (d - mean);
  const double se = std::sqrt(ss / (n - 1.0) / n);
  return {std::abs(mean) < kDecompSigmas * se, "mean difference " + fmt(mean) + ", standard error " + fmt(se)};
}

// The beta_s sweep shared by the collapse trend and the determinism check.
const fs::path& sweep_dir() {
  static const fs::path dir = [] {
    const auto d = scratch("sweep");
    const auto data = (d / "data.csv").string();
    if (dvae_cli({"synth", "--speakers", "64", "--utterances", "16", "--factors", "4", "--dim", "16", "--seed", "11",
                  "--out", data}) != 0) {
      throw std::runtime_error("synth failed");
    }
    // The run may fail by criterion without failing to produce output.
    dvae_cli({"sweep", "--data", data, "--out", (d / "s").string(), "--latent-dim", "8", "--hidden", "64,64",
              "--iterations", "3000", "--lr", "1e-3", "--eval-every", "500", "--beta-s-grid",
              "0,0.001,0.01,0.1,1,10", "--trials-per-class", "120", "--seed", "1", "--forest-trees", "20",
              "--mi-rows", "512", "--jobs", "6"});
    return d;
  }();
  return dir;
}

Outcome collapse_trend() {
  const auto dir = sweep_dir() / "s";
  std::vector<double> kld, eer;
  for (std::size_t c = 0; c < 6; ++c) {
    char name[16];
    std::snprintf(name, sizeof name, "cell_%03zu", c);
    const auto report = metrics::read_json(dir / name / "report.json");
    kld.push_back(report.at("kld").at("kl_analytic").get<double>());
    eer.push_back(report.at("eer").get<double>());
  }
  bool kld_ok = kld.back() < kCollapseKld, eer_ok = true;
  for (std::size_t i = 1; i < kld.size(); ++i) {
    kld_ok = kld_ok && kld[i] <= kld[i - 1];
    eer_ok = eer_ok && eer[i] >= eer[i - 1];
  }
  std::string detail = "kld";
  for (double v : kld) detail += " " + fmt(v);
  detail += "; eer";
  for (double v : eer) detail += " " + fmt(v);
  if (!kld_ok) detail += "; kld not non-increasing to < " + fmt(kCollapseKld);
  if (!eer_ok) detail += "; eer not non-decreasing";
  return {kld_ok && eer_ok, detail};
}

double brute_force_eer(const std::vector<double>& tgt, const std::vector<double>& non) {
  std::vector<double> thresholds(tgt);
  thresholds.insert(thresholds.end(), non.begin(), non.end());
  std::sort(thresholds.begin(), thresholds.end());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
  thresholds.push_back(std::numeric_limits<double>::infinity());
  double prev_frr = 0.0, prev_diff = 0.0;
  for (std::size_t k = 0; k < thresholds.size(); ++k) {
    const double t = thresholds[k];
    const auto below = [t](double s) { return s < t; };
    const double frr = static_cast<double>(std::count_if(tgt.begin(), tgt.end(), below)) / static_cast<double>(tgt.size());
    const auto at_or_above = [t](double s) { return s >= t; };
    const double far =
        static_cast<double>(std::count_if(non.begin(), non.end(), at_or_above)) / static_cast<double>(non.size());
    const double diff = far - frr;
    if (diff <= 0.0) {
      if (diff == 0.0 || k == 0) return frr;
      return prev_frr + prev_diff / (prev_diff - diff) * (frr - prev_frr);
    }
    prev_frr = frr;
    prev_diff = diff;
  }
  return 1.0;
}

Outcome eer_oracle() {
  using metrics::compute_eer;
  std::mt19937_64 rng(2024);
  std::size_t mismatches = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::uniform_int_distribution<std::size_t> size(1, 500);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double shift = std::uniform_real_distribution<double>(-1.0, 3.0)(rng);
    const bool coarse = trial % 3 == 0;
    std::vector<double> tgt(size(rng)), non(size(rng));
    for (auto& s : tgt) s = coarse ? std::round(4.0 * (normal(rng) + shift)) / 4.0 : normal(rng) + shift;
    for (auto& s : non) s = coarse ? std::round(4.0 * normal(rng)) / 4.0 : normal(rng);
    if (compute_eer(tgt, non) != brute_force_eer(tgt, non)) ++mismatches;
  }
  const bool fixed = compute_eer(std::vector{0.9, 0.8}, std::vector{0.1, 0.2}) == 0.0 &&
                     compute_eer(std::vector{0.1, 0.9}, std::vector{0.1, 0.9}) == 0.5 &&
                     std::abs(compute_eer(std::vector{0.9, 0.7, 0.6}, std::vector{0.8, 0.3, 0.2}) - 1.0 / 3.0) < 1e-15;
  return {mismatches == 0 && fixed,
          std::to_string(mismatches) + "/1000 mismatches; fixed cases " + (fixed ? "exact" : "wrong")};
}

metrics::ImportanceMatrix importance(const Matrix& r) {
  metrics::ImportanceMatrix m;
  m.values = r;
  for (Eigen::Index k = 0; k < r.rows(); ++k) m.factor_names.push_back("f" + std::to_string(k));
  return m;
}

Outcome dci_fixed_points() {
  const std::vector<double> zero(10, 0.0);
  std::vector<int> p(10);
  std::iota(p.begin(), p.end(), 0);
  std::mt19937_64 rng(7);
  std::shuffle(p.begin(), p.end(), rng);
  Matrix perm = Matrix::Zero(10, 10);
  for (int i = 0; i < 10; ++i) perm(i, p[static_cast<std::size_t>(i)]) = 1.0;
  const auto ps = metrics::dci_scores(importance(perm), zero);
  const auto us = metrics::dci_scores(importance(Matrix::Constant(10, 10, 0.37)), zero);
  const bool exact = ps.mean_compactness == 1.0 && ps.mean_modularity == 1.0 && us.mean_compactness == 0.0 &&
                     us.mean_modularity == 0.0;

  data::SyntheticConfig c;
  c.n_speakers = 500;
  c.utterances_per_speaker = 2;
  c.factors = 4;
  c.observation_dim = 4;
  c.session_noise_std = 0.0;
  c.mixing_matrix = Matrix::Identity(4, 4);
  c.seed = 3;
  const auto ds = data::generate_synthetic(c);
  const auto fit = metrics::fit_importance(ds.observations, *ds.factors, ds.factor_names, 1);
  const auto s = metrics::dci_scores(fit.importance, fit.explicitness);
  const double worst = *std::max_element(fit.explicitness.begin(), fit.explicitness.end());
  const bool planted = s.compactness > kDciAggregate && s.modularity > kDciAggregate && worst < kDciExplicitness;
  return {exact && planted, std::string("permutation/uniform ") + (exact ? "exact" : "inexact") + "; planted C " +
                                fmt(s.compactness) + " M " + fmt(s.modularity) + " max explicitness " + fmt(worst)};
}

Outcome wsepin_ordering() {
  const Eigen::Index m = 256, d = 4;
  const Matrix log_var = Matrix::Constant(m, d, std::log(0.1));
  std::size_t wins = 0;
  double min_gap = std::numeric_limits<double>::infinity();
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(seed);
    std::bernoulli_distribution coin(0.5);
    Matrix mu(m, d);
    for (Eigen::Index i = 0; i < mu.size(); ++i) mu.data()[i] = coin(rng) ? 1.0 : -1.0;
    const Eigen::HouseholderQR<Matrix> qr(random_matrix(d, d, 1000 + seed));
    const Matrix rotation = qr.householderQ();
    const double axis = metrics::wsepin(vae::GaussianPosterior(mu, log_var), 16, seed).value;
    const double rotated = metrics::wsepin(vae::GaussianPosterior(mu * rotation, log_var), 16, seed).value;
    if (axis > rotated) ++wins;
    min_gap = std::min(min_gap, axis - rotated);
  }

  vae::VaeModel collapsed;
  collapsed.encoder = nn::DenseNetwork({{Matrix::Zero(6, 6), Vector::Zero(6), nn::Activation::identity}});
  collapsed.decoder = nn::DenseNetwork({{Matrix::Zero(6, 3), Vector::Ones(6), nn::Activation::identity}});
  const auto w = metrics::wsepin(collapsed, random_matrix(64, 6, 1), 8, 2);
  const bool flagged = w.flagged && w.value == 0.0;
  return {wins == 10 && flagged, std::to_string(wins) + "/10 seeds ordered (min gap " + fmt(min_gap) +
                                     "); collapsed " + (flagged ? "flagged 0" : "not flagged 0")};
}

Outcome mi_calibration() {
  Matrix mu(2, 1);
  mu << -5, 5;
  const vae::GaussianPosterior clusters(mu, Matrix::Constant(2, 1, std::log(0.01)));
  const std::vector<std::size_t> dim0{0};
  const double mi = metrics::estimate_mi(clusters, dim0, 4000, 1).value;
  const double mi_err = std::abs(mi - std::numbers::ln2) / std::numbers::ln2;
  const vae::GaussianPosterior standard(Matrix::Zero(64, 1), Matrix::Zero(64, 1));
  const double h = metrics::estimate_entropy(standard, 0, 200, 1).value;
  const double gaussian = 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e);
  const double h_err = std::abs(h - gaussian) / gaussian;
  return {mi_err < kTwoClusterTolerance && h_err < kEntropyTolerance,
          "MI " + fmt(mi) + " (rel err " + fmt(mi_err) + "); entropy " + fmt(h) + " (rel err " + fmt(h_err) + ")"};
}

lda::FunctionalTable planted_table(std::size_t speakers, std::size_t utts, std::size_t features, std::size_t planted,
                                   std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  lda::FunctionalTable t;
  for (std::size_t f = 0; f < features; ++f) t.names.push_back("F" + std::to_string(f + 1));
  t.values.resize(static_cast<Eigen::Index>(speakers * utts), static_cast<Eigen::Index>(features));
  for (std::size_t s = 0; s < speakers; ++s) {
    t.class_names.push_back("spk" + std::to_string(s));
    const double offset = 3.0 * normal(rng);
    for (std::size_t u = 0; u < utts; ++u) {
      const auto r = static_cast<Eigen::Index>(s * utts + u);
      t.ids.push_back("s" + std::to_string(s) + "_u" + std::to_string(u));
      t.labels.push_back(s);
      for (std::size_t f = 0; f < features; ++f) {
        t.values(r, static_cast<Eigen::Index>(f)) = (f + 1.0) * normal(rng) + (f == planted ? offset : 0.0);
      }
    }
  }
  return t;
}

Outcome lda_recovery() {
  std::size_t recovered = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto [z, stats] = lda::standardize(planted_table(50, 10, 8, 3, seed));
    if (lda::rank_features(lda::fit_lda(z), 1)[0].name == "F4") ++recovered;
  }

  auto shuffled = planted_table(50, 20, 8, 3, 99);
  std::mt19937_64 rng(100);
  std::shuffle(shuffled.labels.begin(), shuffled.labels.end(), rng);
  const auto [train, test] = lda::split(shuffled, 0.8, 101);
  const auto [zt, st] = lda::standardize(train);
  const double acc = lda::evaluate_accuracy(lda::fit_lda(zt), st.apply(test));
  const double chance = 1.0 / 50.0;
  const double sigma = std::sqrt(chance * (1.0 - chance) / static_cast<double>(test.size()));
  const bool at_chance = std::abs(acc - chance) < kChanceSigmas * sigma;

  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto [z, stats] = lda::standardize(planted_table(12, 15, 10, seed % 10, 500 + seed));
    const Vector w = lda::fit_lda(z).projection;
    const Vector ref = lda::reference_direction(z);
    worst = std::max(worst, std::acos(std::min(1.0, std::abs(w.dot(ref)) / (w.norm() * ref.norm()))));
  }
  return {recovered == 20 && at_chance && worst < kOracleAngle,
          std::to_string(recovered) + "/20 rank-1; shuffled accuracy " + fmt(acc) + " vs chance " + fmt(chance) +
              " (3 sigma " + fmt(kChanceSigmas * sigma) + "); max oracle angle " + fmt(worst)};
}

Outcome sweep_determinism() {
  const auto dir = sweep_dir();
  const auto rerun = dir / "rerun";
  const int code = dvae_cli({"sweep", "--config", (dir / "s" / "sweep.json").string(), "--out", rerun.string()});
  const auto a = tree(dir / "s"), b = tree(rerun);
  std::size_t differing = 0;
  for (const auto& [name, bytes] : a) {
    const auto it = b.find(name);
    if (it == b.end() || it->second != bytes) ++differing;
  }
  const bool same = a.size() == b.size() && differing == 0;
  return {same, std::to_string(a.size()) + " files, " + std::to_string(differing) + " differ, exit " +
                    std::to_string(code)};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> known;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    const std::string flag = "--known-failures=";
    if (arg.rfind(flag, 0) != 0) {
      std::fprintf(stderr, "usage: acceptance [--known-failures=N,M,...]\n");
      return 2;
    }
    std::stringstream list(arg.substr(flag.size()));
    for (std::string item; std::getline(list, item, ',');) known.insert(std::stoi(item));
  }

  struct Criterion {
    int id;
    const char* name;
    double budget;  // seconds; 0 means unbudgeted
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "gradient correctness", kGradBudget, gradient_check},
      {2, "decomposition identity", kDecompBudget, decomposition_identity},
      {3, "posterior-collapse trend", kSweepBudget, collapse_trend},
      {4, "EER oracle equivalence", 0.0, eer_oracle},
      {5, "DCI fixed points", 0.0, dci_fixed_points},
      {6, "WSEPIN ordering", 0.0, wsepin_ordering},
      {7, "MI estimator calibration", 0.0, mi_calibration},
      {8, "LDA recovery", 0.0, lda_recovery},
      {9, "end-to-end determinism", 0.0, sweep_determinism},
  };

  int unexpected = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.budget > 0.0 && seconds >= c.budget) {
      o.pass = false;
      o.detail += "; over the " + fmt(c.budget) + " s budget";
    }
    const bool expected = !o.pass && known.contains(c.id);
    if (!o.pass && !expected) ++unexpected;
    std::printf("[%s] %d %s: %s (%.1f s)%s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), seconds,
                expected ? " [known failure]" : "");
    std::fflush(stdout);
  }
  for (int id : known) {
    if (id < 1 || id > static_cast<int>(criteria.size())) {
      std::fprintf(stderr, "unknown criterion %d in --known-failures\n", id);
      return 2;
    }
  }
  return unexpected == 0 ? 0 : 1;
}
