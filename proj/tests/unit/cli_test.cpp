#include <doctest.h>

#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "dvae/cli/commands.hpp"
#include "dvae/data/synthetic.hpp"
#include "dvae/lda/functional_table.hpp"
#include "support.hpp"

using namespace dvae;
namespace fs = std::filesystem;

namespace {

struct CliResult {
  int code;
  std::string out, err;
};

CliResult dvae_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "dvae");
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

// Relative path -> bytes, for every file under `dir`.
std::map<std::string, std::string> tree(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) files[fs::relative(e.path(), dir).string()] = slurp(e.path());
  }
  return files;
}

std::vector<std::string> small_model_flags() {
  return {"--latent-dim", "4", "--hidden", "24,24", "--iterations", "200", "--lr", "1e-3", "--eval-every", "50",
          "--seed", "5"};
}

std::vector<std::string> quick_eval_flags() {
  return {"--forest-trees", "10", "--mi-rows", "128", "--mc-samples", "4"};
}

std::vector<std::string> concat(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

fs::path small_dataset(const fs::path& dir) {
  const auto path = dir / "data.csv";
  const auto r = dvae_cli({"synth", "--speakers", "20", "--utterances", "6", "--factors", "3", "--dim", "8",
                           "--seed", "2", "--out", path.string()});
  REQUIRE(r.code == 0);
  return path;
}

std::string table_with(std::uint64_t seed, bool shuffle_labels, const fs::path& path) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  lda::FunctionalTable t;
  t.names = {"F0", "HNR", "F3", "F1bw", "F1", "Hi", "H1-A3", "F2", "alpha", "F1std", "jitter", "shimmer"};
  const std::size_t speakers = 10, utts = 20;
  t.values.resize(speakers * utts, static_cast<Eigen::Index>(t.names.size()));
  for (std::size_t s = 0; s < speakers; ++s) {
    t.class_names.push_back("spk" + std::to_string(s));
    const double offset = 3.0 * normal(rng);
    for (std::size_t u = 0; u < utts; ++u) {
      const auto r = static_cast<Eigen::Index>(s * utts + u);
      t.ids.push_back(std::to_string(r));
      t.labels.push_back(s);
      for (Eigen::Index f = 0; f < t.values.cols(); ++f) t.values(r, f) = normal(rng) + (f == 0 ? offset : 0.0);
    }
  }
  if (shuffle_labels) std::shuffle(t.labels.begin(), t.labels.end(), rng);
  lda::write_functional_table(path, t);
  return path.string();
}

}  // namespace

TEST_CASE("synth") {
  const auto dir = testing::scratch_dir("cli_synth");
  const auto a = dvae_cli({"synth", "--seed", "7", "--out", (dir / "a.csv").string()});
  REQUIRE(a.code == 0);
  std::ifstream in(dir / "a.csv");
  std::string header;
  std::getline(in, header);
  CHECK(std::count(header.begin(), header.end(), ',') + 1 == 1 + 1 + 8 + 64);
  REQUIRE(dvae_cli({"synth", "--seed", "7", "--out", (dir / "b.csv").string()}).code == 0);
  CHECK(slurp(dir / "a.csv") == slurp(dir / "b.csv"));

  std::ofstream(dir / "corr.csv") << "1,0.5\n0.2,1\n";
  const auto bad = dvae_cli({"synth", "--factors", "2", "--dim", "4", "--correlation", (dir / "corr.csv").string(),
                             "--out", (dir / "c.csv").string()});
  CHECK(bad.code == cli::kExitUsage);
  CHECK(bad.err.find("not symmetric") != std::string::npos);
}

TEST_CASE("usage errors and runtime failures have distinct exit codes") {
  const auto dir = testing::scratch_dir("cli_codes");
  CHECK(dvae_cli({"train", "--out", (dir / "t").string()}).code == cli::kExitUsage);
  CHECK(dvae_cli({"train", "--data", (dir / "nope.csv").string(), "--out", (dir / "t").string()}).code ==
        cli::kExitUsage);
  CHECK(dvae_cli({}).code == cli::kExitUsage);
  CHECK(dvae_cli({"train", "--no-such-flag"}).code == cli::kExitUsage);
  CHECK(dvae_cli({"--help"}).code == cli::kExitOk);

  std::ofstream(dir / "huge.csv") << "id,x_1,x_2\na,1e200,2e200\nb,-1e200,3e200\nc,4e200,1e200\n";
  const auto r = dvae_cli({"train", "--data", (dir / "huge.csv").string(), "--out", (dir / "t").string(),
                           "--batch-size", "2", "--latent-dim", "2", "--hidden", "4"});
  CHECK(r.code == cli::kExitRuntime);
  CHECK(r.err.find("iteration 1") != std::string::npos);

  std::ofstream(dir / "cfg.json") << R"({"iterations": 10, "typo_field": 1})";
  CHECK(dvae_cli({"train", "--config", (dir / "cfg.json").string(), "--out", (dir / "t").string()}).code ==
        cli::kExitUsage);
}

TEST_CASE("train") {
  const auto dir = testing::scratch_dir("cli_train");
  const auto data = small_dataset(dir);
  auto args = concat({"train", "--data", data.string(), "--out", (dir / "ae").string(), "--objective", "beta_vae",
                      "--beta-s", "0"},
                     small_model_flags());
  args[std::find(args.begin(), args.end(), "--iterations") - args.begin() + 1] = "2000";
  REQUIRE(dvae_cli(args).code == 0);
  const auto log = vae::TrainingLog::read_csv(dir / "ae" / "train_log.csv");
  REQUIRE(log.records.size() > 6);
  const auto& rec = log.records;
  const double head = (rec[0].loss.rec + rec[1].loss.rec + rec[2].loss.rec) / 3.0;
  const std::size_t n = rec.size();
  const double tail = (rec[n - 1].loss.rec + rec[n - 2].loss.rec + rec[n - 3].loss.rec) / 3.0;
  CHECK(tail < head);

  const auto tc = dvae_cli(concat({"train", "--data", data.string(), "--out", (dir / "tc").string(), "--objective",
                                   "tcvae", "--alpha", "0", "--beta", "1e-2", "--gamma", "1e-1"},
                                  small_model_flags()));
  CHECK(tc.code == 0);
  const auto doc = metrics::read_json(dir / "tc" / "train.json");
  CHECK(doc["config"]["beta"] == 0.01);
  CHECK(doc["config"]["gamma"] == 0.1);
}

TEST_CASE("eval") {
  const auto dir = testing::scratch_dir("cli_eval");
  const auto data = small_dataset(dir);
  REQUIRE(dvae_cli(concat({"train", "--data", data.string(), "--out", (dir / "m").string()}, small_model_flags()))
              .code == 0);
  const auto model = (dir / "m" / "model.bin").string();
  const auto base = concat({"eval", "--data", data.string(), "--model", model, "--seed", "3"}, quick_eval_flags());
  REQUIRE(dvae_cli(concat(base, {"--out", (dir / "e1").string()})).code == 0);
  REQUIRE(dvae_cli(concat(base, {"--out", (dir / "e2").string()})).code == 0);
  CHECK(tree(dir / "e1") == tree(dir / "e2"));
  const auto report = metrics::read_json(dir / "e1" / "report.json");
  for (const char* key : {"eer", "wsepin", "dci", "kld", "config", "version"}) CHECK(report.contains(key));
  CHECK(report["dci"]["compactness"].size() == 3);
  CHECK(report["dci"]["modularity"].size() == 4);
  CHECK(fs::exists(dir / "e1" / "importance.csv"));

  SUBCASE("bypass mode scores raw observations") {
    const auto r = dvae_cli(concat({"eval", "--bypass", "--data", data.string(), "--out", (dir / "raw").string()},
                                   quick_eval_flags()));
    REQUIRE(r.code == 0);
    const auto raw = metrics::read_json(dir / "raw" / "report.json");
    for (const char* key : {"compactness", "modularity", "explicitness"}) CHECK(raw["dci"].contains(key));
    CHECK(raw["wsepin"].is_null());
    CHECK(raw["eer"].is_number());
  }
  SUBCASE("missing factors skip DCI with a notice") {
    const auto ds = data::load_dataset(data);
    auto stripped = ds;
    stripped.factors.reset();
    stripped.factor_names.clear();
    data::save_dataset(dir / "nofactors.csv", stripped);
    const auto r = dvae_cli(concat({"eval", "--data", (dir / "nofactors.csv").string(), "--model", model, "--out",
                                    (dir / "nf").string()},
                                   quick_eval_flags()));
    REQUIRE(r.code == 0);
    CHECK(r.out.find("DCI skipped") != std::string::npos);
    const auto nf = metrics::read_json(dir / "nf" / "report.json");
    CHECK(nf["dci"].is_null());
    CHECK(nf["eer"].is_number());
    CHECK(nf["wsepin"].is_object());
  }
}

TEST_CASE("eval of an identity mapping reaches the one-to-one fixed point") {
  const auto dir = testing::scratch_dir("cli_identity");
  data::SyntheticConfig c;
  c.n_speakers = 150;
  c.utterances_per_speaker = 4;
  c.factors = 4;
  c.observation_dim = 4;
  c.session_noise_std = 0.0;
  c.mixing_matrix = Matrix::Identity(4, 4);
  data::save_dataset(dir / "id.csv", data::generate_synthetic(c));
  vae::save_model(dir / "id.bin", testing::identity_model(4));
  REQUIRE(dvae_cli(concat({"eval", "--data", (dir / "id.csv").string(), "--model", (dir / "id.bin").string(),
                           "--out", (dir / "e").string()},
                          quick_eval_flags()))
              .code == 0);
  const auto agg = metrics::read_json(dir / "e" / "report.json")["dci"]["aggregates"];
  CHECK(agg["compactness"].get<double>() > 0.9);
  CHECK(agg["modularity"].get<double>() > 0.9);
}

TEST_CASE("sweep") {
  const auto dir = testing::scratch_dir("cli_sweep");
  const auto data = small_dataset(dir);
  const auto sweep = concat(concat({"sweep", "--data", data.string(), "--beta-s-grid", "0,1,10"}, small_model_flags()),
                            quick_eval_flags());
  REQUIRE(dvae_cli(concat(sweep, {"--out", (dir / "s").string()})).code == 0);
  const auto first = tree(dir / "s");
  CHECK(first.contains("table.csv"));
  CHECK(first.contains("series.csv"));
  CHECK(first.contains("cell_002/report.json"));

  SUBCASE("parallel cells match sequential ones") {
    REQUIRE(dvae_cli(concat(sweep, {"--out", (dir / "p").string(), "--jobs", "3"})).code == 0);
    CHECK(tree(dir / "p") == first);
  }
  SUBCASE("an interrupted sweep resumes to the same result") {
    fs::remove_all(dir / "s" / "cell_001");
    fs::remove(dir / "s" / "cell_002" / "done");
    fs::remove(dir / "s" / "table.csv");
    REQUIRE(dvae_cli(concat(sweep, {"--out", (dir / "s").string()})).code == 0);
    CHECK(tree(dir / "s") == first);
  }
  SUBCASE("re-running from the embedded config") {
    REQUIRE(dvae_cli({"sweep", "--config", (dir / "s" / "sweep.json").string(), "--out", (dir / "r").string()}).code ==
            0);
    CHECK(tree(dir / "r") == first);
  }
  SUBCASE("a 1x1 grid composes train and eval") {
    const auto one = concat(concat({"sweep", "--data", data.string(), "--alpha-grid", "0", "--beta-grid", "0.5",
                                    "--gamma-grid", "0.1", "--out", (dir / "one").string()},
                                   small_model_flags()),
                            quick_eval_flags());
    REQUIRE(dvae_cli(one).code == 0);
    REQUIRE(dvae_cli(concat({"train", "--data", data.string(), "--out", (dir / "t").string(), "--objective", "tcvae",
                             "--alpha", "0", "--beta", "0.5", "--gamma", "0.1"},
                            small_model_flags()))
                .code == 0);
    REQUIRE(dvae_cli(concat({"eval", "--data", data.string(), "--model", (dir / "t" / "model.bin").string(), "--seed",
                             "5", "--out", (dir / "e").string()},
                            quick_eval_flags()))
                .code == 0);
    CHECK(slurp(dir / "one" / "cell_000" / "model.bin") == slurp(dir / "t" / "model.bin"));
    CHECK(slurp(dir / "one" / "cell_000" / "train_log.csv") == slurp(dir / "t" / "train_log.csv"));
    auto cell = metrics::read_json(dir / "one" / "cell_000" / "report.json");
    auto direct = metrics::read_json(dir / "e" / "report.json");
    cell.erase("config");
    direct.erase("config");
    CHECK(cell == direct);
  }
  SUBCASE("grids are validated") {
    CHECK(dvae_cli(concat({"sweep", "--data", data.string(), "--out", (dir / "x").string()}, small_model_flags()))
              .code == cli::kExitUsage);
    CHECK(dvae_cli(concat({"sweep", "--data", data.string(), "--beta-s-grid", "1", "--alpha-grid", "0", "--out",
                           (dir / "x").string()},
                          small_model_flags()))
              .code == cli::kExitUsage);
  }
}

TEST_CASE("rank") {
  const auto dir = testing::scratch_dir("cli_rank");
  const auto table = table_with(1, false, dir / "f.csv");
  const auto r = dvae_cli({"rank", "--table", table, "--top-k", "10", "--out", (dir / "r").string()});
  REQUIRE(r.code == 0);
  std::ifstream in(dir / "r" / "ranking.csv");
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(in, line)) lines.push_back(line);
  REQUIRE(lines.size() == 11);
  CHECK(lines[1].rfind("1,F0,", 0) == 0);
  CHECK(r.out.find("accuracy: ") != std::string::npos);

  const auto shuffled = table_with(2, true, dir / "s.csv");
  REQUIRE(dvae_cli({"rank", "--table", shuffled, "--out", (dir / "s").string()}).code == 0);
  const double acc = metrics::read_json(dir / "s" / "rank.json")["accuracy"];
  CHECK(std::abs(acc - 0.1) < 3.0 * std::sqrt(0.1 * 0.9 / 40.0));
}
