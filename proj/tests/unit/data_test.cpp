#include <doctest.h>

#include <cmath>
#include <fstream>
#include <set>

#include "dvae/data/csv.hpp"
#include "dvae/data/dataset.hpp"
#include "dvae/data/synthetic.hpp"
#include "support.hpp"

using namespace dvae;
using namespace dvae::data;

namespace {

SyntheticConfig config(std::size_t speakers, std::size_t utts, std::size_t k, std::size_t dx, std::uint64_t seed) {
  SyntheticConfig c;
  c.n_speakers = speakers;
  c.utterances_per_speaker = utts;
  c.factors = k;
  c.observation_dim = dx;
  c.seed = seed;
  return c;
}

std::string error_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const InvalidArgument& e) {
    return e.what();
  }
  return "";
}

void write_text(const std::filesystem::path& p, const std::string& text) { std::ofstream(p) << text; }

// Speaker-level factor sample covariance (one row per speaker).
Matrix speaker_covariance(const Dataset& ds, std::size_t utts) {
  const Matrix& f = *ds.factors;
  const auto speakers = f.rows() / static_cast<Eigen::Index>(utts);
  Matrix per(speakers, f.cols());
  for (Eigen::Index s = 0; s < speakers; ++s) per.row(s) = f.row(s * static_cast<Eigen::Index>(utts));
  const Eigen::RowVectorXd mean = per.colwise().mean();
  const Matrix centered = per.rowwise() - mean;
  return centered.transpose() * centered / static_cast<double>(speakers - 1);
}

}  // namespace

TEST_CASE("synthetic data is deterministic and well formed") {
  const auto c = config(20, 5, 3, 8, 7);
  const auto a = generate_synthetic(c);
  const auto b = generate_synthetic(c);
  CHECK(a.observations == b.observations);
  CHECK(*a.factors == *b.factors);
  CHECK(a.ids == b.ids);
  CHECK(a.size() == 100);
  CHECK(a.class_names.size() == 20);
  CHECK(a.factor_names == std::vector<std::string>{"1", "2", "3"});
  auto other = c;
  other.seed = 8;
  CHECK_FALSE(generate_synthetic(other).observations == a.observations);
  // Factors are speaker-level: constant across a speaker's utterances.
  CHECK(a.factors->row(0) == a.factors->row(4));
  CHECK_FALSE(a.factors->row(0) == a.factors->row(5));
}

TEST_CASE("identity correlation gives uncorrelated factors") {
  const auto ds = generate_synthetic(config(10000, 1, 3, 3, 1));
  const Matrix cov = speaker_covariance(ds, 1);
  const double tol = 3.0 / std::sqrt(10000.0);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      if (i == j) continue;
      CHECK(std::abs(cov(i, j) / std::sqrt(cov(i, i) * cov(j, j))) < tol);
    }
  }
}

TEST_CASE("factor covariance converges to the requested correlation") {
  auto c = config(50000, 1, 3, 3, 2);
  c.factor_correlation.resize(3, 3);
  c.factor_correlation << 1.0, 0.6, -0.3, 0.6, 1.0, 0.2, -0.3, 0.2, 1.0;
  const auto ds = generate_synthetic(c);
  const Matrix cov = speaker_covariance(ds, 1);
  CHECK((cov - c.factor_correlation).norm() / c.factor_correlation.norm() < 0.05);
}

TEST_CASE("noiseless linear mixing stays in the column span") {
  auto c = config(30, 3, 4, 10, 3);
  c.session_noise_std = 0.0;
  const auto ds = generate_synthetic(c);
  const Matrix a = mixing_matrix(c);
  CHECK(a.rows() == 10);
  CHECK(a.cols() == 4);
  const Eigen::MatrixXd am = a;
  const auto qr = am.colPivHouseholderQr();
  CHECK(qr.rank() == 4);
  for (Eigen::Index r = 0; r < ds.observations.rows(); ++r) {
    const Eigen::VectorXd x = ds.observations.row(r).transpose();
    const Eigen::VectorXd coef = qr.solve(x);
    CHECK((am * coef - x).norm() < 1e-10);
  }
  // The planted factors are exactly the mixing coefficients.
  CHECK((ds.factors->row(0) * a.transpose() - ds.observations.row(0)).norm() < 1e-12);
}

TEST_CASE("identity mixing override") {
  auto c = config(10, 2, 3, 3, 4);
  c.session_noise_std = 0.0;
  c.mixing_matrix = Matrix::Identity(3, 3);
  const auto ds = generate_synthetic(c);
  CHECK(ds.observations == *ds.factors);
}

TEST_CASE("invalid synthetic configs name the violated property") {
  auto c = config(10, 2, 2, 4, 0);
  c.factor_correlation.resize(2, 2);
  c.factor_correlation << 1.0, 0.5, 0.4, 1.0;
  CHECK(error_of([&] { validate(c); }).find("not symmetric") != std::string::npos);
  c.factor_correlation << 2.0, 0.5, 0.5, 1.0;
  CHECK(error_of([&] { validate(c); }).find("unit diagonal") != std::string::npos);
  c.factor_correlation << 1.0, 1.5, 1.5, 1.0;
  CHECK(error_of([&] { validate(c); }).find("positive definite") != std::string::npos);
  auto d = config(10, 2, 5, 4, 0);
  CHECK(error_of([&] { validate(d); }).find("observation dim") != std::string::npos);
  CHECK_THROWS_AS(mixing_from_string("cubic"), InvalidArgument);
}

TEST_CASE("dataset CSV round trip is bit-identical") {
  auto c = config(12, 3, 3, 5, 11);
  c.mixing = Mixing::tanh;
  const auto ds = generate_synthetic(c);
  const auto dir = testing::scratch_dir("data_roundtrip");
  save_dataset(dir / "d.csv", ds);
  const auto back = load_dataset(dir / "d.csv");
  CHECK(back.ids == ds.ids);
  CHECK(back.observations == ds.observations);
  CHECK(*back.factors == *ds.factors);
  CHECK(*back.labels == *ds.labels);
  CHECK(back.factor_names == ds.factor_names);
  std::ifstream in(dir / "d.csv");
  std::string header;
  std::getline(in, header);
  CHECK(header == "id,label,f_1,f_2,f_3,x_1,x_2,x_3,x_4,x_5");
}

TEST_CASE("optional factor and label columns") {
  const auto dir = testing::scratch_dir("data_optional");
  write_text(dir / "a.csv", "id,label,x_1,x_2\nu1,,1,2\nu2,,3,4\n");
  const auto ds = load_dataset(dir / "a.csv");
  CHECK_FALSE(ds.has_factors());
  CHECK_FALSE(ds.has_labels());
  CHECK(error_of([&] { ds.require_factors("DCI"); }).find("DCI requires factor columns") != std::string::npos);
  CHECK_THROWS_AS(ds.require_labels("EER"), InvalidArgument);

  write_text(dir / "b.csv", "id,x_1\nu1,1\nu2,2\n");
  CHECK(load_dataset(dir / "b.csv").size() == 2);
}

TEST_CASE("malformed files cite the offending line") {
  const auto dir = testing::scratch_dir("data_errors");
  std::string text = "id,label,f_1,x_1,x_2\n";
  for (int i = 2; i <= 20; ++i) {
    if (i == 17) {
      text += "u17,s1,0.5,1.0\n";  // one field short
    } else {
      text += "u" + std::to_string(i) + ",s1,0.5,1.0,2.0\n";
    }
  }
  write_text(dir / "ragged.csv", text);
  CHECK(error_of([&] { load_dataset(dir / "ragged.csv"); }).find("line 17") != std::string::npos);

  write_text(dir / "nan.csv", "id,x_1\nu1,1\nu2,abc\n");
  const auto msg = error_of([&] { load_dataset(dir / "nan.csv"); });
  CHECK(msg.find("line 3") != std::string::npos);
  CHECK(msg.find("x_1") != std::string::npos);

  write_text(dir / "dup.csv", "id,x_1\nu1,1\nu2,2\nu1,3\n");
  const auto dup = error_of([&] { load_dataset(dir / "dup.csv"); });
  CHECK(dup.find("line 4") != std::string::npos);
  CHECK(dup.find("duplicate id") != std::string::npos);

  write_text(dir / "inf.csv", "id,x_1\nu1,inf\n");
  CHECK_THROWS_AS(load_dataset(dir / "inf.csv"), InvalidArgument);
  CHECK_THROWS_AS(load_dataset(dir / "missing.csv"), InvalidArgument);
}

TEST_CASE("split") {
  const auto ds = generate_synthetic(config(25, 4, 2, 3, 5));
  const auto [train, test] = split(ds, 0.8, 13);
  CHECK(train.size() == 80);
  CHECK(test.size() == 20);
  std::set<std::string> all(train.ids.begin(), train.ids.end());
  for (const auto& id : test.ids) CHECK(all.insert(id).second);
  CHECK(all.size() == ds.size());
  const auto [again, _] = split(ds, 0.8, 13);
  CHECK(again.ids == train.ids);
  CHECK_THROWS_AS(split(ds, 1.0, 1), InvalidArgument);
  CHECK_THROWS_AS(split(ds, 0.001, 1), InvalidArgument);

  const auto [strain, stest] = split(ds, 0.8, 13, true);
  std::set<std::size_t> train_classes(strain.labels->begin(), strain.labels->end());
  for (auto l : *stest.labels) CHECK_FALSE(train_classes.contains(l));
  CHECK(strain.size() + stest.size() == ds.size());
}

TEST_CASE("correlation matrix files") {
  const auto dir = testing::scratch_dir("data_matrix");
  write_text(dir / "c.csv", "1,0.2\n0.2,1\n");
  const Matrix m = load_matrix_csv(dir / "c.csv");
  CHECK(m(0, 1) == 0.2);
  write_text(dir / "r.csv", "1,0.2\n0.2\n");
  CHECK_THROWS_AS(load_matrix_csv(dir / "r.csv"), InvalidArgument);
}
