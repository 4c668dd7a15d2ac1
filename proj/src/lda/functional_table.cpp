#include "dvae/lda/functional_table.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <unordered_map>

#include "dvae/data/csv.hpp"

namespace dvae::lda {

void FunctionalTable::validate() const {
  const auto n = static_cast<Eigen::Index>(ids.size());
  if (values.rows() != n || labels.size() != ids.size()) {
    throw InvalidArgument("functional table: row counts of ids, values and labels differ");
  }
  if (static_cast<std::size_t>(values.cols()) != names.size()) {
    throw InvalidArgument("functional table: " + std::to_string(names.size()) + " names for " +
                          std::to_string(values.cols()) + " columns");
  }
  if (!values.allFinite()) throw InvalidArgument("functional table: non-finite value");
  for (auto l : labels) {
    if (l >= class_names.size()) throw InvalidArgument("functional table: label index out of range");
  }
}

FunctionalTable FunctionalTable::subset(const std::vector<std::size_t>& rows) const {
  FunctionalTable out;
  out.names = names;
  out.class_names = class_names;
  out.values.resize(static_cast<Eigen::Index>(rows.size()), values.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= size()) throw InvalidArgument("FunctionalTable::subset: row out of range");
    out.ids.push_back(ids[rows[i]]);
    out.labels.push_back(labels[rows[i]]);
    out.values.row(static_cast<Eigen::Index>(i)) = values.row(static_cast<Eigen::Index>(rows[i]));
  }
  return out;
}

FunctionalTable read_functional_table(const std::filesystem::path& path) {
  const auto csv = data::read_csv(path);
  if (csv.header.size() < 3 || csv.header[0] != "id" || csv.header[1] != "label") {
    throw InvalidArgument(path.string() +
                          ": line 1: expected header id,label,<functional names...>");
  }
  FunctionalTable t;
  t.names.assign(csv.header.begin() + 2, csv.header.end());
  t.values.resize(static_cast<Eigen::Index>(csv.rows.size()), static_cast<Eigen::Index>(t.names.size()));
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t r = 0; r < csv.rows.size(); ++r) {
    const auto& row = csv.rows[r];
    const std::size_t line = csv.line_numbers[r];
    if (row[1].empty()) {
      throw InvalidArgument(path.string() + ": line " + std::to_string(line) + ": missing label");
    }
    t.ids.push_back(row[0]);
    auto [it, inserted] = index.emplace(row[1], t.class_names.size());
    if (inserted) t.class_names.push_back(row[1]);
    t.labels.push_back(it->second);
    for (std::size_t c = 2; c < row.size(); ++c) {
      t.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c - 2)) =
          data::parse_real(row[c], line, csv.header[c]);
    }
  }
  t.validate();
  return t;
}

void write_functional_table(const std::filesystem::path& path, const FunctionalTable& t) {
  t.validate();
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << "id,label";
  for (const auto& name : t.names) out << ',' << name;
  out << '\n';
  for (std::size_t r = 0; r < t.size(); ++r) {
    out << t.ids[r] << ',' << t.class_names[t.labels[r]];
    for (Eigen::Index c = 0; c < t.values.cols(); ++c) {
      out << ',' << format_double(t.values(static_cast<Eigen::Index>(r), c));
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

FunctionalTable StandardizeStats::apply(const FunctionalTable& table) const {
  if (table.names != names) {
    throw InvalidArgument("standardize: table columns do not match the fitted statistics");
  }
  FunctionalTable out = table;
  for (Eigen::Index c = 0; c < out.values.cols(); ++c) {
    out.values.col(c) = (out.values.col(c).array() - mean(c)) / std_dev(c);
  }
  return out;
}

std::pair<FunctionalTable, StandardizeStats> standardize(const FunctionalTable& table) {
  table.validate();
  if (table.size() == 0) throw InvalidArgument("standardize: empty table");
  StandardizeStats stats;
  stats.names = table.names;
  const auto n = static_cast<double>(table.size());
  stats.mean = table.values.colwise().mean().transpose();
  stats.std_dev.resize(table.values.cols());
  for (Eigen::Index c = 0; c < table.values.cols(); ++c) {
    const double var = (table.values.col(c).array() - stats.mean(c)).square().sum() / n;
    if (!(var > 0.0)) {
      throw InvalidArgument("standardize: column '" + table.names[static_cast<std::size_t>(c)] +
                            "' has zero variance");
    }
    stats.std_dev(c) = std::sqrt(var);
  }
  return {stats.apply(table), stats};
}

std::pair<FunctionalTable, FunctionalTable> split(const FunctionalTable& table,
                                                  double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw InvalidArgument("split: train fraction must lie strictly between 0 and 1");
  }
  std::vector<std::size_t> order(table.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_train = std::min<std::size_t>(
      static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(table.size()))),
      table.size());
  std::vector<std::size_t> train(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::vector<std::size_t> test(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  if (train.empty() || test.empty()) {
    throw InvalidArgument("split: fraction " + format_double(train_fraction) + " of " +
                          std::to_string(table.size()) + " rows leaves one side empty");
  }
  return {table.subset(train), table.subset(test)};
}

}  // namespace dvae::lda
