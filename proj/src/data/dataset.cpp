#include "dvae/data/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <unordered_map>
#include <unordered_set>

#include "dvae/data/csv.hpp"

namespace dvae::data {

void Dataset::validate() const {
  const auto n = static_cast<Eigen::Index>(ids.size());
  if (observations.rows() != n) {
    throw InvalidArgument("dataset: " + std::to_string(ids.size()) + " ids but " +
                          std::to_string(observations.rows()) + " observation rows");
  }
  if (!observations.allFinite()) throw InvalidArgument("dataset: non-finite observation");
  if (factors) {
    if (factors->rows() != n) throw InvalidArgument("dataset: factor row count mismatch");
    if (static_cast<std::size_t>(factors->cols()) != factor_names.size()) {
      throw InvalidArgument("dataset: factor names do not match factor columns");
    }
    if (!factors->allFinite()) throw InvalidArgument("dataset: non-finite factor value");
  }
  if (labels) {
    if (labels->size() != ids.size()) throw InvalidArgument("dataset: label count mismatch");
    for (auto l : *labels) {
      if (l >= class_names.size()) throw InvalidArgument("dataset: label index out of range");
    }
  }
  std::unordered_set<std::string> seen;
  for (const auto& id : ids) {
    if (!seen.insert(id).second) throw InvalidArgument("dataset: duplicate id '" + id + "'");
  }
}

const Matrix& Dataset::require_factors(const std::string& purpose) const {
  if (!factors) throw InvalidArgument(purpose + " requires factor columns (f_*) in the dataset");
  return *factors;
}

const std::vector<std::size_t>& Dataset::require_labels(const std::string& purpose) const {
  if (!labels) throw InvalidArgument(purpose + " requires class labels in the dataset");
  return *labels;
}

Dataset Dataset::subset(const std::vector<std::size_t>& rows) const {
  Dataset out;
  out.factor_names = factor_names;
  out.class_names = class_names;
  out.observations.resize(static_cast<Eigen::Index>(rows.size()), observations.cols());
  if (factors) out.factors = Matrix(static_cast<Eigen::Index>(rows.size()), factors->cols());
  if (labels) out.labels = std::vector<std::size_t>();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const std::size_t r = rows[i];
    if (r >= size()) throw InvalidArgument("Dataset::subset: row out of range");
    const auto ii = static_cast<Eigen::Index>(i);
    const auto rr = static_cast<Eigen::Index>(r);
    out.ids.push_back(ids[r]);
    out.observations.row(ii) = observations.row(rr);
    if (factors) out.factors->row(ii) = factors->row(rr);
    if (labels) out.labels->push_back((*labels)[r]);
  }
  return out;
}

std::size_t Dataset::row_of(const std::string& id) const {
  const auto it = std::find(ids.begin(), ids.end(), id);
  if (it == ids.end()) throw InvalidArgument("dataset: unknown id '" + id + "'");
  return static_cast<std::size_t>(it - ids.begin());
}

Dataset load_dataset(const std::filesystem::path& path) {
  const CsvTable table = read_csv(path);
  const auto& header = table.header;
  if (header.empty() || header[0] != "id") {
    throw InvalidArgument(path.string() + ": line 1: first column must be 'id'");
  }
  std::size_t label_col = header.size();
  std::vector<std::size_t> factor_cols, obs_cols;
  Dataset ds;
  for (std::size_t c = 1; c < header.size(); ++c) {
    const std::string& name = header[c];
    if (name == "label" && label_col == header.size()) {
      label_col = c;
    } else if (name.rfind("f_", 0) == 0 && name.size() > 2) {
      factor_cols.push_back(c);
      ds.factor_names.push_back(name.substr(2));
    } else if (name.rfind("x_", 0) == 0 && name.size() > 2) {
      obs_cols.push_back(c);
    } else {
      throw InvalidArgument(path.string() + ": line 1: unexpected column '" + name + "'");
    }
  }
  if (obs_cols.empty()) throw InvalidArgument(path.string() + ": line 1: no x_ observation columns");

  const auto n = static_cast<Eigen::Index>(table.rows.size());
  ds.observations.resize(n, static_cast<Eigen::Index>(obs_cols.size()));
  Matrix factors(n, static_cast<Eigen::Index>(factor_cols.size()));
  std::vector<std::string> raw_labels;
  std::unordered_set<std::string> seen_ids;
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto& row = table.rows[static_cast<std::size_t>(r)];
    const std::size_t line = table.line_numbers[static_cast<std::size_t>(r)];
    if (row[0].empty()) throw InvalidArgument(path.string() + ": line " + std::to_string(line) + ": empty id");
    if (!seen_ids.insert(row[0]).second) {
      throw InvalidArgument(path.string() + ": line " + std::to_string(line) + ": duplicate id '" +
                            row[0] + "'");
    }
    ds.ids.push_back(row[0]);
    for (std::size_t c = 0; c < obs_cols.size(); ++c) {
      ds.observations(r, static_cast<Eigen::Index>(c)) =
          parse_real(row[obs_cols[c]], line, header[obs_cols[c]]);
    }
    for (std::size_t c = 0; c < factor_cols.size(); ++c) {
      factors(r, static_cast<Eigen::Index>(c)) =
          parse_real(row[factor_cols[c]], line, header[factor_cols[c]]);
    }
    if (label_col < header.size()) raw_labels.push_back(row[label_col]);
  }
  if (!factor_cols.empty()) ds.factors = std::move(factors);

  const bool any_label = std::any_of(raw_labels.begin(), raw_labels.end(),
                                     [](const std::string& s) { return !s.empty(); });
  if (any_label) {
    std::unordered_map<std::string, std::size_t> index;
    std::vector<std::size_t> labels;
    for (std::size_t r = 0; r < raw_labels.size(); ++r) {
      if (raw_labels[r].empty()) {
        throw InvalidArgument(path.string() + ": line " + std::to_string(table.line_numbers[r]) +
                              ": missing label while other rows have one");
      }
      auto [it, inserted] = index.emplace(raw_labels[r], ds.class_names.size());
      if (inserted) ds.class_names.push_back(raw_labels[r]);
      labels.push_back(it->second);
    }
    ds.labels = std::move(labels);
  }
  ds.validate();
  return ds;
}

void save_dataset(const std::filesystem::path& path, const Dataset& ds) {
  ds.validate();
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << "id,label";
  for (const auto& name : ds.factor_names) out << ",f_" << name;
  for (Eigen::Index c = 0; c < ds.observations.cols(); ++c) out << ",x_" << (c + 1);
  out << '\n';
  for (std::size_t r = 0; r < ds.size(); ++r) {
    const auto rr = static_cast<Eigen::Index>(r);
    out << ds.ids[r] << ',';
    if (ds.labels) out << ds.class_names[(*ds.labels)[r]];
    if (ds.factors) {
      for (Eigen::Index c = 0; c < ds.factors->cols(); ++c) out << ',' << format_double((*ds.factors)(rr, c));
    }
    for (Eigen::Index c = 0; c < ds.observations.cols(); ++c) {
      out << ',' << format_double(ds.observations(rr, c));
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::pair<Dataset, Dataset> split(const Dataset& dataset, double train_fraction,
                                  std::uint64_t seed, bool speaker_disjoint) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw InvalidArgument("split: train fraction must lie strictly between 0 and 1");
  }
  const std::size_t n = dataset.size();
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> train, test;
  if (!speaker_disjoint) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n)));
    train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(std::min(n_train, n)));
    test.assign(order.begin() + static_cast<std::ptrdiff_t>(std::min(n_train, n)), order.end());
  } else {
    const auto& labels = dataset.require_labels("speaker-disjoint split");
    std::vector<std::size_t> classes(dataset.class_names.size());
    std::iota(classes.begin(), classes.end(), 0);
    std::shuffle(classes.begin(), classes.end(), rng);
    std::vector<std::vector<std::size_t>> members(classes.size());
    for (std::size_t r = 0; r < n; ++r) members[labels[r]].push_back(r);
    const double target = train_fraction * static_cast<double>(n);
    for (auto c : classes) {
      auto& side = static_cast<double>(train.size()) < target ? train : test;
      side.insert(side.end(), members[c].begin(), members[c].end());
    }
    std::sort(train.begin(), train.end());
    std::sort(test.begin(), test.end());
  }
  if (train.empty() || test.empty()) {
    throw InvalidArgument("split: fraction " + format_double(train_fraction) + " of " +
                          std::to_string(n) + " rows leaves one side empty");
  }
  return {dataset.subset(train), dataset.subset(test)};
}

}  // namespace dvae::data
