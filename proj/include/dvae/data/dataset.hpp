#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dvae/common.hpp"

namespace dvae::data {

/// Observations with optional proxy factors and optional class labels.
struct Dataset {
  std::vector<std::string> ids;
  Matrix observations;  // N x Dx
  std::optional<Matrix> factors;  // N x K
  std::vector<std::string> factor_names;
  std::optional<std::vector<std::size_t>> labels;  // indexes class_names
  std::vector<std::string> class_names;

  std::size_t size() const { return ids.size(); }
  bool has_factors() const { return factors.has_value(); }
  bool has_labels() const { return labels.has_value(); }

  /// Throws InvalidArgument on inconsistent row counts, duplicate ids or
  /// non-finite values.
  void validate() const;

  const Matrix& require_factors(const std::string& purpose) const;
  const std::vector<std::size_t>& require_labels(const std::string& purpose) const;

  Dataset subset(const std::vector<std::size_t>& rows) const;
  std::size_t row_of(const std::string& id) const;
};

/// Header: id,label,f_<name>...,x_<i>... ; the label column may be left
/// empty on every row (labels absent) and the f_ block may be omitted.
Dataset load_dataset(const std::filesystem::path& path);
void save_dataset(const std::filesystem::path& path, const Dataset& dataset);

/// Deterministic shuffle split. With speaker_disjoint, whole classes are
/// assigned to one side until the train side reaches the requested share.
std::pair<Dataset, Dataset> split(const Dataset& dataset, double train_fraction,
                                  std::uint64_t seed, bool speaker_disjoint = false);

}  // namespace dvae::data
