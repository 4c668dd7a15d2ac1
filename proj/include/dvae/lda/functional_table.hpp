#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "dvae/common.hpp"

namespace dvae::lda {

/// Utterance-level acoustic functionals with speaker labels.
struct FunctionalTable {
  std::vector<std::string> ids;
  Matrix values;                      // N x Nf
  std::vector<std::size_t> labels;    // indexes class_names
  std::vector<std::string> class_names;
  std::vector<std::string> names;     // Nf column names

  std::size_t size() const { return ids.size(); }
  std::size_t features() const { return names.size(); }
  void validate() const;
  FunctionalTable subset(const std::vector<std::size_t>& rows) const;
};

/// Header `id,label,<name1>,...`; every row needs a label.
FunctionalTable read_functional_table(const std::filesystem::path& path);
void write_functional_table(const std::filesystem::path& path, const FunctionalTable& table);

struct StandardizeStats {
  Vector mean;
  Vector std_dev;  // population standard deviation
  std::vector<std::string> names;

  /// Maps a table onto these statistics; columns must match by name.
  FunctionalTable apply(const FunctionalTable& table) const;
};

/// Centers and scales every column; a zero-variance column is rejected by
/// name.
std::pair<FunctionalTable, StandardizeStats> standardize(const FunctionalTable& table);

/// Shuffled utterance split, sizes rounded to nearest.
std::pair<FunctionalTable, FunctionalTable> split(const FunctionalTable& table,
                                                  double train_fraction, std::uint64_t seed);

}  // namespace dvae::lda
