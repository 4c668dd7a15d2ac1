#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "dvae/data/dataset.hpp"

namespace dvae::metrics {

struct Trial {
  std::size_t a = 0;
  std::size_t b = 0;
  bool target = false;

  bool operator==(const Trial&) const = default;
};

struct TrialList {
  std::vector<Trial> trials;

  std::size_t target_count() const;
  std::size_t nontarget_count() const;

  /// Indices below `rows`, no self-pairs, at least one trial of each kind.
  void validate(std::size_t rows) const;

  bool operator==(const TrialList&) const = default;
};

/// Per class, up to max_trials_per_class within-class pairs are sampled
/// without replacement, and the same number of cross-class pairs anchored
/// in that class. Pairs are unordered and never repeated. Requires at
/// least two classes with two or more members each.
TrialList build_trial_list(std::span<const std::size_t> labels, std::size_t max_trials_per_class,
                           std::uint64_t seed);

/// Whitespace-separated `id_a id_b target|nontarget`, one trial per line.
void write_trial_list(const std::filesystem::path& path, const TrialList& trials,
                      const data::Dataset& dataset);
TrialList read_trial_list(const std::filesystem::path& path, const data::Dataset& dataset);

}  // namespace dvae::metrics
