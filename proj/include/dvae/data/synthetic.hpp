#pragma once

#include <optional>
#include <string>

#include "dvae/data/dataset.hpp"

namespace dvae::data {

enum class Mixing { linear, tanh };

std::string to_string(Mixing m);
Mixing mixing_from_string(const std::string& name);

/// Speakers carry a factor vector f ~ N(0, factor_correlation); each
/// utterance observes x = mixing(A f) + session noise.
struct SyntheticConfig {
  std::size_t n_speakers = 200;
  std::size_t utterances_per_speaker = 10;
  std::size_t factors = 8;
  std::size_t observation_dim = 64;
  Matrix factor_correlation;  // K x K; empty means identity
  Mixing mixing = Mixing::linear;
  double session_noise_std = 0.1;
  std::uint64_t seed = 0;
  /// Replaces the seeded Dx x K mixing matrix when set.
  std::optional<Matrix> mixing_matrix;
};

/// Throws InvalidArgument naming the violated property (symmetry, unit
/// diagonal, positive definiteness, Dx >= K, ...).
void validate(const SyntheticConfig& config);

/// The seeded mixing matrix A (Dx x K, entries N(0, 1/K)) used for `config`.
Matrix mixing_matrix(const SyntheticConfig& config);

Dataset generate_synthetic(const SyntheticConfig& config);

/// Reads a K x K correlation matrix from a headerless CSV.
Matrix load_matrix_csv(const std::filesystem::path& path);

}  // namespace dvae::data
