#pragma once

#include <span>

#include "dvae/common.hpp"
#include "dvae/data/dataset.hpp"
#include "dvae/metrics/trials.hpp"
#include "dvae/vae/model.hpp"

namespace dvae::metrics {

/// a.b / (|a||b|); throws InvalidArgument for a zero vector or size mismatch.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

/// Equal error rate of a verification score set, in [0, 1].
///
/// A threshold t accepts every score >= t. Candidate thresholds are the
/// distinct scores plus +inf; walking them upwards, the false-rejection
/// rate rises and the false-alarm rate falls. At the first threshold where
/// false alarms no longer exceed false rejections the two rate curves are
/// intersected linearly against the previous threshold.
double compute_eer(std::span<const double> target_scores, std::span<const double> nontarget_scores);

/// Cosine scores of each trial on the given (reconstructed) vectors.
struct TrialScores {
  std::vector<double> target;
  std::vector<double> nontarget;
};
TrialScores score_trials(const Matrix& vectors, const TrialList& trials);

/// Reconstructs every row through encode -> mean latent -> decode, scores
/// the trials by cosine similarity and returns the EER.
double eer_on_reconstructions(const vae::VaeModel& model, const data::Dataset& dataset,
                              const TrialList& trials);

}  // namespace dvae::metrics
