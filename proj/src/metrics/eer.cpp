#include "dvae/metrics/eer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace dvae::metrics {

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw InvalidArgument("cosine_similarity: vector lengths differ");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) throw InvalidArgument("cosine_similarity: zero vector");
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

double compute_eer(std::span<const double> target_scores, std::span<const double> nontarget_scores) {
  if (target_scores.empty() || nontarget_scores.empty()) {
    throw InvalidArgument("compute_eer: target and nontarget score lists must be non-empty");
  }
  std::vector<double> tgt(target_scores.begin(), target_scores.end());
  std::vector<double> non(nontarget_scores.begin(), nontarget_scores.end());
  std::sort(tgt.begin(), tgt.end());
  std::sort(non.begin(), non.end());
  const double n_tgt = static_cast<double>(tgt.size());
  const double n_non = static_cast<double>(non.size());

  // it/in: number of target/nontarget scores strictly below the threshold.
  std::size_t it = 0, in = 0;
  double prev_frr = 0.0, prev_diff = 0.0;
  bool first = true;
  while (true) {
    double threshold = std::numeric_limits<double>::infinity();
    if (it < tgt.size()) threshold = tgt[it];
    if (in < non.size()) threshold = std::min(threshold, non[in]);
    const bool at_infinity = it == tgt.size() && in == non.size();

    const double frr = static_cast<double>(it) / n_tgt;
    const double far = static_cast<double>(non.size() - in) / n_non;
    const double diff = far - frr;
    if (diff <= 0.0) {
      if (diff == 0.0 || first) return frr;
      const double lambda = prev_diff / (prev_diff - diff);
      return prev_frr + lambda * (frr - prev_frr);
    }
    if (at_infinity) return frr;  // unreachable: at +inf far = 0 and frr = 1
    prev_frr = frr;
    prev_diff = diff;
    first = false;
    while (it < tgt.size() && tgt[it] <= threshold) ++it;
    while (in < non.size() && non[in] <= threshold) ++in;
  }
}

TrialScores score_trials(const Matrix& vectors, const TrialList& trials) {
  trials.validate(static_cast<std::size_t>(vectors.rows()));
  TrialScores scores;
  const auto cols = static_cast<std::size_t>(vectors.cols());
  for (const auto& t : trials.trials) {
    const double s = cosine_similarity(
        std::span<const double>(vectors.row(static_cast<Eigen::Index>(t.a)).data(), cols),
        std::span<const double>(vectors.row(static_cast<Eigen::Index>(t.b)).data(), cols));
    (t.target ? scores.target : scores.nontarget).push_back(s);
  }
  return scores;
}

double eer_on_reconstructions(const vae::VaeModel& model, const data::Dataset& dataset,
                              const TrialList& trials) {
  dataset.require_labels("EER on reconstructions");
  const Matrix recon = vae::reconstruct(model, dataset.observations);
  const TrialScores scores = score_trials(recon, trials);
  return compute_eer(scores.target, scores.nontarget);
}

}  // namespace dvae::metrics
