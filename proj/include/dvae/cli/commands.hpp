#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "dvae/cli/run_config.hpp"
#include "dvae/metrics/report.hpp"
#include "dvae/metrics/trials.hpp"

namespace dvae::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

/// Parses `args` (args[0] is the program name), runs the subcommand and
/// returns the process exit code. Diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

/// Builds the initial model from the options and trains it.
vae::TrainResult train_model(const data::Dataset& dataset, const TrainOptions& options);

struct Evaluation {
  metrics::MetricsReport report;
  std::optional<metrics::ImportanceMatrix> importance;
  std::optional<metrics::TrialList> trials;
};

/// Runs every metric the dataset supports on `model`, or on the raw
/// observations when model is null. Skipped metrics leave a notice.
Evaluation evaluate(const vae::VaeModel* model, const data::Dataset& dataset,
                    const EvalOptions& options);

}  // namespace dvae::cli
