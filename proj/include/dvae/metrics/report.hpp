#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dvae/metrics/dci.hpp"
#include "dvae/metrics/information.hpp"
#include "dvae/vae/train.hpp"

namespace dvae::metrics {

/// Everything `eval` measures for one model (or for raw observations in
/// bypass mode). Absent sections are written as null.
struct MetricsReport {
  std::optional<double> eer;
  std::optional<WsepinResult> wsepin;
  std::optional<DciScores> dci;
  std::optional<vae::KlDiagnostics> kld;
  std::vector<std::string> notices;
  nlohmann::json config = nlohmann::json::object();

  nlohmann::json to_json() const;
  /// Pretty-printed JSON with a trailing newline.
  void write(const std::filesystem::path& path) const;
};

nlohmann::json to_json(const WsepinResult& w);
nlohmann::json to_json(const DciScores& s);
nlohmann::json to_json(const vae::KlDiagnostics& k);

/// Reads a JSON document, reporting parse errors with the file name.
nlohmann::json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const nlohmann::json& doc);

}  // namespace dvae::metrics
