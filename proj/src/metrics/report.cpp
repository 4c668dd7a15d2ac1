#include "dvae/metrics/report.hpp"

#include <fstream>

namespace dvae::metrics {

using nlohmann::json;

namespace {

json estimate_json(const Estimate& e) { return {{"value", e.value}, {"std_error", e.std_error}}; }

}  // namespace

json to_json(const WsepinResult& w) {
  json conditional = json::array(), marginal = json::array(), entropy = json::array();
  for (const auto& e : w.conditional_mi) conditional.push_back(estimate_json(e));
  for (const auto& e : w.marginal_mi) marginal.push_back(estimate_json(e));
  for (const auto& e : w.entropy) {
    entropy.push_back({{"value", e.value}, {"std_error", e.std_error}, {"flagged", e.flagged}});
  }
  return {{"value", w.value},
          {"flagged", w.flagged},
          {"joint_mi", estimate_json(w.joint_mi)},
          {"conditional_mi", conditional},
          {"marginal_mi", marginal},
          {"entropy", entropy},
          {"rho", w.rho}};
}

json to_json(const DciScores& s) {
  return {{"compactness", s.compactness_per_factor},
          {"modularity", s.modularity_per_dim},
          {"explicitness", s.explicitness_per_factor},
          {"aggregates",
           {{"compactness", s.compactness},
            {"modularity", s.modularity},
            {"mean_compactness", s.mean_compactness},
            {"mean_modularity", s.mean_modularity},
            {"explicitness", s.explicitness}}},
          {"flagged_factors", s.flagged_factors},
          {"flagged_dims", s.flagged_dims}};
}

json to_json(const vae::KlDiagnostics& k) {
  return {{"kl_analytic", k.kl_analytic},
          {"mi_hat", k.mi_hat},
          {"tc_hat", k.tc_hat},
          {"dkl_hat", k.dkl_hat}};
}

json MetricsReport::to_json() const {
  json doc;
  doc["version"] = kToolkitVersion;
  doc["eer"] = eer ? json(*eer) : json(nullptr);
  doc["wsepin"] = wsepin ? metrics::to_json(*wsepin) : json(nullptr);
  doc["dci"] = dci ? metrics::to_json(*dci) : json(nullptr);
  doc["kld"] = kld ? metrics::to_json(*kld) : json(nullptr);
  doc["notices"] = notices;
  doc["config"] = config;
  return doc;
}

void MetricsReport::write(const std::filesystem::path& path) const { write_json(path, to_json()); }

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw InvalidArgument(path.string() + ": " + e.what());
  }
}

void write_json(const std::filesystem::path& path, const json& doc) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << doc.dump(2) << '\n';
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace dvae::metrics
