#include "dvae/metrics/trials.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <unordered_map>

namespace dvae::metrics {

std::size_t TrialList::target_count() const {
  return static_cast<std::size_t>(
      std::count_if(trials.begin(), trials.end(), [](const Trial& t) { return t.target; }));
}

std::size_t TrialList::nontarget_count() const { return trials.size() - target_count(); }

void TrialList::validate(std::size_t rows) const {
  for (const auto& t : trials) {
    if (t.a >= rows || t.b >= rows) throw InvalidArgument("trial list: index out of range");
    if (t.a == t.b) throw InvalidArgument("trial list: self-pair");
  }
  if (target_count() == 0 || nontarget_count() == 0) {
    throw InvalidArgument("trial list: needs at least one target and one nontarget trial");
  }
}

TrialList build_trial_list(std::span<const std::size_t> labels, std::size_t max_trials_per_class,
                           std::uint64_t seed) {
  if (max_trials_per_class == 0) throw InvalidArgument("trial list: max trials per class must be >= 1");
  std::size_t n_classes = 0;
  for (auto l : labels) n_classes = std::max(n_classes, l + 1);
  std::vector<std::vector<std::size_t>> members(n_classes);
  for (std::size_t i = 0; i < labels.size(); ++i) members[labels[i]].push_back(i);

  std::size_t populated = 0, singletons = 0;
  for (const auto& m : members) {
    if (!m.empty()) ++populated;
    if (m.size() == 1) ++singletons;
  }
  if (populated < 2 || singletons > 0) {
    std::ostringstream os;
    os << "trial list: need >= 2 classes with >= 2 members each; found " << populated
       << " classes (" << singletons << " with a single member) over " << labels.size() << " rows";
    throw InvalidArgument(os.str());
  }

  std::mt19937_64 rng(seed);
  std::set<std::pair<std::size_t, std::size_t>> used;
  TrialList targets, nontargets;
  const std::size_t n = labels.size();
  for (std::size_t c = 0; c < n_classes; ++c) {
    const auto& mem = members[c];
    if (mem.empty()) continue;
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t i = 0; i < mem.size(); ++i) {
      for (std::size_t j = i + 1; j < mem.size(); ++j) pairs.emplace_back(mem[i], mem[j]);
    }
    std::shuffle(pairs.begin(), pairs.end(), rng);
    const std::size_t want = std::min(max_trials_per_class, pairs.size());
    for (std::size_t p = 0; p < want; ++p) targets.trials.push_back({pairs[p].first, pairs[p].second, true});

    // Cross-class pairs anchored in this class: rejection sampling first,
    // exhaustive enumeration if the space is nearly used up.
    std::uniform_int_distribution<std::size_t> pick_anchor(0, mem.size() - 1);
    std::uniform_int_distribution<std::size_t> pick_row(0, n - 1);
    std::size_t found = 0;
    std::size_t attempts = 0;
    while (found < want && attempts < 64 * want) {
      ++attempts;
      const std::size_t a = mem[pick_anchor(rng)];
      const std::size_t b = pick_row(rng);
      if (labels[b] == c) continue;
      const auto key = std::minmax(a, b);
      if (!used.insert(key).second) continue;
      nontargets.trials.push_back({key.first, key.second, false});
      ++found;
    }
    if (found < want) {
      std::vector<std::pair<std::size_t, std::size_t>> cross;
      for (auto a : mem) {
        for (std::size_t b = 0; b < n; ++b) {
          if (labels[b] != c && !used.count(std::minmax(a, b))) cross.emplace_back(std::minmax(a, b));
        }
      }
      std::shuffle(cross.begin(), cross.end(), rng);
      for (std::size_t p = 0; p < cross.size() && found < want; ++p) {
        used.insert(cross[p]);
        nontargets.trials.push_back({cross[p].first, cross[p].second, false});
        ++found;
      }
    }
  }
  const std::size_t balanced = std::min(targets.trials.size(), nontargets.trials.size());
  TrialList out;
  out.trials.assign(targets.trials.begin(), targets.trials.begin() + static_cast<std::ptrdiff_t>(balanced));
  out.trials.insert(out.trials.end(), nontargets.trials.begin(),
                    nontargets.trials.begin() + static_cast<std::ptrdiff_t>(balanced));
  out.validate(n);
  return out;
}

void write_trial_list(const std::filesystem::path& path, const TrialList& trials,
                      const data::Dataset& dataset) {
  trials.validate(dataset.size());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  for (const auto& t : trials.trials) {
    out << dataset.ids[t.a] << ' ' << dataset.ids[t.b] << ' ' << (t.target ? "target" : "nontarget")
        << '\n';
  }
}

TrialList read_trial_list(const std::filesystem::path& path, const data::Dataset& dataset) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open trial list " + path.string());
  std::unordered_map<std::string, std::size_t> rows;
  for (std::size_t i = 0; i < dataset.size(); ++i) rows.emplace(dataset.ids[i], i);
  TrialList list;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::string a, b, kind, extra;
    if (!(fields >> a)) continue;
    const std::string where = path.string() + ": line " + std::to_string(line_no) + ": ";
    if (!(fields >> b >> kind) || (fields >> extra)) throw InvalidArgument(where + "expected 'id_a id_b target|nontarget'");
    if (kind != "target" && kind != "nontarget") throw InvalidArgument(where + "label must be target or nontarget");
    const auto ia = rows.find(a);
    const auto ib = rows.find(b);
    if (ia == rows.end() || ib == rows.end()) throw InvalidArgument(where + "unknown id");
    list.trials.push_back({ia->second, ib->second, kind == "target"});
  }
  list.validate(dataset.size());
  return list;
}

}  // namespace dvae::metrics
