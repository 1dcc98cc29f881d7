#include "inci/ensemble.hpp"

#include <algorithm>
#include <array>

namespace inci {

IncidentalomaLabel majority_vote(std::span<const IncidentalomaLabel> votes) {
  if (votes.empty()) throw EmptyVotes();
  std::array<std::size_t, kNumLabels> counts{};
  for (const auto v : votes) ++counts[to_int(v)];
  int best = 0;
  for (int k = 1; k < kNumLabels; ++k) {
    if (counts[k] > counts[best]) best = k;
  }
  return label_from_int(best);
}

PredictionSet ensemble(const std::vector<PredictionSet>& sets) {
  if (sets.size() < 2) throw TooFewModels();
  const auto& first = sets.front().labels;
  for (const auto& s : sets) {
    const bool same = s.labels.size() == first.size() &&
                      std::equal(s.labels.begin(), s.labels.end(), first.begin(),
                                 [](const auto& a, const auto& b) { return a.first == b.first; });
    if (!same) throw KeyMismatch("prediction sets '" + sets.front().model_id + "' and '" + s.model_id +
                                 "' cover different lesions");
  }

  std::vector<std::string> ids;
  for (const auto& s : sets) ids.push_back(s.model_id);
  std::sort(ids.begin(), ids.end());
  PredictionSet out;
  out.model_id = "ensemble(";
  for (std::size_t i = 0; i < ids.size(); ++i) out.model_id += (i ? "," : "") + ids[i];
  out.model_id += ")";

  // All maps share keys and ordering, so walk them in lockstep.
  std::vector<LabelTable::const_iterator> its;
  for (const auto& s : sets) its.push_back(s.labels.begin());
  std::vector<IncidentalomaLabel> votes(sets.size());
  for (const auto& [key, unused] : first) {
    for (std::size_t m = 0; m < sets.size(); ++m) votes[m] = (its[m]++)->second;
    out.labels.emplace_hint(out.labels.end(), key, majority_vote(votes));
  }
  return out;
}

}  // namespace inci
