#ifndef INCI_SAMPLING_HPP
#define INCI_SAMPLING_HPP

#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "inci/corpus.hpp"

namespace inci {

/// Decides whether a report contains a follow-up recommendation sentence.
using RecommendationDetector = std::function<bool(const RadiologyReport&)>;

/// Case-insensitive cue matcher over the report text.
class RuleRecommendationDetector {
 public:
  RuleRecommendationDetector();
  explicit RuleRecommendationDetector(std::vector<std::string> cues);

  bool operator()(const RadiologyReport& report) const;
  const std::vector<std::string>& cues() const { return cues_; }

 private:
  std::vector<std::string> cues_;  // lowercase
};

struct StageCount {
  std::string name;
  std::size_t reports_in = 0;
  std::size_t reports_out = 0;
  double retention = 0.0;  // reports_out / reports_in, 0 when reports_in == 0
};

struct FilterTrace {
  std::vector<StageCount> stages;
};

nlohmann::ordered_json to_json(const FilterTrace& trace);

// Per-report stage predicates. Each filter below keeps exactly the reports
// whose predicate holds.

/// A lesion qualifies when it sits in one of the six target organs and is
/// asserted present or possible.
bool is_target_lesion(const LesionFinding& lesion);
bool has_target_lesion(const RadiologyReport& report);
/// True when at least one qualifying lesion carries no prior-comparison trend
/// (trend New or Absent).
bool has_fresh_target_lesion(const RadiologyReport& report);
bool lacks_neoplastic_indication(const RadiologyReport& report);
/// A cached has_recommendation takes precedence over the detector.
bool has_recommendation(const RadiologyReport& report, const RecommendationDetector& detector);

std::vector<RadiologyReport> filter1_target_anatomies(const std::vector<RadiologyReport>& reports);
std::vector<RadiologyReport> filter2_exclude_prior(const std::vector<RadiologyReport>& reports);
std::vector<RadiologyReport> filter3_surveillance(const std::vector<RadiologyReport>& reports);
std::vector<RadiologyReport> filter4_recommendation(const std::vector<RadiologyReport>& reports,
                                                    const RecommendationDetector& detector);

struct SamplingResult {
  std::vector<RadiologyReport> reports;
  FilterTrace trace;
};

/// Applies the four filters in order, recording per-stage counts.
SamplingResult run_pipeline(const std::vector<RadiologyReport>& reports,
                            const RecommendationDetector& detector = RuleRecommendationDetector{});

}  // namespace inci

#endif  // INCI_SAMPLING_HPP
