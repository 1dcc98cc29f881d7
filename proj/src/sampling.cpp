#include "inci/sampling.hpp"

#include <algorithm>
#include <cctype>

namespace inci {

namespace {

std::string lowercase(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

template <typename Pred>
std::vector<RadiologyReport> keep_if(const std::vector<RadiologyReport>& reports, Pred pred) {
  std::vector<RadiologyReport> out;
  for (const auto& r : reports) {
    if (pred(r)) out.push_back(r);
  }
  return out;
}

bool is_prior_comparison(SizeTrend t) {
  return t == SizeTrend::Increasing || t == SizeTrend::Decreasing || t == SizeTrend::Disappeared ||
         t == SizeTrend::NoChange;
}

}  // namespace

RuleRecommendationDetector::RuleRecommendationDetector()
    : RuleRecommendationDetector({"recommend", "follow-up", "f/u", "advised", "suggest repeat", "per fleischner"}) {}

RuleRecommendationDetector::RuleRecommendationDetector(std::vector<std::string> cues) {
  for (auto& c : cues) cues_.push_back(lowercase(c));
}

bool RuleRecommendationDetector::operator()(const RadiologyReport& report) const {
  const auto text = lowercase(report.text);
  return std::any_of(cues_.begin(), cues_.end(),
                     [&](const std::string& cue) { return text.find(cue) != std::string::npos; });
}

nlohmann::ordered_json to_json(const FilterTrace& trace) {
  nlohmann::ordered_json stages = nlohmann::ordered_json::array();
  for (const auto& s : trace.stages) {
    nlohmann::ordered_json j;
    j["name"] = s.name;
    j["in"] = s.reports_in;
    j["out"] = s.reports_out;
    j["retention"] = s.retention;
    stages.push_back(std::move(j));
  }
  nlohmann::ordered_json out;
  out["stages"] = std::move(stages);
  return out;
}

bool is_target_lesion(const LesionFinding& lesion) {
  return lesion.anatomy != Anatomy::Other &&
         (lesion.assertion == Assertion::Present || lesion.assertion == Assertion::Possible);
}

bool has_target_lesion(const RadiologyReport& report) {
  return std::any_of(report.lesions.begin(), report.lesions.end(), is_target_lesion);
}

bool has_fresh_target_lesion(const RadiologyReport& report) {
  return std::any_of(report.lesions.begin(), report.lesions.end(), [](const LesionFinding& l) {
    return is_target_lesion(l) && !is_prior_comparison(l.size_trend);
  });
}

bool lacks_neoplastic_indication(const RadiologyReport& report) {
  return std::none_of(report.indications.begin(), report.indications.end(), [](const ClinicalIndication& i) {
    return i.indication_type == IndicationType::NeoplasticDiagnosis;
  });
}

bool has_recommendation(const RadiologyReport& report, const RecommendationDetector& detector) {
  if (report.has_recommendation) return *report.has_recommendation;
  return detector(report);
}

std::vector<RadiologyReport> filter1_target_anatomies(const std::vector<RadiologyReport>& reports) {
  return keep_if(reports, has_target_lesion);
}

std::vector<RadiologyReport> filter2_exclude_prior(const std::vector<RadiologyReport>& reports) {
  return keep_if(reports, has_fresh_target_lesion);
}

std::vector<RadiologyReport> filter3_surveillance(const std::vector<RadiologyReport>& reports) {
  return keep_if(reports, lacks_neoplastic_indication);
}

std::vector<RadiologyReport> filter4_recommendation(const std::vector<RadiologyReport>& reports,
                                                    const RecommendationDetector& detector) {
  return keep_if(reports, [&](const RadiologyReport& r) { return has_recommendation(r, detector); });
}

SamplingResult run_pipeline(const std::vector<RadiologyReport>& reports, const RecommendationDetector& detector) {
  SamplingResult result;
  auto record = [&](std::string name, std::size_t in, std::size_t out) {
    const double retention = in == 0 ? 0.0 : static_cast<double>(out) / static_cast<double>(in);
    result.trace.stages.push_back({std::move(name), in, out, retention});
  };

  auto s1 = filter1_target_anatomies(reports);
  record("target_anatomies", reports.size(), s1.size());
  auto s2 = filter2_exclude_prior(s1);
  record("exclude_prior", s1.size(), s2.size());
  auto s3 = filter3_surveillance(s2);
  record("surveillance", s2.size(), s3.size());
  auto s4 = filter4_recommendation(s3, detector);
  record("recommendation", s3.size(), s4.size());

  result.reports = std::move(s4);
  return result;
}

}  // namespace inci
