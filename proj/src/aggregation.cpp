#include "inci/aggregation.hpp"

#include <algorithm>
#include <unordered_map>

namespace inci {

IncidentalomaLabel aggregate_anatomy(std::span<const IncidentalomaLabel> labels) {
  auto out = IncidentalomaLabel::None;
  for (const auto l : labels) out = std::max(out, l);
  return out;
}

AnatomyVector build_report_vector(std::span<const LesionPrediction> preds) {
  AnatomyVector v;
  if (preds.empty()) return v;
  std::array<std::vector<IncidentalomaLabel>, kNumAnatomies> by_anatomy;
  for (const auto& p : preds) {
    if (p.report_id != preds.front().report_id) {
      throw MixedReportIds("predictions span reports '" + preds.front().report_id + "' and '" + p.report_id + "'");
    }
    if (p.model_id != preds.front().model_id) {
      throw MixedReportIds("predictions span models '" + preds.front().model_id + "' and '" + p.model_id + "'");
    }
    by_anatomy[static_cast<std::size_t>(p.anatomy)].push_back(p.label);
  }
  for (const auto a : kAllAnatomies) v[a] = aggregate_anatomy(by_anatomy[static_cast<std::size_t>(a)]);
  return v;
}

std::vector<LesionPrediction> lesion_predictions(const PredictionRecord& record, const RadiologyReport& report) {
  std::vector<LesionPrediction> out;
  out.reserve(record.lesion_labels.size());
  for (const auto& [lesion_id, label] : record.lesion_labels) {
    const auto* lesion = report.find_lesion(lesion_id);
    if (lesion == nullptr) {
      throw std::invalid_argument("report '" + report.report_id + "' has no lesion '" + lesion_id + "'");
    }
    out.push_back({record.report_id, lesion_id, lesion->anatomy, label, record.model_id});
  }
  return out;
}

void attach_anatomy_vectors(std::vector<PredictionRecord>& records, const std::vector<RadiologyReport>& corpus) {
  std::unordered_map<std::string, const RadiologyReport*> index;
  for (const auto& r : corpus) index.emplace(r.report_id, &r);
  for (auto& rec : records) {
    const auto it = index.find(rec.report_id);
    if (it == index.end()) throw std::invalid_argument("report '" + rec.report_id + "' not in corpus");
    rec.anatomy_vector = build_report_vector(lesion_predictions(rec, *it->second));
  }
}

}  // namespace inci
