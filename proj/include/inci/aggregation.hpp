#ifndef INCI_AGGREGATION_HPP
#define INCI_AGGREGATION_HPP

#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "inci/corpus.hpp"
#include "inci/predictions.hpp"

namespace inci {

struct LesionPrediction {
  std::string report_id;
  std::string lesion_id;
  Anatomy anatomy = Anatomy::Other;
  IncidentalomaLabel label = IncidentalomaLabel::None;
  std::string model_id;
};

class MixedReportIds : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Severity precedence: the maximum label, 0 for no lesions.
IncidentalomaLabel aggregate_anatomy(std::span<const IncidentalomaLabel> labels);

/// Per-anatomy maximum over one report's lesion predictions. Anatomies without
/// lesions are 0. Throws MixedReportIds unless all predictions share report_id
/// and model_id.
AnatomyVector build_report_vector(std::span<const LesionPrediction> preds);

/// Joins a report's lesion labels with the verified anatomy of each lesion.
/// Throws std::invalid_argument for labels naming unknown lesions.
std::vector<LesionPrediction> lesion_predictions(const PredictionRecord& record, const RadiologyReport& report);

/// Fills record.anatomy_vector for every record; reports are looked up by id.
void attach_anatomy_vectors(std::vector<PredictionRecord>& records, const std::vector<RadiologyReport>& corpus);

}  // namespace inci

#endif  // INCI_AGGREGATION_HPP
