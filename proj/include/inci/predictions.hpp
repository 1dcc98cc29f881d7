#ifndef INCI_PREDICTIONS_HPP
#define INCI_PREDICTIONS_HPP

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "inci/corpus.hpp"
#include "inci/parsing.hpp"

namespace inci {

/// (report_id, lesion_id), or (report_id, anatomy) for anatomy-level items.
using ItemKey = std::pair<std::string, std::string>;
using LabelTable = std::map<ItemKey, IncidentalomaLabel>;

/// One model's lesion-level labels for a corpus.
struct PredictionSet {
  std::string model_id;
  LabelTable labels;
};

/// One row of a predictions file.
struct PredictionRecord {
  std::string report_id;
  std::string model_id;
  std::map<std::string, IncidentalomaLabel> lesion_labels;
  std::vector<ParseWarning> warnings;
  std::optional<AnatomyVector> anatomy_vector;
};

nlohmann::ordered_json to_json(const PredictionRecord& record);
PredictionRecord prediction_record_from_json(const nlohmann::json& j);

std::vector<PredictionRecord> load_predictions(const std::filesystem::path& path);
void save_predictions(const std::vector<PredictionRecord>& records, const std::filesystem::path& path);

/// Flattens records into a PredictionSet. Throws std::invalid_argument when
/// records disagree on model_id or repeat a report.
PredictionSet to_prediction_set(const std::vector<PredictionRecord>& records);
std::vector<PredictionRecord> to_records(const PredictionSet& set);

/// Gold labels of every lesion that has one. Lesions without gold are left out.
LabelTable gold_lesion_labels(const std::vector<RadiologyReport>& corpus);

}  // namespace inci

#endif  // INCI_PREDICTIONS_HPP
