#include "inci/predictions.hpp"

#include <set>
#include <stdexcept>

#include "inci/io.hpp"

namespace inci {

nlohmann::ordered_json to_json(const PredictionRecord& record) {
  nlohmann::ordered_json labels = nlohmann::ordered_json::object();
  for (const auto& [lesion_id, label] : record.lesion_labels) labels[lesion_id] = to_int(label);
  nlohmann::ordered_json warnings = nlohmann::ordered_json::array();
  for (const auto& w : record.warnings) warnings.push_back(to_json(w));

  nlohmann::ordered_json j;
  j["report_id"] = record.report_id;
  j["model_id"] = record.model_id;
  j["lesion_labels"] = std::move(labels);
  j["warnings"] = std::move(warnings);
  if (record.anatomy_vector) {
    nlohmann::ordered_json v = nlohmann::ordered_json::object();
    for (const auto a : kAllAnatomies) v[std::string(to_string(a))] = to_int((*record.anatomy_vector)[a]);
    j["anatomy_vector"] = std::move(v);
  }
  return j;
}

PredictionRecord prediction_record_from_json(const nlohmann::json& j) {
  PredictionRecord r;
  r.report_id = j.at("report_id").get<std::string>();
  r.model_id = j.at("model_id").get<std::string>();
  for (const auto& [lesion_id, v] : j.at("lesion_labels").items()) {
    r.lesion_labels[lesion_id] = label_from_int(v.get<long long>());
  }
  if (j.contains("warnings")) {
    for (const auto& w : j.at("warnings")) r.warnings.push_back(parse_warning_from_json(w));
  }
  if (j.contains("anatomy_vector") && !j.at("anatomy_vector").is_null()) {
    AnatomyVector v;
    for (const auto a : kAllAnatomies) {
      v[a] = label_from_int(j.at("anatomy_vector").at(std::string(to_string(a))).get<long long>());
    }
    r.anatomy_vector = v;
  }
  return r;
}

std::vector<PredictionRecord> load_predictions(const std::filesystem::path& path) {
  std::vector<PredictionRecord> out;
  for (const auto& row : io::read_jsonl(path)) out.push_back(prediction_record_from_json(row));
  return out;
}

void save_predictions(const std::vector<PredictionRecord>& records, const std::filesystem::path& path) {
  std::vector<nlohmann::ordered_json> rows;
  rows.reserve(records.size());
  for (const auto& r : records) rows.push_back(to_json(r));
  io::write_jsonl(path, rows);
}

PredictionSet to_prediction_set(const std::vector<PredictionRecord>& records) {
  PredictionSet set;
  std::set<std::string> seen;
  for (const auto& r : records) {
    if (set.model_id.empty()) set.model_id = r.model_id;
    else if (r.model_id != set.model_id) {
      throw std::invalid_argument("mixed model ids '" + set.model_id + "' and '" + r.model_id + "'");
    }
    if (!seen.insert(r.report_id).second) throw std::invalid_argument("report '" + r.report_id + "' repeated");
    for (const auto& [lesion_id, label] : r.lesion_labels) set.labels[{r.report_id, lesion_id}] = label;
  }
  return set;
}

std::vector<PredictionRecord> to_records(const PredictionSet& set) {
  std::vector<PredictionRecord> out;
  for (const auto& [key, label] : set.labels) {
    if (out.empty() || out.back().report_id != key.first) {
      out.push_back({key.first, set.model_id, {}, {}, std::nullopt});
    }
    out.back().lesion_labels[key.second] = label;
  }
  return out;
}

LabelTable gold_lesion_labels(const std::vector<RadiologyReport>& corpus) {
  LabelTable out;
  for (const auto& r : corpus) {
    for (const auto& l : r.lesions) {
      if (l.gold_label) out[{r.report_id, l.lesion_id}] = *l.gold_label;
    }
  }
  return out;
}

}  // namespace inci
