#include "inci/corpus.hpp"

#include <algorithm>
#include <set>
#include <unordered_set>

#include "inci/io.hpp"
#include "inci/utf8.hpp"

namespace inci {

namespace {

using json = nlohmann::ordered_json;

constexpr std::array<std::string_view, kNumAnatomies> kAnatomyWire = {
    "lung", "liver", "kidney", "adrenal", "pancreas", "thyroid", "other"};
constexpr std::array<std::string_view, kNumAnatomies> kAnatomyDisplay = {
    "Lung", "Liver", "Kidney", "Adrenal", "Pancreas", "Thyroid", "Other"};
constexpr std::array<std::string_view, 6> kTrendWire = {
    "absent", "increasing", "decreasing", "no_change", "disappeared", "new"};
constexpr std::array<std::string_view, 3> kAssertionWire = {"present", "possible", "absent"};
constexpr std::array<std::string_view, 4> kIndicationWire = {
    "neoplastic_diagnosis", "non_neoplastic_diagnosis", "symptom", "trauma"};

template <typename Enum, std::size_t N>
Enum enum_from(const std::array<std::string_view, N>& names, std::string_view s,
               const char* field) {
  const auto it = std::find(names.begin(), names.end(), s);
  if (it == names.end()) throw UnknownEnumValue(field, std::string(s));
  return static_cast<Enum>(it - names.begin());
}

const json& require(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) {
    throw CorpusError(std::string("missing field '") + key + "'");
  }
  return j.at(key);
}

std::string require_string(const json& j, const char* key) {
  const auto& v = require(j, key);
  if (!v.is_string()) throw CorpusError(std::string("field '") + key + "' must be a string");
  return v.get<std::string>();
}

std::size_t require_offset(const json& j, const char* key) {
  const auto& v = require(j, key);
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    throw CorpusError(std::string("field '") + key + "' must be a non-negative integer");
  }
  return v.get<std::size_t>();
}

LesionFinding lesion_from_json(const json& j) {
  LesionFinding l;
  l.lesion_id = require_string(j, "lesion_id");
  l.span_start = require_offset(j, "span_start");
  l.span_end = require_offset(j, "span_end");
  l.surface = require_string(j, "surface");
  l.anatomy = anatomy_from_string(require_string(j, "anatomy"));
  l.assertion = assertion_from_string(require_string(j, "assertion"));
  l.size_trend = size_trend_from_string(require_string(j, "size_trend"));
  if (j.contains("gold_label") && !j.at("gold_label").is_null()) {
    const auto& g = j.at("gold_label");
    if (!g.is_number_integer()) throw CorpusError("field 'gold_label' must be 0, 1, 2 or null");
    try {
      l.gold_label = label_from_int(g.get<long long>());
    } catch (const std::invalid_argument&) {
      throw UnknownEnumValue("gold_label", g.dump());
    }
  }
  return l;
}

ClinicalIndication indication_from_json(const json& j) {
  ClinicalIndication ind;
  ind.text = require_string(j, "text");
  if (ind.text.empty()) throw CorpusError("indication text must be non-empty");
  ind.indication_type = indication_type_from_string(require_string(j, "indication_type"));
  if (j.contains("anatomy") && !j.at("anatomy").is_null()) {
    ind.anatomy = anatomy_from_string(require_string(j, "anatomy"));
  }
  return ind;
}

}  // namespace

IncidentalomaLabel label_from_int(long long v) {
  if (v < 0 || v > 2) throw std::invalid_argument("label must be 0, 1 or 2, got " + std::to_string(v));
  return static_cast<IncidentalomaLabel>(v);
}

std::string_view to_string(Anatomy a) { return kAnatomyWire[static_cast<std::size_t>(a)]; }
std::string_view display_name(Anatomy a) { return kAnatomyDisplay[static_cast<std::size_t>(a)]; }
std::string_view to_string(SizeTrend t) { return kTrendWire[static_cast<std::size_t>(t)]; }
std::string_view to_string(Assertion a) { return kAssertionWire[static_cast<std::size_t>(a)]; }
std::string_view to_string(IndicationType t) { return kIndicationWire[static_cast<std::size_t>(t)]; }

Anatomy anatomy_from_string(std::string_view s) { return enum_from<Anatomy>(kAnatomyWire, s, "anatomy"); }
SizeTrend size_trend_from_string(std::string_view s) {
  return enum_from<SizeTrend>(kTrendWire, s, "size_trend");
}
Assertion assertion_from_string(std::string_view s) {
  return enum_from<Assertion>(kAssertionWire, s, "assertion");
}
IndicationType indication_type_from_string(std::string_view s) {
  return enum_from<IndicationType>(kIndicationWire, s, "indication_type");
}

const LesionFinding* RadiologyReport::find_lesion(std::string_view lesion_id) const {
  for (const auto& l : lesions) {
    if (l.lesion_id == lesion_id) return &l;
  }
  return nullptr;
}

IncidentalomaLabel document_label(const AnatomyVector& v) {
  return *std::max_element(v.labels.begin(), v.labels.end());
}

MalformedRecord::MalformedRecord(std::size_t line, const std::string& reason)
    : CorpusError("malformed record at line " + std::to_string(line) + ": " + reason), line_(line) {}

OverlappingSpans::OverlappingSpans(const std::string& report_id)
    : CorpusError("overlapping lesion spans in report '" + report_id + "'"), report_id_(report_id) {}

DuplicateLesionId::DuplicateLesionId(const std::string& report_id, const std::string& lesion_id)
    : CorpusError("duplicate lesion_id '" + lesion_id + "' in report '" + report_id + "'") {}

UnknownEnumValue::UnknownEnumValue(const std::string& field, const std::string& value)
    : CorpusError("unknown value '" + value + "' for field '" + field + "'"), field_(field), value_(value) {}

UnknownEnumValue::UnknownEnumValue(const std::string& field, const std::string& value, std::size_t line)
    : CorpusError("line " + std::to_string(line) + ": unknown value '" + value + "' for field '" + field + "'"),
      field_(field),
      value_(value) {}

void validate_report(const RadiologyReport& report) {
  if (report.report_id.empty()) throw CorpusError("report_id must be non-empty");
  if (!utf8::is_valid(report.text)) throw CorpusError("report text is not valid UTF-8");
  const auto text_len = utf8::length(report.text);

  std::unordered_set<std::string> ids;
  for (const auto& l : report.lesions) {
    if (!ids.insert(l.lesion_id).second) throw DuplicateLesionId(report.report_id, l.lesion_id);
    if (l.span_end <= l.span_start) {
      throw CorpusError("lesion '" + l.lesion_id + "': span_end must exceed span_start");
    }
    if (l.span_end > text_len) {
      throw CorpusError("lesion '" + l.lesion_id + "': span_end " + std::to_string(l.span_end) +
                        " exceeds text length " + std::to_string(text_len));
    }
    if (utf8::slice(report.text, l.span_start, l.span_end) != l.surface) {
      throw CorpusError("lesion '" + l.lesion_id + "': surface does not match text at span");
    }
  }

  std::vector<std::pair<std::size_t, std::size_t>> spans;
  spans.reserve(report.lesions.size());
  for (const auto& l : report.lesions) spans.emplace_back(l.span_start, l.span_end);
  std::sort(spans.begin(), spans.end());
  for (std::size_t i = 1; i < spans.size(); ++i) {
    if (spans[i].first < spans[i - 1].second) throw OverlappingSpans(report.report_id);
  }
}

json to_json(const RadiologyReport& report) {
  json lesions = json::array();
  for (const auto& l : report.lesions) {
    json jl;
    jl["lesion_id"] = l.lesion_id;
    jl["span_start"] = l.span_start;
    jl["span_end"] = l.span_end;
    jl["surface"] = l.surface;
    jl["anatomy"] = to_string(l.anatomy);
    jl["assertion"] = to_string(l.assertion);
    jl["size_trend"] = to_string(l.size_trend);
    jl["gold_label"] = l.gold_label ? json(to_int(*l.gold_label)) : json(nullptr);
    lesions.push_back(std::move(jl));
  }
  json indications = json::array();
  for (const auto& ind : report.indications) {
    json ji;
    ji["text"] = ind.text;
    ji["indication_type"] = to_string(ind.indication_type);
    ji["anatomy"] = ind.anatomy ? json(to_string(*ind.anatomy)) : json(nullptr);
    indications.push_back(std::move(ji));
  }
  json j;
  j["report_id"] = report.report_id;
  j["text"] = report.text;
  j["lesions"] = std::move(lesions);
  j["indications"] = std::move(indications);
  j["has_recommendation"] = report.has_recommendation ? json(*report.has_recommendation) : json(nullptr);
  return j;
}

RadiologyReport report_from_json(const json& j) {
  if (!j.is_object()) throw CorpusError("record must be a JSON object");
  RadiologyReport r;
  r.report_id = require_string(j, "report_id");
  r.text = require_string(j, "text");
  const auto& lesions = require(j, "lesions");
  if (!lesions.is_array()) throw CorpusError("field 'lesions' must be an array");
  for (const auto& jl : lesions) r.lesions.push_back(lesion_from_json(jl));
  if (j.contains("indications")) {
    const auto& inds = j.at("indications");
    if (!inds.is_array()) throw CorpusError("field 'indications' must be an array");
    for (const auto& ji : inds) r.indications.push_back(indication_from_json(ji));
  }
  if (j.contains("has_recommendation") && !j.at("has_recommendation").is_null()) {
    if (!j.at("has_recommendation").is_boolean()) {
      throw CorpusError("field 'has_recommendation' must be a boolean or null");
    }
    r.has_recommendation = j.at("has_recommendation").get<bool>();
  }
  validate_report(r);
  return r;
}

std::vector<RadiologyReport> parse_corpus(std::string_view jsonl) {
  std::vector<RadiologyReport> reports;
  std::set<std::string> seen;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < jsonl.size()) {
    auto nl = jsonl.find('\n', pos);
    if (nl == std::string_view::npos) nl = jsonl.size();
    const auto line = jsonl.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;

    json j;
    try {
      j = json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw MalformedRecord(line_no, e.what());
    }
    RadiologyReport r;
    try {
      r = report_from_json(j);
    } catch (const OverlappingSpans&) {
      throw;
    } catch (const DuplicateLesionId&) {
      throw;
    } catch (const UnknownEnumValue& e) {
      throw UnknownEnumValue(e.field(), e.value(), line_no);
    } catch (const CorpusError& e) {
      throw MalformedRecord(line_no, e.what());
    } catch (const std::exception& e) {
      throw MalformedRecord(line_no, e.what());
    }
    if (!seen.insert(r.report_id).second) {
      throw MalformedRecord(line_no, "duplicate report_id '" + r.report_id + "'");
    }
    reports.push_back(std::move(r));
  }
  return reports;
}

std::vector<RadiologyReport> load_corpus(const std::filesystem::path& path) {
  return parse_corpus(io::read_file(path));
}

std::string serialize_corpus(const std::vector<RadiologyReport>& reports) {
  std::string out;
  for (const auto& r : reports) {
    out += to_json(r).dump();
    out += '\n';
  }
  return out;
}

void save_corpus(const std::vector<RadiologyReport>& reports, const std::filesystem::path& path) {
  io::write_file(path, serialize_corpus(reports));
}

}  // namespace inci
