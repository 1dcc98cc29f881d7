#ifndef INCI_CORPUS_HPP
#define INCI_CORPUS_HPP

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace inci {

// 0 = no incidentaloma, 1 = incidentaloma, no risk, 2 = incidentaloma,
// follow-up required. The ordering is meaningful (severity, tie-breaks).
enum class IncidentalomaLabel : std::uint8_t { None = 0, NoRisk = 1, FollowUp = 2 };

inline constexpr int kNumLabels = 3;

constexpr int to_int(IncidentalomaLabel l) { return static_cast<int>(l); }

/// Throws std::invalid_argument unless v is 0, 1 or 2.
IncidentalomaLabel label_from_int(long long v);

enum class Anatomy : std::uint8_t { Lung, Liver, Kidney, Adrenal, Pancreas, Thyroid, Other };

inline constexpr std::size_t kNumAnatomies = 7;
inline constexpr std::array<Anatomy, kNumAnatomies> kAllAnatomies = {
    Anatomy::Lung,     Anatomy::Liver,   Anatomy::Kidney, Anatomy::Adrenal,
    Anatomy::Pancreas, Anatomy::Thyroid, Anatomy::Other};

enum class SizeTrend : std::uint8_t { Absent, Increasing, Decreasing, NoChange, Disappeared, New };

enum class Assertion : std::uint8_t { Present, Possible, Absent };

enum class IndicationType : std::uint8_t {
  NeoplasticDiagnosis,
  NonNeoplasticDiagnosis,
  Symptom,
  Trauma
};

// Wire names (lowercase snake_case) and display names.
std::string_view to_string(Anatomy a);
std::string_view display_name(Anatomy a);  // "Lung", "Liver", ...
std::string_view to_string(SizeTrend t);
std::string_view to_string(Assertion a);
std::string_view to_string(IndicationType t);

Anatomy anatomy_from_string(std::string_view s);
SizeTrend size_trend_from_string(std::string_view s);
Assertion assertion_from_string(std::string_view s);
IndicationType indication_type_from_string(std::string_view s);

struct LesionFinding {
  std::string lesion_id;
  std::size_t span_start = 0;  // scalar-value offsets into the report text
  std::size_t span_end = 0;
  std::string surface;
  Anatomy anatomy = Anatomy::Other;
  Assertion assertion = Assertion::Present;
  SizeTrend size_trend = SizeTrend::Absent;
  std::optional<IncidentalomaLabel> gold_label;

  bool operator==(const LesionFinding&) const = default;
};

struct ClinicalIndication {
  std::string text;
  IndicationType indication_type = IndicationType::Symptom;
  std::optional<Anatomy> anatomy;

  bool operator==(const ClinicalIndication&) const = default;
};

struct RadiologyReport {
  std::string report_id;
  std::string text;
  std::vector<LesionFinding> lesions;
  std::vector<ClinicalIndication> indications;
  std::optional<bool> has_recommendation;

  const LesionFinding* find_lesion(std::string_view lesion_id) const;

  bool operator==(const RadiologyReport&) const = default;
};

/// The per-report vector of seven anatomy labels, in canonical anatomy order.
struct AnatomyVector {
  std::array<IncidentalomaLabel, kNumAnatomies> labels{};

  IncidentalomaLabel& operator[](Anatomy a) { return labels[static_cast<std::size_t>(a)]; }
  IncidentalomaLabel operator[](Anatomy a) const { return labels[static_cast<std::size_t>(a)]; }

  bool operator==(const AnatomyVector&) const = default;
};

/// Document-level label: the maximum over the seven anatomy labels.
IncidentalomaLabel document_label(const AnatomyVector& v);

// Errors raised while loading or validating a corpus.
class CorpusError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MalformedRecord : public CorpusError {
 public:
  MalformedRecord(std::size_t line, const std::string& reason);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class OverlappingSpans : public CorpusError {
 public:
  explicit OverlappingSpans(const std::string& report_id);
  const std::string& report_id() const { return report_id_; }

 private:
  std::string report_id_;
};

class DuplicateLesionId : public CorpusError {
 public:
  DuplicateLesionId(const std::string& report_id, const std::string& lesion_id);
};

class UnknownEnumValue : public CorpusError {
 public:
  UnknownEnumValue(const std::string& field, const std::string& value);
  UnknownEnumValue(const std::string& field, const std::string& value, std::size_t line);
  const std::string& field() const { return field_; }
  const std::string& value() const { return value_; }

 private:
  std::string field_;
  std::string value_;
};

class IoFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Checks every report invariant: span bounds and surface match, lesion-id
/// uniqueness, span non-overlap. Throws the matching CorpusError.
void validate_report(const RadiologyReport& report);

nlohmann::ordered_json to_json(const RadiologyReport& report);
RadiologyReport report_from_json(const nlohmann::ordered_json& j);

/// One JSON object per line. Rejects the whole file on any violation.
std::vector<RadiologyReport> load_corpus(const std::filesystem::path& path);
std::vector<RadiologyReport> parse_corpus(std::string_view jsonl);

void save_corpus(const std::vector<RadiologyReport>& reports, const std::filesystem::path& path);
std::string serialize_corpus(const std::vector<RadiologyReport>& reports);

}  // namespace inci

#endif  // INCI_CORPUS_HPP
