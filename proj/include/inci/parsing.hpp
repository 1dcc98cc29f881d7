#ifndef INCI_PARSING_HPP
#define INCI_PARSING_HPP

#include <array>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "inci/corpus.hpp"
#include "inci/llm_client.hpp"
#include "inci/tagging.hpp"

namespace inci {

// Orders "LESION2" before "LESION10".
struct TagNameLess {
  bool operator()(const std::string& a, const std::string& b) const {
    return a.size() != b.size() ? a.size() < b.size() : a < b;
  }
};

/// One entry per anatomy in canonical order: tag name -> label (1 or 2).
using AnatomyBlocks = std::array<std::map<std::string, IncidentalomaLabel, TagNameLess>, kNumAnatomies>;

enum class WarningKind {
  MissingAnatomyKey,
  UnknownAnatomyKey,
  MalformedBlock,
  UnknownTag,
  InvalidLabel,
  DuplicateMention,
  AnatomyMismatch,
};

std::string_view to_string(WarningKind k);

struct ParseWarning {
  WarningKind kind;
  std::string detail;

  bool operator==(const ParseWarning&) const = default;
};

struct ModelOutput {
  std::string report_id;
  AnatomyBlocks anatomy_blocks;
  std::optional<std::string> reasoning;
  std::vector<ParseWarning> diagnostics;
};

struct LesionLabelMap {
  std::map<std::string, IncidentalomaLabel> labels;  // lesion_id -> label, total over the report
  std::vector<ParseWarning> warnings;
};

class ParseFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NoJsonFound : public ParseFailure {
 public:
  NoJsonFound() : ParseFailure("no JSON object found in model output") {}
};

class UnbalancedBraces : public ParseFailure {
 public:
  UnbalancedBraces() : ParseFailure("unbalanced braces in model output") {}
};

class MalformedJson : public ParseFailure {
 public:
  using ParseFailure::ParseFailure;
};

/// "Lung Inci", ..., "Other Inci".
std::string anatomy_key(Anatomy a);

struct ExtractedJson {
  nlohmann::json object;
  std::string remainder;  // trailing text, whitespace-trimmed
};

/// Finds the first balanced top-level {...} block. Single-quoted strings are
/// rewritten as double-quoted JSON strings before parsing.
ExtractedJson extract_json(std::string_view text);

/// Validates anatomy keys, tag names and label values; problems become
/// warnings and the offending entries are dropped. Throws ParseFailure only
/// when no JSON object can be extracted.
ModelOutput parse_output(const RawCompletion& raw, const TaggedReport& tagged);

/// Every tagged lesion gets a label: mentioned lesions take their value,
/// the rest take 0. A lesion listed under several anatomy blocks takes the
/// maximum and records DuplicateMention.
LesionLabelMap to_lesion_labels(const ModelOutput& output, const TaggedReport& tagged);

/// AnatomyMismatch warnings for lesions the model placed under a different
/// anatomy than the verified one. Labels still follow the tag.
std::vector<ParseWarning> check_anatomy_placement(const ModelOutput& output, const TaggedReport& tagged,
                                                  const RadiologyReport& report);

/// Serializes blocks in the instruction's example-output shape followed by
/// the reasoning text.
std::string format_model_output(const AnatomyBlocks& blocks, std::string_view reasoning);

nlohmann::ordered_json to_json(const ParseWarning& w);
ParseWarning parse_warning_from_json(const nlohmann::json& j);

}  // namespace inci

#endif  // INCI_PARSING_HPP
