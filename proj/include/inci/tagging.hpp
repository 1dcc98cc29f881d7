#ifndef INCI_TAGGING_HPP
#define INCI_TAGGING_HPP

#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "inci/corpus.hpp"

namespace inci {

/// A report with every lesion wrapped as <LESIONk>surface</LESIONk>.
/// Tags are numbered from 1 in ascending span_start order.
struct TaggedReport {
  std::string report_id;
  std::string tagged_text;
  std::vector<std::pair<std::string, std::string>> tag_map;  // ("LESION1", lesion_id), in tag order

  /// lesion_id for a tag name, or nullptr.
  const std::string* lesion_for_tag(std::string_view tag) const;
};

class MalformedTag : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UnknownLesion : public std::invalid_argument {
 public:
  explicit UnknownLesion(const std::string& lesion_id)
      : std::invalid_argument("unknown lesion '" + lesion_id + "'") {}
};

std::string tag_name(std::size_t k);

/// Throws OverlappingSpans if lesion spans overlap.
TaggedReport tag_lesions(const RadiologyReport& report);

/// Removes <LESIONk> and </LESIONk> markers. Throws MalformedTag on nesting,
/// unbalanced or mismatched tags.
std::string strip_tags(std::string_view tagged_text);

/// "LESION1=Thyroid; LESION2=Pancreas", in tag order. Empty for no lesions.
std::string anatomy_map_line(const TaggedReport& tagged, const RadiologyReport& report);

/// Up to `radius` characters on each side of the lesion span plus the surface,
/// clipped at the text boundaries.
std::string context_window(const RadiologyReport& report, std::string_view lesion_id, std::size_t radius = 100);

nlohmann::ordered_json to_json(const TaggedReport& tagged, std::string_view anatomy_line);
TaggedReport tagged_report_from_json(const nlohmann::json& j);

}  // namespace inci

#endif  // INCI_TAGGING_HPP
