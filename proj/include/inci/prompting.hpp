#ifndef INCI_PROMPTING_HPP
#define INCI_PROMPTING_HPP

#include <stdexcept>
#include <string>
#include <string_view>

#include <json.hpp>

#include "inci/tagging.hpp"

namespace inci {

enum class PromptSetting { Base, WithAnatomy };

std::string_view to_string(PromptSetting s);
PromptSetting prompt_setting_from_string(std::string_view s);  // "base" | "with-anatomy"

/// Where the anatomy mapping line goes relative to the tagged report.
enum class AnatomyPlacement { BeforeText, AfterText };

struct GenerationParams {
  double temperature = 0.0;
  double top_p = 1.0;
  int max_tokens = 1024;
};

void validate(const GenerationParams& params);

struct PromptBundle {
  std::string system_instruction;
  std::string user_content;
  GenerationParams params;
  std::string report_id;
  PromptSetting setting = PromptSetting::Base;
};

class MissingAnatomyLine : public std::invalid_argument {
 public:
  explicit MissingAnatomyLine(const std::string& report_id)
      : std::invalid_argument("with-anatomy prompt for report '" + report_id + "' needs an anatomy line") {}
};

/// The instruction text, embedded byte-for-byte from
/// resources/incidentaloma_prompt_v1.txt at build time.
std::string_view instruction_template();
std::string_view instruction_template_version();

/// Base: user content is the tagged text. WithAnatomy: the anatomy line and
/// the tagged text joined by a newline (line first by default).
PromptBundle build_prompt(const TaggedReport& tagged, std::string_view anatomy_line, PromptSetting setting,
                          const GenerationParams& params = {},
                          AnatomyPlacement placement = AnatomyPlacement::BeforeText);

nlohmann::ordered_json to_json(const GenerationParams& params);
GenerationParams generation_params_from_json(const nlohmann::json& j);

/// {"report_id","system","user","params"} plus "setting".
nlohmann::ordered_json to_json(const PromptBundle& bundle);
PromptBundle prompt_bundle_from_json(const nlohmann::json& j);

}  // namespace inci

#endif  // INCI_PROMPTING_HPP
