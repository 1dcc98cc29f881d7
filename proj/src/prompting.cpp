#include "inci/prompting.hpp"

namespace inci {

std::string_view to_string(PromptSetting s) { return s == PromptSetting::Base ? "base" : "with-anatomy"; }

PromptSetting prompt_setting_from_string(std::string_view s) {
  if (s == "base") return PromptSetting::Base;
  if (s == "with-anatomy") return PromptSetting::WithAnatomy;
  throw std::invalid_argument("unknown prompt setting '" + std::string(s) + "'");
}

void validate(const GenerationParams& params) {
  if (!(params.temperature >= 0.0)) throw std::invalid_argument("temperature must be >= 0");
  if (!(params.top_p > 0.0 && params.top_p <= 1.0)) throw std::invalid_argument("top_p must lie in (0, 1]");
  if (params.max_tokens <= 0) throw std::invalid_argument("max_tokens must be positive");
}

PromptBundle build_prompt(const TaggedReport& tagged, std::string_view anatomy_line, PromptSetting setting,
                          const GenerationParams& params, AnatomyPlacement placement) {
  validate(params);
  PromptBundle bundle;
  bundle.system_instruction = std::string(instruction_template());
  bundle.params = params;
  bundle.report_id = tagged.report_id;
  bundle.setting = setting;

  if (setting == PromptSetting::Base) {
    bundle.user_content = tagged.tagged_text;
    return bundle;
  }
  if (anatomy_line.empty() && !tagged.tag_map.empty()) throw MissingAnatomyLine(tagged.report_id);
  if (placement == AnatomyPlacement::BeforeText) {
    bundle.user_content = std::string(anatomy_line) + "\n" + tagged.tagged_text;
  } else {
    bundle.user_content = tagged.tagged_text + "\n" + std::string(anatomy_line);
  }
  return bundle;
}

nlohmann::ordered_json to_json(const GenerationParams& params) {
  nlohmann::ordered_json j;
  j["temperature"] = params.temperature;
  j["top_p"] = params.top_p;
  j["max_tokens"] = params.max_tokens;
  return j;
}

GenerationParams generation_params_from_json(const nlohmann::json& j) {
  GenerationParams p;
  if (j.contains("temperature")) p.temperature = j.at("temperature").get<double>();
  if (j.contains("top_p")) p.top_p = j.at("top_p").get<double>();
  if (j.contains("max_tokens")) p.max_tokens = j.at("max_tokens").get<int>();
  validate(p);
  return p;
}

nlohmann::ordered_json to_json(const PromptBundle& bundle) {
  nlohmann::ordered_json j;
  j["report_id"] = bundle.report_id;
  j["system"] = bundle.system_instruction;
  j["user"] = bundle.user_content;
  j["params"] = to_json(bundle.params);
  j["setting"] = to_string(bundle.setting);
  return j;
}

PromptBundle prompt_bundle_from_json(const nlohmann::json& j) {
  PromptBundle b;
  b.report_id = j.at("report_id").get<std::string>();
  b.system_instruction = j.at("system").get<std::string>();
  b.user_content = j.at("user").get<std::string>();
  b.params = j.contains("params") ? generation_params_from_json(j.at("params")) : GenerationParams{};
  if (j.contains("setting")) b.setting = prompt_setting_from_string(j.at("setting").get<std::string>());
  return b;
}

}  // namespace inci
