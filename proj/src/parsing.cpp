#include "inci/parsing.hpp"

#include <algorithm>
#include <cctype>

namespace inci {

namespace {

constexpr std::array<std::string_view, 7> kWarningNames = {
    "missing_anatomy_key", "unknown_anatomy_key", "malformed_block", "unknown_tag",
    "invalid_label",       "duplicate_mention",   "anatomy_mismatch"};

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

// Returns the one-past-the-end index of the balanced block starting at
// text[open] == '{', honouring both quote styles.
std::size_t find_block_end(std::string_view text, std::size_t open) {
  int depth = 0;
  char quote = 0;
  for (std::size_t i = open; i < text.size(); ++i) {
    const char c = text[i];
    if (quote != 0) {
      if (c == '\\') ++i;
      else if (c == quote) quote = 0;
      continue;
    }
    if (c == '"' || c == '\'') quote = c;
    else if (c == '{') ++depth;
    else if (c == '}' && --depth == 0) return i + 1;
  }
  throw UnbalancedBraces();
}

// Rewrites 'single-quoted' strings as "double-quoted" JSON strings.
std::string normalize_quotes(std::string_view block) {
  std::string out;
  out.reserve(block.size());
  for (std::size_t i = 0; i < block.size(); ++i) {
    const char c = block[i];
    if (c == '"') {
      // Copy a double-quoted string verbatim.
      out += c;
      for (++i; i < block.size(); ++i) {
        out += block[i];
        if (block[i] == '\\' && i + 1 < block.size()) out += block[++i];
        else if (block[i] == '"') break;
      }
    } else if (c == '\'') {
      out += '"';
      for (++i; i < block.size() && block[i] != '\''; ++i) {
        if (block[i] == '\\' && i + 1 < block.size()) {
          const char next = block[++i];
          if (next == '\'') out += '\'';
          else {
            out += '\\';
            out += next;
          }
        } else if (block[i] == '"') {
          out += "\\\"";
        } else {
          out += block[i];
        }
      }
      out += '"';
    } else {
      out += c;
    }
  }
  return out;
}

std::optional<Anatomy> anatomy_from_key(std::string_view key) {
  std::string k;
  for (const char c : key) {
    if (std::isalpha(static_cast<unsigned char>(c))) k += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    else if (!k.empty() && k.back() != ' ') k += ' ';
  }
  k = trim(k);
  if (k.size() > 5 && k.ends_with(" inci")) k.resize(k.size() - 5);
  if (k == "others") k = "other";
  for (const auto a : kAllAnatomies) {
    if (k == to_string(a)) return a;
  }
  return std::nullopt;
}

std::string normalize_tag(std::string_view tag) {
  auto t = trim(tag);
  std::transform(t.begin(), t.end(), t.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  return t;
}

std::optional<IncidentalomaLabel> positive_label(const nlohmann::json& v) {
  if (!v.is_number_integer()) return std::nullopt;
  const auto n = v.get<long long>();
  if (n == 1) return IncidentalomaLabel::NoRisk;
  if (n == 2) return IncidentalomaLabel::FollowUp;
  return std::nullopt;
}

}  // namespace

std::string_view to_string(WarningKind k) { return kWarningNames[static_cast<std::size_t>(k)]; }

std::string anatomy_key(Anatomy a) { return std::string(display_name(a)) + " Inci"; }

ExtractedJson extract_json(std::string_view text) {
  const auto open = text.find('{');
  if (open == std::string_view::npos) throw NoJsonFound();
  const auto end = find_block_end(text, open);
  ExtractedJson out;
  try {
    out.object = nlohmann::json::parse(normalize_quotes(text.substr(open, end - open)));
  } catch (const nlohmann::json::parse_error& e) {
    throw MalformedJson(std::string("model output JSON does not parse: ") + e.what());
  }
  out.remainder = trim(text.substr(end));
  return out;
}

ModelOutput parse_output(const RawCompletion& raw, const TaggedReport& tagged) {
  const auto extracted = extract_json(raw.text);
  ModelOutput out;
  out.report_id = raw.report_id;
  if (!extracted.remainder.empty()) out.reasoning = extracted.remainder;

  std::array<bool, kNumAnatomies> seen{};
  // nlohmann::json sorts keys; iterate in that order for stable diagnostics.
  for (const auto& [key, block] : extracted.object.items()) {
    const auto anatomy = anatomy_from_key(key);
    if (!anatomy) {
      out.diagnostics.push_back({WarningKind::UnknownAnatomyKey, key});
      continue;
    }
    const auto idx = static_cast<std::size_t>(*anatomy);
    seen[idx] = true;
    if (!block.is_object()) {
      out.diagnostics.push_back({WarningKind::MalformedBlock, key});
      continue;
    }
    for (const auto& [raw_tag, value] : block.items()) {
      const auto tag = normalize_tag(raw_tag);
      if (tagged.lesion_for_tag(tag) == nullptr) {
        out.diagnostics.push_back({WarningKind::UnknownTag, key + "/" + raw_tag});
        continue;
      }
      const auto label = positive_label(value);
      if (!label) {
        out.diagnostics.push_back({WarningKind::InvalidLabel, key + "/" + raw_tag + "=" + value.dump()});
        continue;
      }
      auto& slot = out.anatomy_blocks[idx][tag];
      slot = std::max(slot, *label);
    }
  }
  for (const auto a : kAllAnatomies) {
    if (!seen[static_cast<std::size_t>(a)]) out.diagnostics.push_back({WarningKind::MissingAnatomyKey, anatomy_key(a)});
  }
  return out;
}

LesionLabelMap to_lesion_labels(const ModelOutput& output, const TaggedReport& tagged) {
  LesionLabelMap out;
  for (const auto& [tag, lesion_id] : tagged.tag_map) out.labels[lesion_id] = IncidentalomaLabel::None;

  std::map<std::string, int, TagNameLess> mentions;
  for (const auto a : kAllAnatomies) {
    for (const auto& [tag, label] : output.anatomy_blocks[static_cast<std::size_t>(a)]) {
      const auto* lesion_id = tagged.lesion_for_tag(tag);
      if (lesion_id == nullptr) continue;
      auto& slot = out.labels[*lesion_id];
      slot = std::max(slot, label);
      ++mentions[tag];
    }
  }
  for (const auto& [tag, count] : mentions) {
    if (count > 1) out.warnings.push_back({WarningKind::DuplicateMention, tag});
  }
  return out;
}

std::vector<ParseWarning> check_anatomy_placement(const ModelOutput& output, const TaggedReport& tagged,
                                                  const RadiologyReport& report) {
  std::vector<ParseWarning> warnings;
  for (const auto a : kAllAnatomies) {
    for (const auto& [tag, label] : output.anatomy_blocks[static_cast<std::size_t>(a)]) {
      const auto* lesion_id = tagged.lesion_for_tag(tag);
      if (lesion_id == nullptr) continue;
      const auto* lesion = report.find_lesion(*lesion_id);
      if (lesion != nullptr && lesion->anatomy != a) {
        warnings.push_back({WarningKind::AnatomyMismatch,
                            tag + " under " + anatomy_key(a) + ", verified " + std::string(display_name(lesion->anatomy))});
      }
    }
  }
  return warnings;
}

std::string format_model_output(const AnatomyBlocks& blocks, std::string_view reasoning) {
  std::string out = "{\n";
  for (std::size_t i = 0; i < kNumAnatomies; ++i) {
    out += " '" + anatomy_key(kAllAnatomies[i]) + "': {";
    bool first = true;
    for (const auto& [tag, label] : blocks[i]) {
      if (!first) out += ", ";
      first = false;
      out += "\"" + tag + "\":" + std::to_string(to_int(label));
    }
    out += i + 1 < kNumAnatomies ? "},\n" : "}\n";
  }
  out += "}\n";
  if (!reasoning.empty()) {
    out += '\n';
    out += reasoning;
    out += '\n';
  }
  return out;
}

nlohmann::ordered_json to_json(const ParseWarning& w) {
  nlohmann::ordered_json j;
  j["kind"] = to_string(w.kind);
  j["detail"] = w.detail;
  return j;
}

ParseWarning parse_warning_from_json(const nlohmann::json& j) {
  const auto kind = j.at("kind").get<std::string>();
  const auto it = std::find(kWarningNames.begin(), kWarningNames.end(), kind);
  if (it == kWarningNames.end()) throw std::invalid_argument("unknown warning kind '" + kind + "'");
  return {static_cast<WarningKind>(it - kWarningNames.begin()), j.value("detail", std::string{})};
}

}  // namespace inci
