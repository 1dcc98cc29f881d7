#include "inci/tagging.hpp"

#include <algorithm>
#include <optional>

#include "inci/utf8.hpp"

namespace inci {

namespace {

struct TagToken {
  bool closing = false;
  std::string number;
  std::size_t length = 0;  // bytes consumed
};

// Recognizes "<LESION123>" or "</LESION123>" at text[pos].
std::optional<TagToken> match_tag(std::string_view text, std::size_t pos) {
  constexpr std::string_view kName = "LESION";
  TagToken tok;
  std::size_t i = pos;
  if (i >= text.size() || text[i] != '<') return std::nullopt;
  ++i;
  if (i < text.size() && text[i] == '/') {
    tok.closing = true;
    ++i;
  }
  if (text.substr(i, kName.size()) != kName) return std::nullopt;
  i += kName.size();
  const auto digits_begin = i;
  while (i < text.size() && text[i] >= '0' && text[i] <= '9') ++i;
  if (i == digits_begin || i >= text.size() || text[i] != '>') return std::nullopt;
  tok.number = std::string(text.substr(digits_begin, i - digits_begin));
  tok.length = i + 1 - pos;
  return tok;
}

}  // namespace

const std::string* TaggedReport::lesion_for_tag(std::string_view tag) const {
  for (const auto& [name, id] : tag_map) {
    if (name == tag) return &id;
  }
  return nullptr;
}

std::string tag_name(std::size_t k) { return "LESION" + std::to_string(k); }

TaggedReport tag_lesions(const RadiologyReport& report) {
  std::vector<const LesionFinding*> order;
  order.reserve(report.lesions.size());
  for (const auto& l : report.lesions) order.push_back(&l);
  std::stable_sort(order.begin(), order.end(),
                   [](const LesionFinding* a, const LesionFinding* b) { return a->span_start < b->span_start; });
  for (std::size_t i = 1; i < order.size(); ++i) {
    if (order[i]->span_start < order[i - 1]->span_end) throw OverlappingSpans(report.report_id);
  }

  TaggedReport out;
  out.report_id = report.report_id;
  std::string_view text = report.text;
  std::size_t char_pos = 0;
  std::size_t byte_pos = 0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const auto& l = *order[k];
    const auto start = byte_pos + utf8::byte_offset(text.substr(byte_pos), l.span_start - char_pos);
    const auto end = start + utf8::byte_offset(text.substr(start), l.span_end - l.span_start);
    const auto name = tag_name(k + 1);
    out.tagged_text.append(text.substr(byte_pos, start - byte_pos));
    out.tagged_text += "<" + name + ">";
    out.tagged_text.append(text.substr(start, end - start));
    out.tagged_text += "</" + name + ">";
    out.tag_map.emplace_back(name, l.lesion_id);
    byte_pos = end;
    char_pos = l.span_end;
  }
  out.tagged_text.append(text.substr(byte_pos));
  return out;
}

std::string strip_tags(std::string_view tagged_text) {
  std::string out;
  out.reserve(tagged_text.size());
  std::optional<std::string> open;
  for (std::size_t i = 0; i < tagged_text.size();) {
    if (tagged_text[i] == '<') {
      if (const auto tok = match_tag(tagged_text, i)) {
        if (!tok->closing) {
          if (open) throw MalformedTag("nested tag <LESION" + tok->number + "> inside <LESION" + *open + ">");
          open = tok->number;
        } else {
          if (!open) throw MalformedTag("closing tag </LESION" + tok->number + "> without opening tag");
          if (*open != tok->number) {
            throw MalformedTag("mismatched </LESION" + tok->number + "> for <LESION" + *open + ">");
          }
          open.reset();
        }
        i += tok->length;
        continue;
      }
    }
    out += tagged_text[i++];
  }
  if (open) throw MalformedTag("unclosed tag <LESION" + *open + ">");
  return out;
}

std::string anatomy_map_line(const TaggedReport& tagged, const RadiologyReport& report) {
  std::string line;
  for (const auto& [name, lesion_id] : tagged.tag_map) {
    const auto* lesion = report.find_lesion(lesion_id);
    if (lesion == nullptr) throw UnknownLesion(lesion_id);
    if (!line.empty()) line += "; ";
    line += name;
    line += '=';
    line += display_name(lesion->anatomy);
  }
  return line;
}

std::string context_window(const RadiologyReport& report, std::string_view lesion_id, std::size_t radius) {
  const auto* lesion = report.find_lesion(lesion_id);
  if (lesion == nullptr) throw UnknownLesion(std::string(lesion_id));
  const auto length = utf8::length(report.text);
  const auto begin = lesion->span_start > radius ? lesion->span_start - radius : 0;
  const auto end = std::min(length, lesion->span_end + radius);
  return utf8::slice(report.text, begin, end);
}

nlohmann::ordered_json to_json(const TaggedReport& tagged, std::string_view anatomy_line) {
  nlohmann::ordered_json tag_map = nlohmann::ordered_json::object();
  for (const auto& [name, id] : tagged.tag_map) tag_map[name] = id;
  nlohmann::ordered_json j;
  j["report_id"] = tagged.report_id;
  j["tagged_text"] = tagged.tagged_text;
  j["tag_map"] = std::move(tag_map);
  j["anatomy_line"] = anatomy_line;
  return j;
}

TaggedReport tagged_report_from_json(const nlohmann::json& j) {
  TaggedReport t;
  t.report_id = j.at("report_id").get<std::string>();
  t.tagged_text = j.at("tagged_text").get<std::string>();
  std::vector<std::pair<std::size_t, std::pair<std::string, std::string>>> entries;
  for (const auto& [name, id] : j.at("tag_map").items()) {
    if (name.rfind("LESION", 0) != 0) throw MalformedTag("bad tag name '" + name + "'");
    entries.push_back({std::stoul(name.substr(6)), {name, id.get<std::string>()}});
  }
  std::sort(entries.begin(), entries.end());
  for (auto& e : entries) t.tag_map.push_back(std::move(e.second));
  return t;
}

}  // namespace inci
