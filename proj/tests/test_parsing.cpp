#include <doctest.h>

#include "inci/parsing.hpp"
#include "inci/tagging.hpp"
#include "support.hpp"

using namespace inci;
using testing::lesion;

namespace {

constexpr const char* kExample =
    "{\n"
    " 'Lung Inci': {},\n"
    " 'Liver Inci': {\"LESION2\":1},\n"
    " 'Kidney Inci': {},\n"
    " 'Adrenal Inci': {},\n"
    " 'Pancreas Inci': {},\n"
    " 'Thyroid Inci': {\"LESION4\":2},\n"
    " 'Other Inci': {}\n"
    "}\n";

// Four lesions: lung, liver, kidney, thyroid.
RadiologyReport four_lesions() {
  auto r = testing::report("P1", "nodule; hepatic cyst; renal mass; thyroid nodule.");
  r.lesions.push_back(lesion(r.text, "nodule", "a", Anatomy::Lung));
  r.lesions.push_back(lesion(r.text, "hepatic cyst", "b", Anatomy::Liver));
  r.lesions.push_back(lesion(r.text, "renal mass", "c", Anatomy::Kidney));
  r.lesions.push_back(lesion(r.text, "thyroid nodule", "d", Anatomy::Thyroid));
  return r;
}

RadiologyReport three_lesions() {
  auto r = testing::report("P2", "mass one, mass two, mass three");
  r.lesions.push_back(lesion(r.text, "mass one", "x1", Anatomy::Liver));
  r.lesions.push_back(lesion(r.text, "mass two", "x2", Anatomy::Liver));
  r.lesions.push_back(lesion(r.text, "mass three", "x3", Anatomy::Other));
  return r;
}

RawCompletion raw(std::string id, std::string text) {
  RawCompletion c;
  c.report_id = std::move(id);
  c.text = std::move(text);
  return c;
}

std::size_t count(const std::vector<ParseWarning>& ws, WarningKind k) {
  return static_cast<std::size_t>(std::count_if(ws.begin(), ws.end(), [&](const auto& w) { return w.kind == k; }));
}

std::string all_empty_except(Anatomy a, const std::string& body) {
  std::string s = "{";
  for (const auto x : kAllAnatomies) {
    if (x != Anatomy::Lung) s += ", ";
    s += "\"" + anatomy_key(x) + "\": " + (x == a ? body : "{}");
  }
  return s + "}";
}

}  // namespace

TEST_CASE("extract_json handles single quotes and trailing reasoning") {
  const auto e = extract_json(std::string(kExample) + "\nThe liver lesion is new.");
  CHECK(e.remainder == "The liver lesion is new.");
  CHECK(e.object.at("Liver Inci").at("LESION2") == 1);

  const auto pure = extract_json("{\"a\": {}}");
  CHECK(pure.remainder.empty());
  CHECK_THROWS_AS(extract_json("no findings"), NoJsonFound);
  CHECK_THROWS_AS(extract_json("{'Lung Inci': {"), UnbalancedBraces);
  CHECK_THROWS_AS(extract_json("{'Lung Inci' {}}"), MalformedJson);
}

TEST_CASE("braces inside strings do not end the block") {
  const auto e = extract_json("{'Other Inci': {}, 'note': 'a } b'} tail");
  CHECK(e.object.at("note") == "a } b");
  CHECK(e.remainder == "tail");
}

TEST_CASE("example output on a four-lesion report") {
  const auto r = four_lesions();
  const auto t = tag_lesions(r);
  const auto m = parse_output(raw("P1", kExample), t);
  CHECK(m.diagnostics.empty());
  for (const auto a : kAllAnatomies) {
    const auto& block = m.anatomy_blocks[static_cast<std::size_t>(a)];
    if (a == Anatomy::Liver) {
      REQUIRE(block.size() == 1);
      CHECK(block.at("LESION2") == IncidentalomaLabel::NoRisk);
    } else if (a == Anatomy::Thyroid) {
      REQUIRE(block.size() == 1);
      CHECK(block.at("LESION4") == IncidentalomaLabel::FollowUp);
    } else {
      CHECK(block.empty());
    }
  }
  CHECK_FALSE(m.reasoning.has_value());
  const auto labels = to_lesion_labels(m, t);
  CHECK(labels.labels == std::map<std::string, IncidentalomaLabel>{{"a", IncidentalomaLabel::None},
                                                                   {"b", IncidentalomaLabel::NoRisk},
                                                                   {"c", IncidentalomaLabel::None},
                                                                   {"d", IncidentalomaLabel::FollowUp}});
  CHECK(check_anatomy_placement(m, t, r).empty());
}

TEST_CASE("unknown tag is dropped with a warning") {
  const auto t = tag_lesions(three_lesions());
  const auto m = parse_output(raw("P2", all_empty_except(Anatomy::Liver, "{\"LESION9\": 2, \"LESION1\": 1}")), t);
  CHECK(count(m.diagnostics, WarningKind::UnknownTag) == 1);
  CHECK(m.anatomy_blocks[1].size() == 1);
  CHECK(m.anatomy_blocks[1].count("LESION9") == 0);
}

TEST_CASE("label outside 1..2 is dropped with a warning") {
  const auto t = tag_lesions(three_lesions());
  for (const char* bad : {"3", "0", "-1", "1.5", "\"2\"", "null"}) {
    const auto m = parse_output(raw("P2", all_empty_except(Anatomy::Liver, std::string("{\"LESION1\": ") + bad + "}")), t);
    CHECK_MESSAGE(count(m.diagnostics, WarningKind::InvalidLabel) == 1, bad);
    CHECK(m.anatomy_blocks[1].empty());
  }
}

TEST_CASE("missing and unknown anatomy keys") {
  const auto t = tag_lesions(three_lesions());
  const auto m = parse_output(raw("P2", "{'Liver Inci': {'LESION2': 1}, 'Spleen Inci': {'LESION1': 2}}"), t);
  CHECK(count(m.diagnostics, WarningKind::MissingAnatomyKey) == 6);
  CHECK(count(m.diagnostics, WarningKind::UnknownAnatomyKey) == 1);
  CHECK(m.anatomy_blocks[1].at("LESION2") == IncidentalomaLabel::NoRisk);

  const auto nb = parse_output(raw("P2", all_empty_except(Anatomy::Liver, "[1, 2]")), t);
  CHECK(count(nb.diagnostics, WarningKind::MalformedBlock) == 1);
}

TEST_CASE("key spelling variants are accepted") {
  const auto t = tag_lesions(three_lesions());
  const auto m = parse_output(raw("P2", "{'liver_inci': {'lesion2': 1}, 'OTHERS INCI': {' LESION3 ': 2}}"), t);
  CHECK(m.anatomy_blocks[1].at("LESION2") == IncidentalomaLabel::NoRisk);
  CHECK(m.anatomy_blocks[6].at("LESION3") == IncidentalomaLabel::FollowUp);
  CHECK(count(m.diagnostics, WarningKind::UnknownAnatomyKey) == 0);
}

TEST_CASE("unmentioned lesions are 0") {
  const auto t = tag_lesions(three_lesions());
  const auto m = parse_output(raw("P2", all_empty_except(Anatomy::Liver, "{\"LESION2\": 1}")), t);
  const auto l = to_lesion_labels(m, t);
  CHECK(l.labels == std::map<std::string, IncidentalomaLabel>{{"x1", IncidentalomaLabel::None},
                                                              {"x2", IncidentalomaLabel::NoRisk},
                                                              {"x3", IncidentalomaLabel::None}});
  const auto none = to_lesion_labels(parse_output(raw("P2", "{}"), t), t);
  CHECK(none.labels.size() == 3);
  for (const auto& [id, label] : none.labels) CHECK(label == IncidentalomaLabel::None);
}

TEST_CASE("a lesion under two anatomies takes the max") {
  const auto r = three_lesions();
  const auto t = tag_lesions(r);
  const auto m = parse_output(raw("P2", "{'Liver Inci': {'LESION1': 1}, 'Other Inci': {'LESION1': 2}}"), t);
  const auto l = to_lesion_labels(m, t);
  CHECK(l.labels.at("x1") == IncidentalomaLabel::FollowUp);
  REQUIRE(l.warnings.size() == 1);
  CHECK(l.warnings[0] == ParseWarning{WarningKind::DuplicateMention, "LESION1"});
  // LESION1 is a liver lesion, so the Other placement is flagged.
  const auto placement = check_anatomy_placement(m, t, r);
  REQUIRE(placement.size() == 1);
  CHECK(placement[0].kind == WarningKind::AnatomyMismatch);
}

TEST_CASE("format then parse gives back the blocks") {
  const auto t = tag_lesions(four_lesions());
  AnatomyBlocks blocks;
  blocks[0]["LESION1"] = IncidentalomaLabel::FollowUp;
  blocks[1]["LESION2"] = IncidentalomaLabel::NoRisk;
  blocks[5]["LESION4"] = IncidentalomaLabel::NoRisk;
  const auto text = format_model_output(blocks, "Reasoning here.");
  const auto m = parse_output(raw("P1", text), t);
  CHECK(m.diagnostics.empty());
  CHECK(m.anatomy_blocks == blocks);
  CHECK(m.reasoning == std::optional<std::string>("Reasoning here."));
  CHECK(format_model_output(m.anatomy_blocks, *m.reasoning) == text);
}

TEST_CASE("tag order puts LESION2 before LESION10") {
  TagNameLess less;
  CHECK(less("LESION2", "LESION10"));
  CHECK_FALSE(less("LESION10", "LESION2"));
}

TEST_CASE("warning JSON round trip") {
  const ParseWarning w{WarningKind::AnatomyMismatch, "LESION3 under Lung Inci"};
  CHECK(parse_warning_from_json(nlohmann::json::parse(to_json(w).dump())) == w);
  CHECK(to_json(w)["kind"] == "anatomy_mismatch");
  CHECK_THROWS_AS(parse_warning_from_json(nlohmann::json{{"kind", "nope"}}), std::invalid_argument);
}
