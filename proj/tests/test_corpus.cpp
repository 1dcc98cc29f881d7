#include <doctest.h>

#include "inci/corpus.hpp"
#include "inci/io.hpp"
#include "inci/synthgen.hpp"
#include "support.hpp"

using namespace inci;
using testing::lesion;
using testing::TempPath;

namespace {

RadiologyReport liver_report() {
  auto r = testing::report("R1", "FINDINGS: A 2 cm hepatic lesion in segment 4.");
  r.lesions.push_back(lesion(r.text, "hepatic lesion", "L1", Anatomy::Liver, IncidentalomaLabel::NoRisk));
  r.indications.push_back({"abdominal pain", IndicationType::Symptom, std::nullopt});
  return r;
}

std::string one_line(const RadiologyReport& r) { return to_json(r).dump() + "\n"; }

}  // namespace

TEST_CASE("one valid liver report loads") {
  const auto corpus = parse_corpus(one_line(liver_report()));
  REQUIRE(corpus.size() == 1);
  CHECK(corpus[0] == liver_report());
}

TEST_CASE("span past the end of the text is a malformed record") {
  auto j = to_json(liver_report());
  j["lesions"][0]["span_end"] = 500;
  try {
    parse_corpus(j.dump() + "\n");
    FAIL("expected MalformedRecord");
  } catch (const MalformedRecord& e) {
    CHECK(e.line() == 1);
    CHECK(std::string(e.what()).find("span_end") != std::string::npos);
  }
}

TEST_CASE("overlapping spans [10,16) and [14,20)") {
  auto r = testing::report("R9", "0123456789abcdefghijklmnop");
  LesionFinding a{"A", 10, 16, "abcdef", Anatomy::Lung, Assertion::Present, SizeTrend::Absent, std::nullopt};
  LesionFinding b{"B", 14, 20, "efghij", Anatomy::Lung, Assertion::Present, SizeTrend::Absent, std::nullopt};
  r.lesions = {a, b};
  CHECK_THROWS_AS(validate_report(r), OverlappingSpans);
  CHECK_THROWS_AS(parse_corpus(one_line(r)), OverlappingSpans);
}

TEST_CASE("duplicate lesion ids and unknown enum values") {
  auto r = liver_report();
  r.text += " Second hepatic lesion.";
  r.lesions.push_back(lesion(r.text, "hepatic lesion", "L1", Anatomy::Liver, std::nullopt, Assertion::Present,
                             SizeTrend::Absent, 1));
  CHECK_THROWS_AS(parse_corpus(one_line(r)), DuplicateLesionId);

  auto j = to_json(liver_report());
  j["lesions"][0]["anatomy"] = "spleen";
  try {
    parse_corpus("\n" + j.dump() + "\n");
    FAIL("expected UnknownEnumValue");
  } catch (const UnknownEnumValue& e) {
    CHECK(e.field() == "anatomy");
    CHECK(e.value() == "spleen");
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
}

TEST_CASE("bad JSON and repeated report ids name the line") {
  const auto good = one_line(liver_report());
  try {
    parse_corpus(good + "{not json\n");
    FAIL("expected MalformedRecord");
  } catch (const MalformedRecord& e) {
    CHECK(e.line() == 2);
  }
  try {
    parse_corpus(good + good);
    FAIL("expected MalformedRecord");
  } catch (const MalformedRecord& e) {
    CHECK(e.line() == 2);
  }
}

TEST_CASE("offsets count Unicode scalar values") {
  auto r = testing::report("U1", "Résumé: a 3 mm nódulo in the lung.");
  r.lesions.push_back(lesion(r.text, "nódulo", "L1", Anatomy::Lung));
  CHECK(r.lesions[0].span_start == 15);
  CHECK(r.lesions[0].span_end == 21);
  CHECK_NOTHROW(validate_report(r));
  CHECK(parse_corpus(one_line(r))[0] == r);
}

TEST_CASE("field order and missing gold serialize as documented") {
  auto r = liver_report();
  r.lesions[0].gold_label.reset();
  const auto line = to_json(r).dump();
  CHECK(line.find("\"report_id\"") < line.find("\"text\""));
  CHECK(line.find("\"text\"") < line.find("\"lesions\""));
  CHECK(line.find("\"lesions\"") < line.find("\"indications\""));
  CHECK(line.find("\"indications\"") < line.find("\"has_recommendation\""));
  CHECK(line.find("\"gold_label\":null") != std::string::npos);
  CHECK(line.find("\"indication_type\":\"symptom\"") != std::string::npos);
}

TEST_CASE("save/load round trip") {
  TempPath p("corpus");
  SUBCASE("empty corpus") {
    save_corpus({}, p);
    CHECK(io::read_file(p).empty());
    CHECK(load_corpus(p).empty());
  }
  SUBCASE("100 generated reports re-save byte-identically") {
    GenConfig cfg;
    cfg.n_reports = 100;
    const auto corpus = generate(cfg);
    save_corpus(corpus, p);
    const auto bytes = io::read_file(p);
    const auto loaded = load_corpus(p);
    CHECK(loaded == corpus);
    save_corpus(loaded, p);
    CHECK(io::read_file(p) == bytes);
  }
  CHECK_THROWS_AS(load_corpus("/nonexistent/dir/corpus.jsonl"), IoFailure);
}

TEST_CASE("document label is the maximum") {
  AnatomyVector v;
  CHECK(document_label(v) == IncidentalomaLabel::None);
  v[Anatomy::Lung] = IncidentalomaLabel::FollowUp;
  CHECK(document_label(v) == IncidentalomaLabel::FollowUp);
  AnatomyVector w;
  w[Anatomy::Liver] = IncidentalomaLabel::NoRisk;
  w[Anatomy::Kidney] = IncidentalomaLabel::NoRisk;
  CHECK(document_label(w) == IncidentalomaLabel::NoRisk);

  // exhaustive over 3^7 vectors: max dominates and is attained
  for (int code = 0; code < 2187; ++code) {
    AnatomyVector u;
    int c = code, mx = 0;
    for (const auto a : kAllAnatomies) {
      u[a] = label_from_int(c % 3);
      mx = std::max(mx, c % 3);
      c /= 3;
    }
    REQUIRE(to_int(document_label(u)) == mx);
  }
}

TEST_CASE("labels outside 0..2 are rejected") {
  CHECK_THROWS_AS(label_from_int(3), std::invalid_argument);
  CHECK_THROWS_AS(label_from_int(-1), std::invalid_argument);
  CHECK(label_from_int(2) == IncidentalomaLabel::FollowUp);
}
