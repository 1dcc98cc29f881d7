#include <doctest.h>

#include "inci/sampling.hpp"
#include "inci/synthgen.hpp"
#include "support.hpp"

using namespace inci;
using testing::lesion;

namespace {

RadiologyReport with_lesion(const std::string& id, Anatomy a, Assertion as = Assertion::Present,
                            SizeTrend t = SizeTrend::Absent) {
  auto r = testing::report(id, "There is a small nodule. Follow-up is recommended.");
  r.lesions.push_back(lesion(r.text, "nodule", "L1", a, IncidentalomaLabel::None, as, t));
  return r;
}

std::vector<std::string> ids(const std::vector<RadiologyReport>& rs) {
  std::vector<std::string> out;
  for (const auto& r : rs) out.push_back(r.report_id);
  return out;
}

}  // namespace

TEST_CASE("filter 1: target organ, present or possible") {
  CHECK(filter1_target_anatomies({with_lesion("a", Anatomy::Liver)}).size() == 1);
  CHECK(filter1_target_anatomies({with_lesion("b", Anatomy::Other)}).empty());
  CHECK(filter1_target_anatomies({with_lesion("c", Anatomy::Lung, Assertion::Absent)}).empty());
  CHECK(filter1_target_anatomies({with_lesion("d", Anatomy::Thyroid, Assertion::Possible)}).size() == 1);
}

TEST_CASE("filter 2: keep reports with any fresh qualifying lesion") {
  CHECK(filter2_exclude_prior({with_lesion("a", Anatomy::Liver, Assertion::Present, SizeTrend::NoChange)}).empty());
  CHECK(filter2_exclude_prior({with_lesion("b", Anatomy::Kidney, Assertion::Present, SizeTrend::New)}).size() == 1);
  for (const auto t : {SizeTrend::Increasing, SizeTrend::Decreasing, SizeTrend::Disappeared}) {
    CHECK(filter2_exclude_prior({with_lesion("c", Anatomy::Lung, Assertion::Present, t)}).empty());
  }

  auto two = testing::report("m", "A liver cyst. A renal cyst.");
  two.lesions.push_back(lesion(two.text, "liver cyst", "L1", Anatomy::Liver, IncidentalomaLabel::None,
                               Assertion::Present, SizeTrend::NoChange));
  two.lesions.push_back(lesion(two.text, "renal cyst", "L2", Anatomy::Kidney, IncidentalomaLabel::None,
                               Assertion::Present, SizeTrend::Absent));
  CHECK(filter2_exclude_prior({two}).size() == 1);

  // the fresh lesion must itself qualify for filter 1
  two.lesions[1].anatomy = Anatomy::Other;
  CHECK(filter2_exclude_prior({two}).empty());
}

TEST_CASE("filter 3: neoplastic indications drop the report") {
  auto r = with_lesion("a", Anatomy::Liver);
  CHECK(filter3_surveillance({r}).size() == 1);  // no indications at all
  r.indications.push_back({"Abdominal pain", IndicationType::Symptom, std::nullopt});
  CHECK(filter3_surveillance({r}).size() == 1);
  r.indications.push_back({"Known lung cancer", IndicationType::NeoplasticDiagnosis, Anatomy::Lung});
  CHECK(filter3_surveillance({r}).empty());
}

TEST_CASE("filter 4: recommendation cue or cached flag") {
  const RuleRecommendationDetector rule;
  auto r = testing::report("a", "Indeterminate nodule. Follow-up CT in 6 months is recommended.");
  CHECK(filter4_recommendation({r}, rule).size() == 1);
  r.text = "Indeterminate nodule. Nothing else.";
  CHECK(filter4_recommendation({r}, rule).empty());
  r.has_recommendation = true;
  CHECK(filter4_recommendation({r}, rule).size() == 1);
  r.has_recommendation = false;
  r.text = "Recommend MRI.";
  CHECK(filter4_recommendation({r}, rule).empty());

  for (const char* t : {"RECOMMEND mri", "f/u in 3 months", "Clinical correlation advised.",
                        "Suggest repeat imaging.", "Managed per Fleischner criteria."}) {
    CHECK(rule(testing::report("x", t)));
  }
  const RecommendationDetector never = [](const RadiologyReport&) { return false; };
  r.has_recommendation.reset();
  CHECK(filter4_recommendation({r}, never).empty());
}

TEST_CASE("run_pipeline trace") {
  const auto empty = run_pipeline({});
  CHECK(empty.reports.empty());
  REQUIRE(empty.trace.stages.size() == 4);
  for (const auto& s : empty.trace.stages) {
    CHECK(s.reports_in == 0);
    CHECK(s.reports_out == 0);
    CHECK(s.retention == 0.0);
  }
  CHECK(empty.trace.stages[0].name == "target_anatomies");
  CHECK(empty.trace.stages[3].name == "recommendation");

  const std::vector<RadiologyReport> all_pass = {with_lesion("a", Anatomy::Liver), with_lesion("b", Anatomy::Lung)};
  const auto res = run_pipeline(all_pass);
  CHECK(res.reports == all_pass);
  CHECK(res.trace.stages[3].retention == 1.0);

  const auto j = to_json(res.trace);
  CHECK(j["stages"][0]["in"] == 2);
  CHECK(j["stages"][0]["out"] == 2);
}

TEST_CASE("composed pipeline equals the conjunction of stage predicates") {
  GenConfig cfg;
  cfg.seed = 21;
  cfg.n_reports = 200;
  const auto corpus = generate(cfg);
  const RuleRecommendationDetector rule;
  std::vector<std::string> brute;
  for (const auto& r : corpus) {
    if (has_target_lesion(r) && has_fresh_target_lesion(r) && lacks_neoplastic_indication(r) &&
        has_recommendation(r, rule)) {
      brute.push_back(r.report_id);
    }
  }
  const auto res = run_pipeline(corpus, rule);
  CHECK(ids(res.reports) == brute);
  std::size_t prev = corpus.size();
  for (const auto& s : res.trace.stages) {
    CHECK(s.reports_in == prev);
    CHECK(s.reports_out <= s.reports_in);
    prev = s.reports_out;
  }
  // filters never touch report contents
  for (const auto& r : res.reports) {
    const auto it = std::find_if(corpus.begin(), corpus.end(), [&](const auto& c) { return c.report_id == r.report_id; });
    CHECK(*it == r);
  }
}
