#include "inci/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string_view>

#include "inci/random.hpp"
#include "inci/utf8.hpp"

namespace inci {

namespace {

struct OrganVocabulary {
  std::vector<std::string_view> terms;
  std::vector<std::string_view> locations;
};

// Indexed by Anatomy. "lesion", "nodule", "cyst" and "mass" recur across
// organs so a report often repeats the same word.
const std::array<OrganVocabulary, kNumAnatomies>& vocabulary() {
  static const std::array<OrganVocabulary, kNumAnatomies> vocab = {{
      {{"nodule", "pulmonary nodule", "mass", "nodular opacity"},
       {"right upper lobe", "left lower lobe", "lingula", "right middle lobe"}},
      {{"hepatic lesion", "lesion", "cyst", "hypodensity"},
       {"right hepatic lobe", "left hepatic lobe", "hepatic dome"}},
      {{"renal cyst", "cyst", "lesion", "mass"},
       {"left kidney", "right kidney", "upper pole of the right kidney"}},
      {{"adrenal nodule", "nodule", "adrenal mass"}, {"left adrenal gland", "right adrenal gland"}},
      {{"pancreatic cyst", "cystic lesion", "lesion"},
       {"pancreatic tail", "pancreatic head", "pancreatic body"}},
      {{"thyroid nodule", "nodule"}, {"right thyroid lobe", "left thyroid lobe"}},
      {{"splenic lesion", "lesion", "mass", "cyst"}, {"spleen", "left adnexa", "right breast"}},
  }};
  return vocab;
}

// Anatomy mix loosely follows the per-organ lesion counts of annotated
// incidentaloma corpora (kidney and liver most common, pancreas rarest).
constexpr std::array<double, kNumAnatomies> kAnatomyWeights = {0.19, 0.2, 0.25, 0.06, 0.05, 0.06, 0.19};

constexpr std::array<std::string_view, 3> kBenignDescriptors = {
    "consistent with a benign simple cyst", "likely representing a benign hemangioma",
    "with macroscopic fat compatible with a benign lesion"};
constexpr std::array<std::string_view, 3> kSuspiciousDescriptors = {
    "which is indeterminate", "with solid enhancing components", "suspicious for neoplasm"};
constexpr std::array<std::string_view, 3> kExpectedDescriptors = {
    "compatible with post-inflammatory scarring", "related to the known underlying disease",
    "reflecting postsurgical change"};

constexpr std::array<std::string_view, 3> kFollowUpSentences = {
    "Follow-up CT in 6 months is recommended.",
    "Recommend dedicated MRI for further characterization.",
    "Follow-up imaging per Fleischner Society guidelines is advised."};
constexpr std::string_view kNegatedRecommendation = "No dedicated follow-up is recommended for the benign findings.";

struct IndicationTemplate {
  std::string_view text;
  IndicationType type;
  std::optional<Anatomy> anatomy;
};

const std::vector<IndicationTemplate>& neoplastic_indications() {
  static const std::vector<IndicationTemplate> v = {
      {"History of colon cancer, evaluate for metastatic disease", IndicationType::NeoplasticDiagnosis,
       Anatomy::Other},
      {"Known lung cancer, restaging", IndicationType::NeoplasticDiagnosis, Anatomy::Lung},
      {"Hepatocellular carcinoma surveillance", IndicationType::NeoplasticDiagnosis, Anatomy::Liver}};
  return v;
}

const std::vector<IndicationTemplate>& other_indications() {
  static const std::vector<IndicationTemplate> v = {
      {"Abdominal pain", IndicationType::Symptom, std::nullopt},
      {"Shortness of breath", IndicationType::Symptom, Anatomy::Lung},
      {"Hematuria", IndicationType::Symptom, Anatomy::Kidney},
      {"Motor vehicle collision", IndicationType::Trauma, std::nullopt},
      {"Fall from standing height", IndicationType::Trauma, std::nullopt},
      {"Crohn disease flare", IndicationType::NonNeoplasticDiagnosis, std::nullopt},
      {"Suspected pulmonary embolism", IndicationType::NonNeoplasticDiagnosis, Anatomy::Lung}};
  return v;
}

template <typename Seq>
const auto& pick(Rng& rng, const Seq& seq) {
  return seq[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(seq.size()) - 1))];
}

template <std::size_t N>
std::size_t sample_categorical(Rng& rng, const std::array<double, N>& weights) {
  double total = 0.0;
  for (const double w : weights) total += w;
  const double u = rng.uniform() * total;
  double acc = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    acc += weights[i];
    if (u < acc) return i;
  }
  // Rounding can leave u == total; return the last positive-weight entry.
  for (std::size_t i = N; i-- > 0;) {
    if (weights[i] > 0.0) return i;
  }
  return N - 1;
}

// Accumulates report text and records lesion spans in scalar-value offsets.
class TextBuilder {
 public:
  void append(std::string_view s) {
    text_ += s;
    length_ += utf8::length(s);
  }

  std::pair<std::size_t, std::size_t> append_span(std::string_view s) {
    const auto start = length_;
    append(s);
    return {start, length_};
  }

  std::string take() { return std::move(text_); }

 private:
  std::string text_;
  std::size_t length_ = 0;
};

struct PlannedLesion {
  IncidentalomaLabel label;
  Anatomy anatomy;
  Assertion assertion;
  SizeTrend trend;
  std::string_view term;
  std::string_view location;
  int size_mm;
};

PlannedLesion plan_lesion(Rng& rng, const GenConfig& cfg) {
  PlannedLesion p{};
  p.label = static_cast<IncidentalomaLabel>(sample_categorical(rng, cfg.label_prior));
  p.anatomy = static_cast<Anatomy>(sample_categorical(rng, kAnatomyWeights));
  const auto& vocab = vocabulary()[static_cast<std::size_t>(p.anatomy)];
  p.term = pick(rng, vocab.terms);
  p.location = pick(rng, vocab.locations);
  p.size_mm = static_cast<int>(rng.uniform_int(3, 35));

  if (p.label != IncidentalomaLabel::None) {
    p.assertion = rng.bernoulli(0.8) ? Assertion::Present : Assertion::Possible;
    p.trend = SizeTrend::Absent;
    return p;
  }
  const double u = rng.uniform();
  p.assertion = u < 0.6 ? Assertion::Present : (u < 0.75 ? Assertion::Possible : Assertion::Absent);
  p.trend = SizeTrend::Absent;
  if (p.assertion != Assertion::Absent && rng.bernoulli(cfg.trend_rate)) {
    constexpr std::array<SizeTrend, 5> kTrends = {SizeTrend::Increasing, SizeTrend::Decreasing,
                                                  SizeTrend::NoChange, SizeTrend::Disappeared,
                                                  SizeTrend::New};
    p.trend = pick(rng, kTrends);
  }
  return p;
}

// Writes one findings sentence and returns the span of the lesion surface.
std::pair<std::size_t, std::size_t> write_lesion_sentence(TextBuilder& b, Rng& rng, const PlannedLesion& p) {
  const std::string size = std::to_string(p.size_mm) + " mm ";
  const std::string loc(p.location);
  std::pair<std::size_t, std::size_t> span;

  if (p.assertion == Assertion::Absent) {
    b.append("No suspicious ");
    span = b.append_span(p.term);
    b.append(" is seen in the " + loc + ".");
    return span;
  }

  switch (p.trend) {
    case SizeTrend::Increasing:
    case SizeTrend::Decreasing:
    case SizeTrend::NoChange:
    case SizeTrend::Disappeared: {
      b.append("The previously seen ");
      span = b.append_span(p.term);
      b.append(" in the " + loc);
      if (p.trend == SizeTrend::Increasing) b.append(" has increased in size to " + std::to_string(p.size_mm) + " mm.");
      else if (p.trend == SizeTrend::Decreasing) b.append(" has decreased in size.");
      else if (p.trend == SizeTrend::NoChange) b.append(" is unchanged.");
      else b.append(" is no longer visualized.");
      return span;
    }
    case SizeTrend::New:
      b.append("There is a new " + size);
      span = b.append_span(p.term);
      b.append(" in the " + loc + ", likely inflammatory.");
      return span;
    case SizeTrend::Absent:
      break;
  }

  b.append(p.assertion == Assertion::Possible ? "Possible " + size : "There is a " + size);
  span = b.append_span(p.term);
  b.append(" in the " + loc + ", ");
  switch (p.label) {
    case IncidentalomaLabel::None: b.append(pick(rng, kExpectedDescriptors)); break;
    case IncidentalomaLabel::NoRisk: b.append(pick(rng, kBenignDescriptors)); break;
    case IncidentalomaLabel::FollowUp: b.append(pick(rng, kSuspiciousDescriptors)); break;
  }
  b.append(".");
  return span;
}

std::string report_id_for(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "R%05zu", index + 1);
  return buf;
}

}  // namespace

void validate(const GenConfig& cfg) {
  if (cfg.n_reports == 0) throw InvalidConfig("n_reports must be positive");
  double sum = 0.0;
  for (const double p : cfg.label_prior) {
    if (!(p >= 0.0 && p <= 1.0)) throw InvalidConfig("label_prior entries must lie in [0,1]");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw InvalidConfig("label_prior must sum to 1");
  if (cfg.max_lesions < cfg.min_lesions) throw InvalidConfig("max_lesions must be >= min_lesions");
  for (const double r : {cfg.trend_rate, cfg.neoplastic_rate, cfg.recommendation_rate}) {
    if (!(r >= 0.0 && r <= 1.0)) throw InvalidConfig("rates must lie in [0,1]");
  }
}

GenConfig gen_config_from_json(const nlohmann::json& j) {
  GenConfig cfg;
  if (!j.is_object()) throw InvalidConfig("generator config must be a JSON object");
  try {
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("n_reports")) cfg.n_reports = j.at("n_reports").get<std::size_t>();
    if (j.contains("label_prior")) {
      const auto v = j.at("label_prior").get<std::vector<double>>();
      if (v.size() != 3) throw InvalidConfig("label_prior must have three entries");
      std::copy(v.begin(), v.end(), cfg.label_prior.begin());
    }
    if (j.contains("lesions_per_report")) {
      const auto v = j.at("lesions_per_report").get<std::vector<std::size_t>>();
      if (v.size() != 2) throw InvalidConfig("lesions_per_report must be [min, max]");
      cfg.min_lesions = v[0];
      cfg.max_lesions = v[1];
    }
    if (j.contains("trend_rate")) cfg.trend_rate = j.at("trend_rate").get<double>();
    if (j.contains("neoplastic_rate")) cfg.neoplastic_rate = j.at("neoplastic_rate").get<double>();
    if (j.contains("recommendation_rate")) cfg.recommendation_rate = j.at("recommendation_rate").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw InvalidConfig(std::string("generator config: ") + e.what());
  }
  validate(cfg);
  return cfg;
}

nlohmann::ordered_json to_json(const GenConfig& cfg) {
  nlohmann::ordered_json j;
  j["seed"] = cfg.seed;
  j["n_reports"] = cfg.n_reports;
  j["label_prior"] = cfg.label_prior;
  j["lesions_per_report"] = {cfg.min_lesions, cfg.max_lesions};
  j["trend_rate"] = cfg.trend_rate;
  j["neoplastic_rate"] = cfg.neoplastic_rate;
  j["recommendation_rate"] = cfg.recommendation_rate;
  return j;
}

std::vector<RadiologyReport> generate(const GenConfig& cfg) {
  validate(cfg);
  Rng rng(cfg.seed);
  std::vector<RadiologyReport> reports;
  reports.reserve(cfg.n_reports);

  for (std::size_t i = 0; i < cfg.n_reports; ++i) {
    const auto n_lesions = static_cast<std::size_t>(
        rng.uniform_int(static_cast<std::int64_t>(cfg.min_lesions), static_cast<std::int64_t>(cfg.max_lesions)));
    std::vector<PlannedLesion> plan;
    plan.reserve(n_lesions);
    for (std::size_t k = 0; k < n_lesions; ++k) plan.push_back(plan_lesion(rng, cfg));

    auto max_label = IncidentalomaLabel::None;
    for (const auto& p : plan) max_label = std::max(max_label, p.label);

    RadiologyReport report;
    report.report_id = report_id_for(i);
    TextBuilder b;

    const bool neoplastic = rng.bernoulli(cfg.neoplastic_rate);
    const bool has_indication = neoplastic || rng.bernoulli(0.9);
    if (has_indication) {
      const auto& tmpl = neoplastic ? pick(rng, neoplastic_indications()) : pick(rng, other_indications());
      report.indications.push_back({std::string(tmpl.text), tmpl.type, tmpl.anatomy});
      b.append("INDICATION: " + std::string(tmpl.text) + ".\n");
    } else {
      b.append("INDICATION: Not provided.\n");
    }
    b.append("FINDINGS:\n");

    for (std::size_t k = 0; k < plan.size(); ++k) {
      const auto& p = plan[k];
      const auto [start, end] = write_lesion_sentence(b, rng, p);
      b.append("\n");
      LesionFinding l;
      l.lesion_id = "L" + std::to_string(k + 1);
      l.span_start = start;
      l.span_end = end;
      l.surface = std::string(p.term);
      l.anatomy = p.anatomy;
      l.assertion = p.assertion;
      l.size_trend = p.trend;
      l.gold_label = p.label;
      report.lesions.push_back(std::move(l));
    }
    // Untagged mention of a common lesion word.
    if (rng.bernoulli(0.3)) b.append("No additional nodules or masses are identified.\n");

    b.append("IMPRESSION:\n");
    if (max_label == IncidentalomaLabel::FollowUp && rng.bernoulli(cfg.recommendation_rate)) {
      b.append(std::string(pick(rng, kFollowUpSentences)) + "\n");
    } else if (max_label == IncidentalomaLabel::NoRisk && rng.bernoulli(cfg.recommendation_rate / 2.0)) {
      b.append(std::string(kNegatedRecommendation) + "\n");
    } else {
      b.append(plan.empty() ? "No acute findings.\n" : "See findings above.\n");
    }

    report.text = b.take();
    reports.push_back(std::move(report));
  }
  return reports;
}

}  // namespace inci
