// Acceptance checks. One PASS/FAIL line per criterion; exit status is the
// number of failures (capped).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "inci/aggregation.hpp"
#include "inci/corpus.hpp"
#include "inci/ensemble.hpp"
#include "inci/evaluation.hpp"
#include "inci/io.hpp"
#include "inci/llm_client.hpp"
#include "inci/parsing.hpp"
#include "inci/pipeline.hpp"
#include "inci/predictions.hpp"
#include "inci/random.hpp"
#include "inci/sampling.hpp"
#include "inci/supervised.hpp"
#include "inci/synthgen.hpp"
#include "inci/tagging.hpp"
#include "support.hpp"

using namespace inci;
using L = IncidentalomaLabel;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;

void report(const std::string& name, bool ok, const std::string& detail) {
  std::cout << (ok ? "[PASS] " : "[FAIL] ") << name << " :: " << detail << std::endl;
  if (!ok) ++failures;
}

// Exceptions count as failures, not crashes.
void criterion(const std::string& name, const std::function<std::pair<bool, std::string>()>& body) {
  try {
    const auto [ok, detail] = body();
    report(name, ok, detail);
  } catch (const std::exception& e) {
    report(name, false, std::string("threw: ") + e.what());
  }
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double x, int decimals = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, x);
  return buf;
}

std::vector<TaggedReport> tags_only(const std::vector<TaggedWithLine>& t) {
  std::vector<TaggedReport> out;
  out.reserve(t.size());
  for (const auto& x : t) out.push_back(x.tagged);
  return out;
}

// Oracle labels for `corpus`, run through the full prompt/infer/parse path.
PredictionSet oracle_predictions(const std::vector<RadiologyReport>& corpus, const std::vector<TaggedWithLine>& tagged,
                                 const std::vector<PromptBundle>& bundles, double noise, std::uint64_t seed,
                                 const std::string& id) {
  const OracleTransport oracle(corpus, noise, seed, id);
  const auto outcomes = infer(bundles, oracle, 4);
  auto set = to_prediction_set(parse_completions(outcomes, tags_only(tagged), corpus, id));
  return set;
}

// Reports from `cfg` truncated so they hold exactly `n_lesions` lesions.
std::vector<RadiologyReport> corpus_with_lesions(GenConfig cfg, std::size_t n_lesions) {
  cfg.n_reports = n_lesions;  // at least one lesion per report
  auto all = generate(cfg);
  std::vector<RadiologyReport> out;
  std::size_t have = 0;
  for (auto& r : all) {
    if (have == n_lesions) break;
    if (have + r.lesions.size() > n_lesions) {
      r.lesions.resize(n_lesions - have);  // keep a prefix; spans stay valid
    }
    have += r.lesions.size();
    out.push_back(std::move(r));
  }
  return out;
}

double accuracy(const LabelTable& gold, const LabelTable& pred) { return metrics(confusion(gold, pred)).accuracy; }

// ---------------------------------------------------------------------------

std::pair<bool, std::string> e2e_oracle() {
  E2EConfig cfg;
  cfg.gen.seed = 7;
  cfg.gen.n_reports = 200;
  cfg.noise = 0.0;
  const auto t0 = Clock::now();
  const auto r = run_e2e(cfg);
  const double secs = seconds_since(t0);
  bool ok = r.summary.lesion.accuracy == 1.0 && secs < 10.0;
  for (int c = 0; c < kNumLabels; ++c) {
    ok = ok && r.summary.lesion.f1[static_cast<std::size_t>(c)] == 1.0 &&
         r.summary.lesion.support[static_cast<std::size_t>(c)] > 0;
  }
  return {ok, "reports " + std::to_string(r.sampled.reports.size()) + "/200, f1 " + fmt(r.summary.lesion.f1[0], 3) +
                  " " + fmt(r.summary.lesion.f1[1], 3) + " " + fmt(r.summary.lesion.f1[2], 3) + ", accuracy " +
                  fmt(r.summary.lesion.accuracy, 3) + ", " + fmt(secs, 3) + " s"};
}

std::pair<bool, std::string> aggregation_brute_force() {
  int cases = 0, bad = 0;
  for (int n = 0; n <= 4; ++n) {
    const int total = static_cast<int>(std::pow(3, n));
    for (int code = 0; code < total; ++code) {
      std::vector<L> labels;
      for (int i = 0, c = code; i < n; ++i, c /= 3) labels.push_back(label_from_int(c % 3));
      const L want = labels.empty() ? L::None : *std::max_element(labels.begin(), labels.end());
      ++cases;
      if (aggregate_anatomy(labels) != want) ++bad;
    }
  }
  return {cases == 121 && bad == 0, std::to_string(cases) + " multisets, " + std::to_string(bad) + " mismatches"};
}

std::pair<bool, std::string> aggregation_example() {
  const std::vector<L> lung{L::None, L::None, L::FollowUp};
  const auto got = aggregate_anatomy(lung);
  return {got == L::FollowUp, "{0,0,2} -> " + std::to_string(to_int(got))};
}

// Random dense instance for the gradient checks.
struct Instance {
  SoftmaxModel model{20};
  std::vector<Example> batch;
  ClassWeights weights;
};

Instance random_instance(Rng& rng) {
  Instance in;
  for (Eigen::Index k = 0; k < in.model.weights.size(); ++k) in.model.weights.data()[k] = rng.uniform() * 2 - 1;
  for (int k = 0; k < 3; ++k) in.model.bias(k) = rng.uniform() * 2 - 1;
  for (int k = 0; k < 3; ++k) in.weights.w(k) = 0.2 + 2.8 * rng.uniform();
  const auto n = rng.uniform_int(1, 8);
  for (std::int64_t i = 0; i < n; ++i) {
    Example e;
    e.y = label_from_int(rng.uniform_int(0, 2));
    for (std::uint32_t j = 0; j < 20; ++j) e.x.entries.emplace_back(j, rng.uniform() * 2 - 1);
    in.batch.push_back(std::move(e));
  }
  return in;
}

// Flattened (weights column-major, then bias) analytic gradient.
Eigen::VectorXd flatten(const ParamGradient& g, Eigen::Index n_features) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(3 * n_features + 3);
  for (const auto& [j, col] : g.weights) v.segment(3 * static_cast<Eigen::Index>(j), 3) = col;
  v.tail(3) = g.bias;
  return v;
}

double& param(SoftmaxModel& m, Eigen::Index i) {
  return i < m.weights.size() ? m.weights.data()[i] : m.bias(i - m.weights.size());
}

std::pair<bool, std::string> gradient_checks() {
  using LossFn = std::function<LossAndGradient(const SoftmaxModel&, const Instance&)>;
  const std::vector<std::pair<std::string, LossFn>> losses = {
      {"weighted-ce", [](const SoftmaxModel& m, const Instance& in) { return loss_weighted_ce(m, in.batch, in.weights); }},
      {"focal", [](const SoftmaxModel& m, const Instance& in) { return loss_focal(m, in.batch, in.weights, 2.0); }},
      {"expected-cost",
       [](const SoftmaxModel& m, const Instance& in) {
         return loss_expected_cost(m, in.batch, CostMatrix::clinical_default());
       }},
  };
  const double h = 1e-5;
  bool ok = true;
  std::string detail;
  for (std::size_t li = 0; li < losses.size(); ++li) {
    const auto& [name, f] = losses[li];
    Rng rng(derive_seed(2024, li));
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      const auto in = random_instance(rng);
      const Eigen::VectorXd analytic = flatten(f(in.model, in).gradient, in.model.n_features());
      Eigen::VectorXd numeric(analytic.size());
      for (Eigen::Index i = 0; i < numeric.size(); ++i) {
        auto up = in.model, down = in.model;
        param(up, i) += h;
        param(down, i) -= h;
        numeric(i) = (f(up, in).value - f(down, in).value) / (2 * h);
      }
      const double denom = std::max({analytic.norm(), numeric.norm(), 1e-12});
      worst = std::max(worst, (analytic - numeric).norm() / denom);
    }
    ok = ok && worst < 1e-4;
    std::ostringstream w;
    w << std::scientific << std::setprecision(2) << worst;
    detail += (detail.empty() ? "" : ", ") + name + " max rel err " + w.str();
  }
  return {ok, detail + " (100 instances each)"};
}

std::pair<bool, std::string> loss_identities() {
  Rng rng(77);
  double focal_gap = 0.0, ec_gap = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto in = random_instance(rng);
    const auto f0 = loss_focal(in.model, in.batch, in.weights, 0.0);
    const auto ce = loss_weighted_ce(in.model, in.batch, in.weights);
    const auto n = in.model.n_features();
    focal_gap = std::max({focal_gap, std::abs(f0.value - ce.value),
                          (flatten(f0.gradient, n) - flatten(ce.gradient, n)).cwiseAbs().maxCoeff()});

    const auto ec = loss_expected_cost(in.model, in.batch, CostMatrix::zero_one());
    double want = 0.0;
    for (const auto& e : in.batch) want += 1.0 - in.model.probabilities(e.x)(to_int(e.y));
    want /= static_cast<double>(in.batch.size());
    ec_gap = std::max(ec_gap, std::abs(ec.value - want));
  }

  // 100 x 100 grid of interior probability vectors
  int points = 0, unique = 0, disagree = 0;
  const auto zero_one = CostMatrix::zero_one();
  for (int i = 0; i < 100; ++i) {
    for (int j = 0; j < 100; ++j) {
      ++points;
      const double p0 = (i + 0.5) / 100.0;
      const double p1 = (1.0 - p0) * (j + 0.5) / 100.0;
      const Eigen::Vector3d p(p0, p1, 1.0 - p0 - p1);
      const double top = p.maxCoeff();
      if ((p.array() == top).count() != 1) continue;
      ++unique;
      if (cost_aware_label(p, zero_one) != argmax_label(p)) ++disagree;
    }
  }
  const bool ok = focal_gap <= 1e-12 && ec_gap <= 1e-12 && points == 10000 && disagree == 0;
  std::ostringstream d;
  d << "focal(0) vs wce max gap " << focal_gap << ", expected-cost(0/1) gap " << ec_gap << ", decode grid "
    << points << " points, " << unique << " unique-argmax, " << disagree << " disagreements";
  return {ok, d.str()};
}

std::pair<bool, std::string> tie_rule() {
  const std::vector<L> a{L::FollowUp, L::FollowUp, L::NoRisk, L::NoRisk, L::None, L::None};
  const std::vector<L> b{L::NoRisk, L::NoRisk, L::NoRisk, L::None, L::None, L::FollowUp};
  const auto va = majority_vote(a), vb = majority_vote(b);
  return {va == L::None && vb == L::NoRisk,
          "{2,2,1,1,0,0} -> " + std::to_string(to_int(va)) + ", {1,1,1,0,0,2} -> " + std::to_string(to_int(vb))};
}

std::pair<bool, std::string> ensemble_improvement() {
  int wins = 0;
  bool members_in_band = true, ensemble_high = true;
  double lo = 1, hi = 0, ens_lo = 1;
  for (std::uint64_t s = 0; s < 10; ++s) {
    GenConfig g;
    g.seed = 1000 + s;
    const auto corpus = corpus_with_lesions(g, 5000);
    const auto tagged = tag_corpus(corpus);
    const auto bundles = build_prompts(tagged, PromptSetting::WithAnatomy);
    const auto gold = gold_lesion_labels(corpus);

    std::vector<PredictionSet> members;
    double best_member = 0.0;
    for (std::uint64_t m = 0; m < 6; ++m) {
      members.push_back(
          oracle_predictions(corpus, tagged, bundles, 0.15, derive_seed(s, m), "oracle-" + std::to_string(m)));
      const double acc = accuracy(gold, members.back().labels);
      lo = std::min(lo, acc);
      hi = std::max(hi, acc);
      members_in_band = members_in_band && std::abs(acc - 0.85) <= 0.02;
      best_member = std::max(best_member, acc);
    }
    const double ens = accuracy(gold, ensemble(members).labels);
    ens_lo = std::min(ens_lo, ens);
    ensemble_high = ensemble_high && ens >= 0.93;
    if (ens > best_member) ++wins;
    if (gold.size() != 5000) return {false, "corpus has " + std::to_string(gold.size()) + " lesions"};
  }
  return {wins >= 9 && members_in_band && ensemble_high,
          "ensemble beats every member in " + std::to_string(wins) + "/10 seeds, member accuracy [" + fmt(lo) + ", " +
              fmt(hi) + "], ensemble min " + fmt(ens_lo)};
}

std::pair<bool, std::string> metric_arithmetic() {
  const double a = incidentaloma_macro_f1(0.84, 0.73);
  const double b = incidentaloma_macro_f1(0.82, 0.71);
  const bool ok = std::abs(a - 0.785) < 1e-12 && std::abs(b - 0.765) < 1e-12 && format_fixed(a, 2) == "0.79" &&
                  format_fixed(b, 2) == "0.77" && std::abs(round_half_up(a, 2) - 0.79) < 1e-12 &&
                  std::abs(round_half_up(b, 2) - 0.77) < 1e-12;
  return {ok, "(0.84,0.73) -> " + fmt(a, 4) + " -> " + format_fixed(a, 2) + "; (0.82,0.71) -> " + fmt(b, 4) + " -> " +
                  format_fixed(b, 2)};
}

std::pair<bool, std::string> miss_rate() {
  LabelTable gold, pred;
  int k = 0;
  auto add = [&](L g, L p) {
    const ItemKey key{"r" + std::to_string(k / 4), "l" + std::to_string(k)};
    ++k;
    gold[key] = g;
    pred[key] = p;
  };
  for (int i = 0; i < 5; ++i) add(L::FollowUp, L::None);
  for (int i = 0; i < 3; ++i) add(L::FollowUp, L::NoRisk);
  for (int i = 0; i < 21; ++i) add(L::FollowUp, L::FollowUp);
  for (int i = 0; i < 40; ++i) add(L::None, L::None);
  for (int i = 0; i < 12; ++i) add(L::NoRisk, i < 2 ? L::FollowUp : L::NoRisk);
  const auto e = error_patterns(gold, pred);
  const double pct = 100.0 * e.missed_rate();
  const auto m = metrics(confusion(gold, pred));
  const bool ok = e.missed == 5 && e.gold_follow_up == 29 && std::abs(pct - 17.2) <= 0.1 &&
                  std::abs(100.0 * m.miss_rate_class2 - 17.2) <= 0.1;
  return {ok, std::to_string(e.missed) + " of " + std::to_string(e.gold_follow_up) + " -> " + fmt(pct, 2) + "%"};
}

std::pair<bool, std::string> bootstrap_sanity() {
  GenConfig g;
  g.label_prior = {0.0, 0.6, 0.4};
  g.trend_rate = 0.0;

  // self-comparison
  bool self_zero = true;
  {
    g.seed = 5;
    const auto corpus = corpus_with_lesions(g, 500);
    const auto gold = gold_lesion_labels(corpus);
    const auto tagged = tag_corpus(corpus);
    const auto bundles = build_prompts(tagged, PromptSetting::WithAnatomy);
    const auto noisy = oracle_predictions(corpus, tagged, bundles, 0.3, 1, "b");
    for (std::uint64_t seed : {0ull, 1ull, 7ull, 12345ull, 0xffffffffffffffffull}) {
      const auto r = bootstrap_pairwise(gold, noisy, noisy, {1000, seed});
      self_zero = self_zero && r.ci_low == 0.0 && r.ci_high == 0.0;
    }
  }

  int positive = 0;
  double slowest = 0.0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    g.seed = 5000 + s;
    const auto corpus = corpus_with_lesions(g, 500);
    const auto gold = gold_lesion_labels(corpus);
    const auto tagged = tag_corpus(corpus);
    const auto bundles = build_prompts(tagged, PromptSetting::WithAnatomy);
    const auto a = oracle_predictions(corpus, tagged, bundles, 0.0, derive_seed(s, 1), "oracle-0");
    const auto b = oracle_predictions(corpus, tagged, bundles, 0.3, derive_seed(s, 2), "oracle-0.3");
    const auto t0 = Clock::now();
    const auto r = bootstrap_pairwise(gold, a, b, {1000, s});
    slowest = std::max(slowest, seconds_since(t0));
    if (r.pool_size != 500) return {false, "pool size " + std::to_string(r.pool_size)};
    if (r.ci_low > 0.0) ++positive;
  }
  return {self_zero && positive >= 95 && slowest < 5.0,
          std::string("self CI [0,0] ") + (self_zero ? "yes" : "no") + ", ci_low > 0 in " + std::to_string(positive) +
              "/100 seeds, slowest n=1000 run " + fmt(slowest, 3) + " s"};
}

// ---------------------------------------------------------------------------
// Parser robustness corpus

struct Crafted {
  std::string text;
  std::array<int, 7> warnings{};  // by WarningKind
  std::map<std::string, L> labels;
};

// Lesions: LESION1 liver (id "liv"), LESION2 kidney ("kid"), LESION3 other ("oth").
RadiologyReport robustness_report(const std::string& id) {
  auto r = testing::report(id, "Liver cyst. Renal mass. Soft tissue nodule.");
  r.lesions.push_back(testing::lesion(r.text, "Liver cyst", "liv", Anatomy::Liver, L::None));
  r.lesions.push_back(testing::lesion(r.text, "Renal mass", "kid", Anatomy::Kidney, L::None));
  r.lesions.push_back(testing::lesion(r.text, "Soft tissue nodule", "oth", Anatomy::Other, L::None));
  return r;
}

void bump(Crafted& c, WarningKind k, int n = 1) { c.warnings[static_cast<std::size_t>(k)] += n; }

Crafted craft(int i) {
  Rng rng(derive_seed(99, static_cast<std::uint64_t>(i)));
  Crafted c;
  const char q = i % 2 == 0 ? '\'' : '"';
  const auto quoted = [&](const std::string& s) { return std::string(1, q) + s + std::string(1, q); };

  // blocks in canonical order; Thyroid, Pancreas, Adrenal may be dropped
  std::vector<std::pair<Anatomy, std::vector<std::pair<std::string, std::string>>>> blocks;
  for (const auto a : kAllAnatomies) blocks.push_back({a, {}});
  const std::array<std::string, 3> tags{"LESION1", "LESION2", "LESION3"};
  const std::array<std::string, 3> ids{"liv", "kid", "oth"};
  const std::array<Anatomy, 3> homes{Anatomy::Liver, Anatomy::Kidney, Anatomy::Other};
  auto block = [&](Anatomy a) -> auto& {
    for (auto& b : blocks) {
      if (b.first == a) return b.second;
    }
    throw std::logic_error("block");
  };

  for (std::size_t j = 0; j < 3; ++j) {
    const auto label = label_from_int(rng.uniform_int(0, 2));
    c.labels[ids[j]] = label;
    if (label != L::None) block(homes[j]).push_back({tags[j], std::to_string(to_int(label))});
  }
  // LESION1 also listed under Other as 2
  if (i % 7 == 3) {
    if (c.labels["liv"] != L::None) bump(c, WarningKind::DuplicateMention);
    bump(c, WarningKind::AnatomyMismatch);
    block(Anatomy::Other).push_back({"LESION1", "2"});
    c.labels["liv"] = L::FollowUp;
  }
  // bogus tags into Lung
  const std::array<std::string, 3> bogus{"LESION9", "LESION0", "NODULE"};
  const int n_bogus = (i / 4) % 3;
  for (int b = 0; b < n_bogus; ++b) block(Anatomy::Lung).push_back({bogus[static_cast<std::size_t>(b)], "1"});
  bump(c, WarningKind::UnknownTag, n_bogus);
  // out-of-range labels on real tags, also into Lung
  const std::array<std::string, 5> bad_values{"3", "0", "-1", quoted("2"), "1.5"};
  const int n_bad = (i / 12) % 4;
  for (int b = 0; b < n_bad; ++b) {
    block(Anatomy::Lung).push_back({tags[static_cast<std::size_t>(b)], bad_values[static_cast<std::size_t>((i + b) % 5)]});
  }
  bump(c, WarningKind::InvalidLabel, n_bad);

  const int n_missing = i % 4;
  const std::array<Anatomy, 3> droppable{Anatomy::Thyroid, Anatomy::Pancreas, Anatomy::Adrenal};
  for (int m = 0; m < n_missing; ++m) {
    const auto a = droppable[static_cast<std::size_t>(m)];
    blocks.erase(std::find_if(blocks.begin(), blocks.end(), [&](const auto& b) { return b.first == a; }));
  }
  bump(c, WarningKind::MissingAnatomyKey, n_missing);

  std::string s = "{\n";
  bool first = true;
  for (const auto& [a, entries] : blocks) {
    s += first ? " " : ",\n ";
    first = false;
    s += quoted(anatomy_key(a)) + ": {";
    for (std::size_t e = 0; e < entries.size(); ++e) {
      s += (e ? ", " : "") + quoted(entries[e].first) + ":" + entries[e].second;
    }
    s += "}";
  }
  if (i % 5 == 4) {
    s += ",\n " + quoted("Spleen Inci") + ": {" + quoted("LESION2") + ":2}";
    bump(c, WarningKind::UnknownAnatomyKey);
  }
  s += "\n}";
  if (i % 3 != 0) s += "\n\nReasoning: the liver cyst is described as new; no prior comparison.";
  c.text = s;
  return c;
}

std::vector<Crafted> robustness_corpus() {
  std::vector<Crafted> out;
  for (int i = 0; i < 45; ++i) out.push_back(craft(i));
  const std::map<std::string, L> zeros{{"liv", L::None}, {"kid", L::None}, {"oth", L::None}};
  auto malformed = [&](std::string text) {
    Crafted c;
    c.text = std::move(text);
    c.labels = zeros;
    bump(c, WarningKind::MalformedBlock);
    return c;
  };
  out.push_back(malformed("No incidentalomas were identified in this report."));
  out.push_back(malformed("{'Lung Inci': {}, 'Liver Inci': {\"LESION1\":1}"));
  out.push_back(malformed("{'Lung Inci' {}, 'Liver Inci': {}}"));
  {
    Crafted c;
    c.text =
        "{'Lung Inci': {}, 'Liver Inci': [1], 'Kidney Inci': {}, 'Adrenal Inci': {}, 'Pancreas Inci': {}, "
        "'Thyroid Inci': {}, 'Other Inci': {'LESION3': 1}}";
    c.labels = zeros;
    c.labels["oth"] = L::NoRisk;
    bump(c, WarningKind::MalformedBlock);
    out.push_back(c);
  }
  {
    Crafted c;
    c.text =
        "Here is the result:\n{\"lung_inci\": {}, \"LIVER INCI\": {}, \"Kidney Inci\": {\" lesion2 \": 2}, "
        "\"Adrenal Inci\": {}, \"Pancreas Inci\": {}, \"Thyroid Inci\": {}, \"Others Inci\": {}}\nDone.";
    c.labels = zeros;
    c.labels["kid"] = L::FollowUp;
    out.push_back(c);
  }
  return out;
}

std::pair<bool, std::string> parser_robustness() {
  const auto cases = robustness_corpus();
  std::vector<RadiologyReport> corpus;
  std::vector<TaggedReport> tagged;
  std::vector<InferOutcome> outcomes;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const auto id = "P" + std::to_string(i);
    corpus.push_back(robustness_report(id));
    tagged.push_back(tag_lesions(corpus.back()));
    InferOutcome o;
    o.report_id = id;
    o.attempts = 1;
    o.completion = RawCompletion{id, cases[i].text};
    outcomes.push_back(std::move(o));
  }
  const auto records = parse_completions(outcomes, tagged, corpus, "crafted");
  int label_mismatch = 0, warning_mismatch = 0, total_warnings = 0;
  std::string first_bad;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    std::array<int, 7> got{};
    for (const auto& w : records[i].warnings) ++got[static_cast<std::size_t>(w.kind)];
    for (const int n : got) total_warnings += n;
    if (records[i].lesion_labels != cases[i].labels) {
      ++label_mismatch;
      if (first_bad.empty()) first_bad = "labels of case " + std::to_string(i);
    }
    if (got != cases[i].warnings) {
      ++warning_mismatch;
      if (first_bad.empty()) first_bad = "warnings of case " + std::to_string(i);
    }
  }
  const bool ok = cases.size() == 50 && label_mismatch == 0 && warning_mismatch == 0;
  return {ok, std::to_string(cases.size()) + " completions, " + std::to_string(total_warnings) + " warnings, " +
                  std::to_string(label_mismatch) + " label mismatches, " + std::to_string(warning_mismatch) +
                  " warning-count mismatches" + (first_bad.empty() ? "" : " (first: " + first_bad + ")")};
}

// ---------------------------------------------------------------------------

std::pair<bool, std::string> sampling_brute_force() {
  GenConfig g;
  g.seed = 31;
  g.n_reports = 1000;
  const auto corpus = generate(g);
  const RuleRecommendationDetector detector;
  const auto res = run_pipeline(corpus, detector);
  std::vector<std::string> want, got;
  for (const auto& r : corpus) {
    if (has_target_lesion(r) && has_fresh_target_lesion(r) && lacks_neoplastic_indication(r) &&
        has_recommendation(r, detector)) {
      want.push_back(r.report_id);
    }
  }
  for (const auto& r : res.reports) got.push_back(r.report_id);
  bool monotone = res.trace.stages.size() == 4 && res.trace.stages.front().reports_in == corpus.size();
  std::string counts = std::to_string(corpus.size());
  for (std::size_t s = 0; s < res.trace.stages.size(); ++s) {
    const auto& st = res.trace.stages[s];
    monotone = monotone && st.reports_out <= st.reports_in;
    if (s > 0) monotone = monotone && st.reports_in == res.trace.stages[s - 1].reports_out;
    counts += " -> " + std::to_string(st.reports_out);
  }
  return {want == got && monotone, "stages " + counts + ", brute force " + std::to_string(want.size()) +
                                       (want == got ? " (equal)" : " (differs)")};
}

std::pair<bool, std::string> round_trips() {
  GenConfig g;
  g.seed = 8;
  g.n_reports = 300;
  const auto corpus = generate(g);

  testing::TempPath corpus_path("acc_corpus");
  save_corpus(corpus, corpus_path);
  const auto loaded = load_corpus(corpus_path);
  testing::TempPath again("acc_corpus2");
  save_corpus(loaded, again);
  const bool corpus_ok = loaded == corpus && io::read_file(corpus_path) == io::read_file(again);

  const auto tagged = tag_corpus(corpus);
  bool tag_ok = true;
  for (std::size_t i = 0; i < corpus.size(); ++i) tag_ok = tag_ok && strip_tags(tagged[i].tagged.tagged_text) == corpus[i].text;

  const auto bundles = build_prompts(tagged, PromptSetting::WithAnatomy);
  const OracleTransport source(corpus, 0.2, 3, "recorded");
  testing::TempPath cassette("acc_cassette");
  record_cassette(bundles, source, cassette);
  const ReplayTransport replay(cassette, "recorded");
  const auto original = infer(bundles, source, 4);
  const auto replayed = infer(bundles, replay, 4);
  bool cassette_ok = replay.size() == bundles.size();
  for (std::size_t i = 0; i < bundles.size(); ++i) {
    cassette_ok = cassette_ok && replayed[i].ok() && replayed[i].completion->text == original[i].completion->text;
  }
  return {corpus_ok && tag_ok && cassette_ok, std::string("corpus ") + (corpus_ok ? "identical" : "differs") +
                                                  ", tag/strip " + (tag_ok ? "identical" : "differs") + ", cassette " +
                                                  (cassette_ok ? "identical" : "differs") + " over " +
                                                  std::to_string(corpus.size()) + " reports"};
}

}  // namespace

int main() {
  criterion("oracle end-to-end", e2e_oracle);
  criterion("aggregation brute force", aggregation_brute_force);
  criterion("aggregation example", aggregation_example);
  criterion("gradient checks", gradient_checks);
  criterion("loss identities", loss_identities);
  criterion("ensemble tie rule", tie_rule);
  criterion("ensemble improvement", ensemble_improvement);
  criterion("incidentaloma macro-F1 arithmetic", metric_arithmetic);
  criterion("miss-rate arithmetic", miss_rate);
  criterion("bootstrap sanity", bootstrap_sanity);
  criterion("parser robustness", parser_robustness);
  criterion("sampling filters", sampling_brute_force);
  criterion("round trips", round_trips);
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return std::min(failures, 100);
}
