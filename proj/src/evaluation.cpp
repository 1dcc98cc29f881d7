#include "inci/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include "inci/random.hpp"

namespace inci {

namespace {

void require_same_keys(const LabelTable& gold, const LabelTable& pred) {
  const bool same = gold.size() == pred.size() &&
                    std::equal(gold.begin(), gold.end(), pred.begin(),
                               [](const auto& a, const auto& b) { return a.first == b.first; });
  if (same) return;
  for (const auto& [key, v] : gold) {
    if (!pred.contains(key)) throw KeyMismatch("no prediction for " + key.first + "/" + key.second);
  }
  for (const auto& [key, v] : pred) {
    if (!gold.contains(key)) throw KeyMismatch("no reference label for " + key.first + "/" + key.second);
  }
}

struct ClassScores3 {
  std::array<double, kNumLabels> precision{}, recall{}, f1{};
  std::array<bool, kNumLabels> present{};
};

ClassScores3 class_scores(const ConfusionMatrix& cm) {
  ClassScores3 s;
  for (int k = 0; k < kNumLabels; ++k) {
    const auto tp = static_cast<double>(cm.counts(k, k));
    const auto gold = static_cast<double>(cm.counts.row(k).sum());
    const auto pred = static_cast<double>(cm.counts.col(k).sum());
    s.present[k] = gold > 0 || pred > 0;
    s.precision[k] = pred > 0 ? tp / pred : 0.0;
    s.recall[k] = gold > 0 ? tp / gold : 0.0;
    s.f1[k] = (gold + pred) > 0 ? 2.0 * tp / (gold + pred) : 0.0;
  }
  return s;
}

double macro_of(const ClassScores3& s, MacroMode macro) {
  double sum = 0.0;
  int n = 0;
  for (int k = 0; k < kNumLabels; ++k) {
    if (macro == MacroMode::AllClasses || s.present[k]) {
      sum += s.f1[k];
      ++n;
    }
  }
  return n == 0 ? 0.0 : sum / n;
}

double ratio(std::int64_t num, std::int64_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

LabelTable document_level(const LabelTable& t) {
  LabelTable out;
  for (const auto& [key, label] : t) {
    auto [it, inserted] = out.try_emplace({key.first, ""}, label);
    if (!inserted) it->second = std::max(it->second, label);
  }
  return out;
}

double r3(double x) { return round_half_up(x, 3); }

}  // namespace

ConfusionMatrix confusion(const LabelTable& gold, const LabelTable& pred) {
  require_same_keys(gold, pred);
  ConfusionMatrix cm;
  auto p = pred.begin();
  for (const auto& [key, g] : gold) cm.add(g, (p++)->second);
  return cm;
}

MetricsReport metrics(const ConfusionMatrix& cm, MacroMode macro) {
  if (cm.total() == 0) throw EmptyMatrix();
  const auto s = class_scores(cm);
  MetricsReport m;
  m.precision = s.precision;
  m.recall = s.recall;
  m.f1 = s.f1;
  for (int k = 0; k < kNumLabels; ++k) m.support[k] = cm.counts.row(k).sum();
  m.n = cm.total();
  m.accuracy = ratio(cm.counts.trace(), m.n);
  m.macro_f1 = macro_of(s, macro);
  m.incidentaloma_macro_f1 = incidentaloma_macro_f1(s.f1[1], s.f1[2]);
  m.miss_rate_class2 = ratio(cm.counts(2, 0), m.support[2]);
  m.confusion = cm;
  return m;
}

double incidentaloma_macro_f1(double f1_no_risk, double f1_follow_up) { return (f1_no_risk + f1_follow_up) / 2.0; }

double macro_f1(const ConfusionMatrix& cm, MacroMode macro) { return macro_of(class_scores(cm), macro); }

double round_half_up(double x, int decimals) {
  if (!std::isfinite(x)) return x;
  const double unit = std::pow(10.0, decimals);
  const double s = std::fabs(x) * unit;
  const double f = std::floor(s);
  const double r = (s - f >= 0.5 - 1e-6) ? f + 1 : f;
  return std::copysign(r / unit, x);
}

std::string format_fixed(double x, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, round_half_up(x, decimals));
  return buf;
}

MetricsReport iaa(const LabelTable& a, const LabelTable& b, AgreementLevel level) {
  if (level == AgreementLevel::Lesion) return metrics(confusion(a, b));
  return metrics(confusion(document_level(a), document_level(b)));
}

double ErrorPatterns::missed_rate() const { return ratio(missed, gold_follow_up); }
double ErrorPatterns::underestimation_rate() const { return ratio(underestimated, gold_follow_up); }
double ErrorPatterns::false_positive_rate() const { return ratio(false_positives, gold_none); }
double ErrorPatterns::escalation_rate() const { return ratio(escalated, gold_no_risk); }

ErrorPatterns error_patterns(const ConfusionMatrix& cm) {
  const auto& c = cm.counts;
  ErrorPatterns e;
  e.gold_none = c.row(0).sum();
  e.gold_no_risk = c.row(1).sum();
  e.gold_follow_up = c.row(2).sum();
  e.missed = c(2, 0);
  e.underestimated = c(2, 1);
  e.false_positives = c(0, 1) + c(0, 2);
  e.escalated = c(1, 2);
  return e;
}

ErrorPatterns error_patterns(const LabelTable& gold, const LabelTable& pred) {
  return error_patterns(confusion(gold, pred));
}

double percentile(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) throw std::invalid_argument("percentile of an empty sample");
  const double pos = q / 100.0 * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

BootstrapResult bootstrap_pairwise(const LabelTable& gold, const PredictionSet& a, const PredictionSet& b,
                                   const BootstrapOptions& opts) {
  if (opts.n_resamples <= 0) throw std::invalid_argument("n_resamples must be positive");
  require_same_keys(gold, a.labels);
  require_same_keys(gold, b.labels);

  struct Item {
    int g, pa, pb;
  };
  std::vector<Item> pool;
  auto ia = a.labels.begin();
  auto ib = b.labels.begin();
  for (const auto& [key, g] : gold) {
    const Item item{to_int(g), to_int((ia++)->second), to_int((ib++)->second)};
    if (!opts.restrict_to_incidentalomas || item.g != 0) pool.push_back(item);
  }
  if (pool.empty()) throw EmptyPool();

  std::vector<double> deltas(static_cast<std::size_t>(opts.n_resamples));
  const auto hi = static_cast<std::int64_t>(pool.size()) - 1;
  for (int r = 0; r < opts.n_resamples; ++r) {
    Rng rng(derive_seed(opts.seed, static_cast<std::uint64_t>(r)));
    ConfusionMatrix ca, cb;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      const auto& it = pool[static_cast<std::size_t>(rng.uniform_int(0, hi))];
      ++ca.counts(it.g, it.pa);
      ++cb.counts(it.g, it.pb);
    }
    deltas[static_cast<std::size_t>(r)] = macro_f1(ca, opts.macro) - macro_f1(cb, opts.macro);
  }

  BootstrapResult res;
  res.model_a = a.model_id;
  res.model_b = b.model_id;
  res.n_resamples = opts.n_resamples;
  res.seed = opts.seed;
  res.restricted_to_incidentalomas = opts.restrict_to_incidentalomas;
  res.macro = opts.macro;
  res.pool_size = pool.size();
  double sum = 0.0;
  std::size_t le = 0, ge = 0;
  for (const double d : deltas) {
    sum += d;
    le += d <= 0 ? 1 : 0;
    ge += d >= 0 ? 1 : 0;
  }
  const auto n = static_cast<double>(deltas.size());
  res.mean_delta = sum / n;
  res.p_value = std::min(1.0, 2.0 * static_cast<double>(std::min(le, ge)) / n);
  std::sort(deltas.begin(), deltas.end());
  res.ci_low = percentile(deltas, 2.5);
  res.ci_high = percentile(deltas, 97.5);
  return res;
}

LabelTable to_anatomy_level(const LabelTable& lesion_labels, const std::vector<RadiologyReport>& corpus) {
  LabelTable out;
  for (const auto& report : corpus) {
    AnatomyVector v;
    bool complete = true;
    for (const auto& lesion : report.lesions) {
      const auto it = lesion_labels.find({report.report_id, lesion.lesion_id});
      if (it == lesion_labels.end()) {
        complete = false;
        break;
      }
      v[lesion.anatomy] = std::max(v[lesion.anatomy], it->second);
    }
    if (!complete) continue;
    for (const auto a : kAllAnatomies) out.emplace(ItemKey{report.report_id, std::string(to_string(a))}, v[a]);
  }
  return out;
}

LabelTable restrict_to(const LabelTable& table, const LabelTable& keys) {
  LabelTable out;
  for (const auto& [key, label] : table) {
    if (keys.contains(key)) out.emplace(key, label);
  }
  return out;
}

std::string_view to_string(MacroMode m) { return m == MacroMode::PresentClasses ? "present" : "all"; }

MacroMode macro_mode_from_string(std::string_view s) {
  if (s == "present") return MacroMode::PresentClasses;
  if (s == "all") return MacroMode::AllClasses;
  throw std::invalid_argument("unknown macro mode '" + std::string(s) + "'");
}

nlohmann::ordered_json to_json(const MetricsReport& m) {
  auto triple = [](const std::array<double, kNumLabels>& v) { return nlohmann::ordered_json{r3(v[0]), r3(v[1]), r3(v[2])}; };
  nlohmann::ordered_json j;
  j["n"] = m.n;
  j["support"] = m.support;
  j["precision"] = triple(m.precision);
  j["recall"] = triple(m.recall);
  j["f1"] = triple(m.f1);
  j["accuracy"] = r3(m.accuracy);
  j["macro_f1"] = r3(m.macro_f1);
  j["incidentaloma_macro_f1"] = r3(m.incidentaloma_macro_f1);
  j["miss_rate_class2"] = r3(m.miss_rate_class2);
  auto cm = nlohmann::ordered_json::array();
  for (int r = 0; r < kNumLabels; ++r) {
    cm.push_back({m.confusion.counts(r, 0), m.confusion.counts(r, 1), m.confusion.counts(r, 2)});
  }
  j["confusion"] = std::move(cm);
  return j;
}

nlohmann::ordered_json to_json(const ErrorPatterns& e) {
  nlohmann::ordered_json j;
  j["gold_none"] = e.gold_none;
  j["gold_no_risk"] = e.gold_no_risk;
  j["gold_follow_up"] = e.gold_follow_up;
  j["missed"] = e.missed;
  j["missed_rate"] = r3(e.missed_rate());
  j["underestimated"] = e.underestimated;
  j["underestimation_rate"] = r3(e.underestimation_rate());
  j["false_positives"] = e.false_positives;
  j["false_positive_rate"] = r3(e.false_positive_rate());
  j["escalated"] = e.escalated;
  j["escalation_rate"] = r3(e.escalation_rate());
  return j;
}

nlohmann::ordered_json to_json(const BootstrapResult& r) {
  nlohmann::ordered_json j;
  j["model_a"] = r.model_a;
  j["model_b"] = r.model_b;
  j["mean_delta"] = r3(r.mean_delta);
  j["ci_low"] = r3(r.ci_low);
  j["ci_high"] = r3(r.ci_high);
  j["p_value"] = r3(r.p_value);
  j["n_resamples"] = r.n_resamples;
  j["seed"] = r.seed;
  j["restricted_to_incidentalomas"] = r.restricted_to_incidentalomas;
  j["macro"] = to_string(r.macro);
  j["pool_size"] = r.pool_size;
  return j;
}

std::string format_metrics_table(const MetricsReport& m, const std::string& title) {
  std::string out = title + " (n=" + std::to_string(m.n) + ")\n";
  out += "class  support  precision  recall  f1\n";
  for (int k = 0; k < kNumLabels; ++k) {
    char line[96];
    std::snprintf(line, sizeof line, "%-5d  %7lld  %9s  %6s  %s\n", k, static_cast<long long>(m.support[k]),
                  format_fixed(m.precision[k], 2).c_str(), format_fixed(m.recall[k], 2).c_str(),
                  format_fixed(m.f1[k], 2).c_str());
    out += line;
  }
  out += "accuracy " + format_fixed(m.accuracy, 2) + "  macro-F1 " + format_fixed(m.macro_f1, 2) +
         "  incidentaloma macro-F1 " + format_fixed(m.incidentaloma_macro_f1, 2) + "\n";
  return out;
}

}  // namespace inci
