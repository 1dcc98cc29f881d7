#include "inci/pipeline.hpp"

#include <unordered_map>

#include "inci/aggregation.hpp"

namespace inci {

std::vector<TaggedWithLine> tag_corpus(const std::vector<RadiologyReport>& corpus) {
  std::vector<TaggedWithLine> out;
  out.reserve(corpus.size());
  for (const auto& r : corpus) {
    auto tagged = tag_lesions(r);
    auto line = anatomy_map_line(tagged, r);
    out.push_back({std::move(tagged), std::move(line)});
  }
  return out;
}

std::vector<PromptBundle> build_prompts(const std::vector<TaggedWithLine>& tagged, PromptSetting setting,
                                        const GenerationParams& params, AnatomyPlacement placement) {
  std::vector<PromptBundle> out;
  out.reserve(tagged.size());
  for (const auto& t : tagged) out.push_back(build_prompt(t.tagged, t.anatomy_line, setting, params, placement));
  return out;
}

std::vector<PredictionRecord> parse_completions(const std::vector<InferOutcome>& outcomes,
                                                const std::vector<TaggedReport>& tagged,
                                                const std::vector<RadiologyReport>& corpus,
                                                const std::string& model_id) {
  std::unordered_map<std::string, const InferOutcome*> by_id;
  for (const auto& o : outcomes) by_id.emplace(o.report_id, &o);
  std::unordered_map<std::string, const RadiologyReport*> reports;
  for (const auto& r : corpus) reports.emplace(r.report_id, &r);

  std::vector<PredictionRecord> records;
  records.reserve(tagged.size());
  for (const auto& t : tagged) {
    PredictionRecord rec{t.report_id, model_id, {}, {}, std::nullopt};
    const auto fallback = [&](const std::string& why) {
      for (const auto& [tag, lesion_id] : t.tag_map) rec.lesion_labels[lesion_id] = IncidentalomaLabel::None;
      rec.warnings.push_back({WarningKind::MalformedBlock, why});
    };
    const auto it = by_id.find(t.report_id);
    if (it == by_id.end()) {
      fallback("no completion");
    } else if (!it->second->ok()) {
      fallback("inference failed: " + it->second->error);
    } else {
      try {
        const auto output = parse_output(*it->second->completion, t);
        auto labels = to_lesion_labels(output, t);
        rec.lesion_labels = std::move(labels.labels);
        rec.warnings = output.diagnostics;
        rec.warnings.insert(rec.warnings.end(), labels.warnings.begin(), labels.warnings.end());
        const auto rit = reports.find(t.report_id);
        if (rit != reports.end()) {
          const auto mismatches = check_anatomy_placement(output, t, *rit->second);
          rec.warnings.insert(rec.warnings.end(), mismatches.begin(), mismatches.end());
        }
      } catch (const ParseFailure& e) {
        fallback(e.what());
      }
    }
    const auto rit = reports.find(t.report_id);
    if (rit != reports.end()) rec.anatomy_vector = build_report_vector(lesion_predictions(rec, *rit->second));
    records.push_back(std::move(rec));
  }
  return records;
}

EvaluationSummary evaluate(const std::vector<RadiologyReport>& corpus, const PredictionSet& pred) {
  const auto gold = gold_lesion_labels(corpus);
  EvaluationSummary s;
  const auto cm = confusion(gold, pred.labels);
  s.lesion = metrics(cm);
  s.errors = error_patterns(cm);
  s.anatomy = metrics(confusion(to_anatomy_level(gold, corpus), to_anatomy_level(pred.labels, corpus)));
  return s;
}

nlohmann::ordered_json to_json(const EvaluationSummary& s) {
  nlohmann::ordered_json j;
  j["lesion"] = to_json(s.lesion);
  j["anatomy"] = to_json(s.anatomy);
  j["error_patterns"] = to_json(s.errors);
  return j;
}

E2EResult run_e2e(const E2EConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  E2EResult res;
  const auto corpus = generate(cfg.gen);
  res.generated = corpus.size();
  res.sampled = run_pipeline(corpus);
  const auto& sample = res.sampled.reports;

  const auto tagged = tag_corpus(sample);
  const auto bundles = build_prompts(tagged, cfg.setting);
  const OracleTransport oracle(sample, cfg.noise, cfg.oracle_seed);
  const auto outcomes = infer(bundles, oracle, cfg.max_in_flight);

  std::vector<TaggedReport> tags;
  for (const auto& t : tagged) tags.push_back(t.tagged);
  res.predictions = parse_completions(outcomes, tags, sample, oracle.model_name());
  res.summary = evaluate(sample, to_prediction_set(res.predictions));
  res.elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start);
  return res;
}

}  // namespace inci
