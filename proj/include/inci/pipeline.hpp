#ifndef INCI_PIPELINE_HPP
#define INCI_PIPELINE_HPP

#include <chrono>
#include <cstdint>
#include <string>
#include <vector>

#include "inci/corpus.hpp"
#include "inci/evaluation.hpp"
#include "inci/llm_client.hpp"
#include "inci/parsing.hpp"
#include "inci/predictions.hpp"
#include "inci/prompting.hpp"
#include "inci/sampling.hpp"
#include "inci/synthgen.hpp"
#include "inci/tagging.hpp"

namespace inci {

struct TaggedWithLine {
  TaggedReport tagged;
  std::string anatomy_line;
};

std::vector<TaggedWithLine> tag_corpus(const std::vector<RadiologyReport>& corpus);

std::vector<PromptBundle> build_prompts(const std::vector<TaggedWithLine>& tagged, PromptSetting setting,
                                        const GenerationParams& params = {},
                                        AnatomyPlacement placement = AnatomyPlacement::BeforeText);

/// One prediction record per tagged report. Each completion is parsed and
/// mapped to lesion labels; when a completion is missing or has no usable
/// JSON, every lesion in that report gets 0 and a malformed_block warning
/// says why. Anatomy placement is checked against `corpus` when the report
/// is found there, and anatomy vectors are attached.
std::vector<PredictionRecord> parse_completions(const std::vector<InferOutcome>& outcomes,
                                                const std::vector<TaggedReport>& tagged,
                                                const std::vector<RadiologyReport>& corpus,
                                                const std::string& model_id);

struct EvaluationSummary {
  MetricsReport lesion;
  MetricsReport anatomy;
  ErrorPatterns errors;
};

/// Lesion-level and anatomy-level metrics of `pred` against the corpus gold.
EvaluationSummary evaluate(const std::vector<RadiologyReport>& corpus, const PredictionSet& pred);

nlohmann::ordered_json to_json(const EvaluationSummary& s);

struct E2EConfig {
  GenConfig gen;
  double noise = 0.0;
  std::uint64_t oracle_seed = 7;
  PromptSetting setting = PromptSetting::WithAnatomy;
  int max_in_flight = 4;
};

struct E2EResult {
  std::size_t generated = 0;
  SamplingResult sampled;
  std::vector<PredictionRecord> predictions;
  EvaluationSummary summary;
  std::chrono::milliseconds elapsed{0};
};

/// generate -> sample -> tag -> prompt -> infer (oracle) -> parse ->
/// aggregate -> evaluate, all in memory.
E2EResult run_e2e(const E2EConfig& cfg);

}  // namespace inci

#endif  // INCI_PIPELINE_HPP
