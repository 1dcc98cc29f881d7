// inci: command-line front end for the incidentaloma pipeline.
//
// Exit codes: 0 success, 1 validation/usage error, 2 transport failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
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
#include "inci/prompting.hpp"
#include "inci/random.hpp"
#include "inci/sampling.hpp"
#include "inci/supervised.hpp"
#include "inci/synthgen.hpp"
#include "inci/tagging.hpp"

using namespace inci;
using ojson = nlohmann::ordered_json;

namespace {

constexpr std::uint64_t kDefaultSeed = 7;

// JSON config: top-level keys are global options or subcommand names holding
// that subcommand's options, e.g. {"infer": {"transport": "oracle", "noise": 0.1}}.
class ConfigJSON : public CLI::Config {
 public:
  std::string to_config(const CLI::App* app, bool default_also, bool, std::string) const override {
    return dump(app, default_also).dump(2) + "\n";
  }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    nlohmann::json j;
    try {
      input >> j;
    } catch (const nlohmann::json::exception& e) {
      throw CLI::ConversionError(std::string("config file is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw CLI::ConversionError("config file must hold a JSON object");
    std::vector<CLI::ConfigItem> items;
    collect(j, "", {}, items);
    return items;
  }

 private:
  static void collect(const nlohmann::json& j, const std::string& name, std::vector<std::string> prefix,
                      std::vector<CLI::ConfigItem>& out) {
    if (j.is_object()) {
      if (!name.empty()) prefix.push_back(name);
      for (const auto& [key, value] : j.items()) collect(value, key, prefix, out);
      return;
    }
    CLI::ConfigItem item;
    item.name = name;
    item.parents = prefix;
    const auto scalar = [&](const nlohmann::json& v) -> std::string {
      if (v.is_string()) return v.get<std::string>();
      if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
      if (v.is_number()) return v.dump();
      throw CLI::ConversionError("config value for '" + name + "' must be a scalar or a list of scalars");
    };
    if (j.is_array()) {
      for (const auto& v : j) item.inputs.push_back(scalar(v));
    } else {
      item.inputs.push_back(scalar(j));
    }
    out.push_back(std::move(item));
  }

  static nlohmann::ordered_json dump(const CLI::App* app, bool default_also) {
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    for (const CLI::Option* opt : app->get_options()) {
      if (!opt->get_configurable() || opt->get_lnames().empty()) continue;
      const auto& name = opt->get_lnames().front();
      if (opt->count() > 0) {
        const auto& r = opt->results();
        j[name] = r.size() == 1 ? nlohmann::ordered_json(r.front()) : nlohmann::ordered_json(r);
      } else if (default_also && !opt->get_default_str().empty()) {
        j[name] = opt->get_default_str();
      }
    }
    for (const CLI::App* sub : app->get_subcommands({})) {
      auto sj = dump(sub, default_also);
      if (!sj.empty()) j[sub->get_name()] = std::move(sj);
    }
    return j;
  }
};

class TransportFailed : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void print_json(const ojson& j) { std::cout << j.dump(2) << "\n"; }

std::vector<TaggedReport> load_tagged(const std::filesystem::path& path) {
  std::vector<TaggedReport> out;
  for (const auto& row : io::read_jsonl(path)) out.push_back(tagged_report_from_json(row));
  return out;
}

std::vector<PromptBundle> load_prompts(const std::filesystem::path& path) {
  std::vector<PromptBundle> out;
  for (const auto& row : io::read_jsonl(path)) out.push_back(prompt_bundle_from_json(row));
  return out;
}

PredictionSet load_prediction_set(const std::filesystem::path& path) {
  return to_prediction_set(load_predictions(path));
}

// ---------------------------------------------------------------------------

struct GenerateOpts {
  GenConfig cfg;
  std::vector<double> prior{0.8, 0.12, 0.08};
  std::string out;
};

void add_gen_flags(CLI::App* sub, GenConfig& cfg, std::vector<double>& prior) {
  sub->add_option("--seed", cfg.seed, "Generator seed")->capture_default_str();
  sub->add_option("--n", cfg.n_reports, "Number of reports")->capture_default_str();
  sub->add_option("--label-prior", prior, "Per-lesion label prior p0 p1 p2")->expected(3)->capture_default_str();
  sub->add_option("--min-lesions", cfg.min_lesions, "Fewest lesions per report")->capture_default_str();
  sub->add_option("--max-lesions", cfg.max_lesions, "Most lesions per report")->capture_default_str();
  sub->add_option("--trend-rate", cfg.trend_rate, "Chance a label-0 lesion carries a size trend")->capture_default_str();
  sub->add_option("--neoplastic-rate", cfg.neoplastic_rate, "Chance of a neoplastic indication")->capture_default_str();
  sub->add_option("--recommendation-rate", cfg.recommendation_rate,
                  "Chance a follow-up report states a recommendation")
      ->capture_default_str();
}

GenConfig finish_gen(GenConfig cfg, const std::vector<double>& prior) {
  std::copy(prior.begin(), prior.end(), cfg.label_prior.begin());
  validate(cfg);
  return cfg;
}

int run_generate(const GenerateOpts& o) {
  const auto cfg = finish_gen(o.cfg, o.prior);
  const auto corpus = generate(cfg);
  save_corpus(corpus, o.out);
  std::cerr << "generated " << corpus.size() << " reports -> " << o.out << "\n";
  return 0;
}

struct SampleOpts {
  std::string corpus, out, trace;
};

int run_sample(const SampleOpts& o) {
  const auto result = run_pipeline(load_corpus(o.corpus));
  save_corpus(result.reports, o.out);
  const auto trace = to_json(result.trace);
  if (!o.trace.empty()) io::write_file(o.trace, trace.dump(2) + "\n");
  print_json(trace);
  return 0;
}

struct TagOpts {
  std::string corpus, out;
};

int run_tag(const TagOpts& o) {
  std::vector<ojson> rows;
  for (const auto& t : tag_corpus(load_corpus(o.corpus))) rows.push_back(to_json(t.tagged, t.anatomy_line));
  io::write_jsonl(o.out, rows);
  std::cerr << "tagged " << rows.size() << " reports -> " << o.out << "\n";
  return 0;
}

struct PromptOpts {
  std::string tagged, out;
  std::string setting = "with-anatomy";
  std::string placement = "before";
  GenerationParams params;
};

int run_prompt(const PromptOpts& o) {
  const auto setting = prompt_setting_from_string(o.setting);
  const auto placement = o.placement == "after" ? AnatomyPlacement::AfterText : AnatomyPlacement::BeforeText;
  validate(o.params);
  std::vector<ojson> rows;
  for (const auto& row : io::read_jsonl(o.tagged)) {
    const auto tagged = tagged_report_from_json(row);
    const auto line = row.contains("anatomy_line") ? row["anatomy_line"].get<std::string>() : std::string{};
    rows.push_back(to_json(build_prompt(tagged, line, setting, o.params, placement)));
  }
  io::write_jsonl(o.out, rows);
  std::cerr << "built " << rows.size() << " prompts (" << o.setting << ") -> " << o.out << "\n";
  return 0;
}

struct InferOpts {
  std::string prompts, out;
  std::string transport = "oracle";
  std::string model;
  std::string endpoint;
  std::string cassette;
  std::string corpus;
  bool record = false;
  int max_in_flight = 4;
  int retries = 2;
  double noise = 0.0;
  std::uint64_t seed = kDefaultSeed;
  int timeout_s = 120;
};

int run_infer(const InferOpts& o) {
  if (o.max_in_flight < 1) throw std::invalid_argument("--max-in-flight must be >= 1");
  if (o.retries < 0) throw std::invalid_argument("--retries must be >= 0");
  const auto bundles = load_prompts(o.prompts);
  RetryPolicy retry;
  retry.max_attempts = o.retries + 1;
  retry.seed = o.seed;

  std::unique_ptr<Transport> transport;
  std::vector<RadiologyReport> corpus;
  if (o.transport != "oracle" && o.model.empty()) {
    throw std::invalid_argument("--transport " + o.transport + " needs --model (cassette keys include it)");
  }
  if (o.transport == "live") {
    transport = std::make_unique<LiveTransport>(LiveTransport::from_env(
        o.model, o.endpoint.empty() ? std::nullopt : std::optional<std::string>(o.endpoint)));
  } else if (o.transport == "replay") {
    if (o.cassette.empty()) throw std::invalid_argument("--transport replay needs --cassette");
    if (o.record) throw std::invalid_argument("--record needs --transport live or oracle");
    transport = std::make_unique<ReplayTransport>(o.cassette, o.model);
  } else if (o.transport == "oracle") {
    if (o.corpus.empty()) throw std::invalid_argument("--transport oracle needs --corpus for gold labels");
    corpus = load_corpus(o.corpus);
    transport = std::make_unique<OracleTransport>(corpus, o.noise, o.seed, o.model.empty() ? "oracle" : o.model);
  } else {
    throw std::invalid_argument("unknown transport '" + o.transport + "'");
  }

  if (o.record) {
    if (o.cassette.empty()) throw std::invalid_argument("--record needs --cassette");
    record_cassette(bundles, *transport, o.cassette, o.max_in_flight, retry);
    std::cerr << "recorded " << bundles.size() << " completions -> " << o.cassette << "\n";
    if (o.out.empty()) return 0;
    // Replay what was just recorded so the completions file matches the cassette.
    transport = std::make_unique<ReplayTransport>(o.cassette, transport->model_name());
  }

  const auto outcomes = infer(bundles, *transport, o.max_in_flight, retry);
  std::vector<ojson> rows;
  std::size_t failed = 0;
  for (const auto& oc : outcomes) {
    rows.push_back(to_json(oc));
    failed += oc.ok() ? 0 : 1;
  }
  if (!o.out.empty()) io::write_jsonl(o.out, rows);
  std::cerr << "inferred " << outcomes.size() - failed << "/" << outcomes.size() << " via " << o.transport << "\n";
  if (failed > 0) throw TransportFailed(std::to_string(failed) + " request(s) failed after retries");
  return 0;
}

struct ParseOpts {
  std::string completions, tagged, corpus, out, model_id;
};

int run_parse(const ParseOpts& o) {
  std::vector<InferOutcome> outcomes;
  for (const auto& row : io::read_jsonl(o.completions)) outcomes.push_back(infer_outcome_from_json(row));
  std::string model_id = o.model_id;
  for (const auto& oc : outcomes) {
    if (!model_id.empty()) break;
    if (oc.ok() && oc.completion->transport_meta.contains("model")) {
      model_id = oc.completion->transport_meta["model"].get<std::string>();
    }
  }
  if (model_id.empty()) model_id = "unknown";
  const auto corpus = o.corpus.empty() ? std::vector<RadiologyReport>{} : load_corpus(o.corpus);
  auto records = parse_completions(outcomes, load_tagged(o.tagged), corpus, model_id);
  std::size_t warnings = 0;
  for (const auto& r : records) warnings += r.warnings.size();
  save_predictions(records, o.out);
  std::cerr << "parsed " << records.size() << " completions, " << warnings << " warning(s) -> " << o.out << "\n";
  return 0;
}

struct AggregateOpts {
  std::string pred, corpus, out;
};

int run_aggregate(const AggregateOpts& o) {
  auto records = load_predictions(o.pred);
  attach_anatomy_vectors(records, load_corpus(o.corpus));
  save_predictions(records, o.out);
  std::cerr << "aggregated " << records.size() << " reports -> " << o.out << "\n";
  return 0;
}

struct TrainOpts {
  std::string corpus, out, cost_matrix;
  std::string objective = "focal";
  std::string select_decode = "argmax";
  TrainConfig cfg;
  double val_fraction = 0.2;
};

int run_train(TrainOpts o) {
  o.cfg.objective = objective_from_string(o.objective);
  o.cfg.selection_decode = decode_mode_from_string(o.select_decode);
  if (!o.cost_matrix.empty()) o.cfg.cost_matrix = load_cost_matrix(o.cost_matrix);
  o.cfg.validate();
  if (o.val_fraction < 0 || o.val_fraction >= 1) throw std::invalid_argument("--val-fraction must lie in [0, 1)");

  // Split by report so a report's lesions stay together.
  const auto corpus = load_corpus(o.corpus);
  std::vector<Example> training, validation;
  for (const auto& report : corpus) {
    Rng rng(derive_seed(o.cfg.seed, report.report_id));
    auto& dest = rng.uniform() < o.val_fraction ? validation : training;
    for (auto& ke : lesion_examples({report}, o.cfg.hash_bits, o.cfg.context_radius)) dest.push_back(ke.example);
  }
  const auto model = train(training, validation, o.cfg);
  save_model(model, o.out);
  ojson j;
  j["training_examples"] = training.size();
  j["validation_examples"] = validation.size();
  j["best_epoch"] = model.best_epoch;
  auto curve = ojson::array();
  for (const double v : model.validation_curve) curve.push_back(round_half_up(v, 3));
  j["validation_incidentaloma_macro_f1"] = std::move(curve);
  j["model"] = o.out;
  print_json(j);
  return 0;
}

struct PredictOpts {
  std::string model, corpus, out, cost_matrix, model_id;
  std::string decode = "argmax";
};

int run_predict(const PredictOpts& o) {
  const auto model = load_model(o.model);
  const auto mode = decode_mode_from_string(o.decode);
  const auto cost = o.cost_matrix.empty() ? model.config.cost_matrix : load_cost_matrix(o.cost_matrix);
  const auto corpus = load_corpus(o.corpus);
  const std::string model_id = o.model_id.empty() ? "softmax-" + std::string(to_string(model.config.objective)) + "-" +
                                                        std::string(to_string(mode))
                                                  : o.model_id;
  std::vector<PredictionRecord> records;
  for (const auto& report : corpus) {
    PredictionRecord rec{report.report_id, model_id, {}, {}, std::nullopt};
    for (const auto& ke : lesion_examples({report}, model.config.hash_bits, model.config.context_radius, false)) {
      rec.lesion_labels[ke.lesion_id] = decode(model.model, ke.example.x, mode, cost);
    }
    rec.anatomy_vector = build_report_vector(lesion_predictions(rec, report));
    records.push_back(std::move(rec));
  }
  save_predictions(records, o.out);
  std::cerr << "predicted " << records.size() << " reports (" << o.decode << ") -> " << o.out << "\n";
  return 0;
}

struct EnsembleOpts {
  std::vector<std::string> preds;
  std::string corpus, out;
};

int run_ensemble(const EnsembleOpts& o) {
  std::vector<PredictionSet> sets;
  for (const auto& p : o.preds) sets.push_back(load_prediction_set(p));
  auto records = to_records(ensemble(sets));
  if (!o.corpus.empty()) attach_anatomy_vectors(records, load_corpus(o.corpus));
  save_predictions(records, o.out);
  std::cerr << "ensembled " << sets.size() << " prediction sets -> " << o.out << "\n";
  return 0;
}

struct EvaluateOpts {
  std::string corpus, pred, reference, out;
  std::string level = "lesion";
  std::string format = "json";
};

int run_evaluate(const EvaluateOpts& o) {
  ojson j;
  std::string table;
  if (!o.reference.empty()) {
    // Agreement between two label sets; the reference plays gold.
    if (o.level != "lesion" && o.level != "document") {
      throw std::invalid_argument("with --reference, --level must be lesion or document");
    }
    const auto level = o.level == "lesion" ? AgreementLevel::Lesion : AgreementLevel::Document;
    const auto m = iaa(load_prediction_set(o.reference).labels, load_prediction_set(o.pred).labels, level);
    j["agreement_level"] = o.level;
    j["metrics"] = to_json(m);
    table = format_metrics_table(m, "agreement (" + o.level + ")");
  } else {
    if (o.corpus.empty()) throw std::invalid_argument("evaluate needs --corpus for gold labels");
    const auto corpus = load_corpus(o.corpus);
    const auto pred = load_prediction_set(o.pred);
    const auto s = evaluate(corpus, pred);
    j["model_id"] = pred.model_id;
    if (o.level == "lesion") {
      j = to_json(s.lesion);
      table = format_metrics_table(s.lesion, pred.model_id + " lesion-level");
    } else if (o.level == "anatomy") {
      j = to_json(s.anatomy);
      table = format_metrics_table(s.anatomy, pred.model_id + " anatomy-level");
    } else if (o.level == "all") {
      j = to_json(s);
      j["model_id"] = pred.model_id;
      table = format_metrics_table(s.lesion, pred.model_id + " lesion-level") + "\n" +
              format_metrics_table(s.anatomy, pred.model_id + " anatomy-level");
    } else {
      throw std::invalid_argument("--level must be lesion, anatomy or all");
    }
  }
  if (!o.out.empty()) io::write_file(o.out, j.dump(2) + "\n");
  if (o.format == "table") std::cout << table;
  else print_json(j);
  return 0;
}

struct BootstrapOpts {
  std::string a, b, corpus, forest;
  int n = 1000;
  std::uint64_t seed = kDefaultSeed;
  bool all_lesions = false;
  std::string macro = "present";
};

int run_bootstrap(const BootstrapOpts& o) {
  if (o.corpus.empty()) throw std::invalid_argument("bootstrap needs --corpus for gold labels");
  const auto gold = gold_lesion_labels(load_corpus(o.corpus));
  BootstrapOptions opts;
  opts.n_resamples = o.n;
  opts.seed = o.seed;
  opts.restrict_to_incidentalomas = !o.all_lesions;
  opts.macro = macro_mode_from_string(o.macro);
  const auto r = bootstrap_pairwise(gold, load_prediction_set(o.a), load_prediction_set(o.b), opts);
  if (!o.forest.empty()) {
    ojson row;
    row["pair"] = r.model_a + " vs " + r.model_b;
    row["mean_delta"] = round_half_up(r.mean_delta, 3);
    row["ci_low"] = round_half_up(r.ci_low, 3);
    row["ci_high"] = round_half_up(r.ci_high, 3);
    // Append so several comparisons accumulate into one plot file.
    std::string existing = std::filesystem::exists(o.forest) ? io::read_file(o.forest) : std::string{};
    io::write_file(o.forest, existing + row.dump() + "\n");
  }
  print_json(to_json(r));
  return 0;
}

struct E2EOpts {
  E2EConfig cfg;
  std::vector<double> prior{0.8, 0.12, 0.08};
  std::uint64_t seed = kDefaultSeed;
  std::size_t n = 200;
  std::string setting = "with-anatomy";
  std::string out_dir;
  std::string format = "json";
};

int run_e2e_cmd(E2EOpts o) {
  o.cfg.gen.seed = o.seed;
  o.cfg.gen.n_reports = o.n;
  o.cfg.gen = finish_gen(o.cfg.gen, o.prior);
  o.cfg.oracle_seed = o.seed;
  o.cfg.setting = prompt_setting_from_string(o.setting);
  if (o.cfg.noise < 0 || o.cfg.noise > 1) throw std::invalid_argument("--noise must lie in [0, 1]");
  const auto res = run_e2e(o.cfg);

  ojson j;
  j["generated_reports"] = res.generated;
  j["sampled_reports"] = res.sampled.reports.size();
  j["sampling"] = to_json(res.sampled.trace);
  j["evaluation"] = to_json(res.summary);
  j["elapsed_ms"] = res.elapsed.count();
  if (!o.out_dir.empty()) {
    const std::filesystem::path dir(o.out_dir);
    std::filesystem::create_directories(dir);
    save_corpus(res.sampled.reports, dir / "sampled.jsonl");
    save_predictions(res.predictions, dir / "predictions.jsonl");
    io::write_file(dir / "evaluation.json", j.dump(2) + "\n");
  }
  if (o.format == "table") {
    std::cout << format_metrics_table(res.summary.lesion, "oracle lesion-level") << "\n"
              << format_metrics_table(res.summary.anatomy, "oracle anatomy-level");
  } else {
    print_json(j);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lesion-level incidentaloma classification pipeline"};
  app.name("inci");
  app.config_formatter(std::make_shared<ConfigJSON>());
  app.set_config("--config", "", "JSON config; flags given on the command line take precedence");
  app.require_subcommand(1, 1);

  GenerateOpts gen;
  auto* c_gen = app.add_subcommand("generate", "Write a seeded synthetic corpus");
  add_gen_flags(c_gen, gen.cfg, gen.prior);
  c_gen->add_option("--out", gen.out, "Corpus JSONL to write")->required();

  SampleOpts smp;
  auto* c_smp = app.add_subcommand("sample", "Apply the four sampling filters; prints the stage trace");
  c_smp->add_option("--corpus", smp.corpus, "Input corpus JSONL")->required()->check(CLI::ExistingFile);
  c_smp->add_option("--out", smp.out, "Filtered corpus JSONL")->required();
  c_smp->add_option("--trace", smp.trace, "Also write the stage trace JSON here");

  TagOpts tag;
  auto* c_tag = app.add_subcommand("tag", "Wrap lesions in <LESIONk> tags");
  c_tag->add_option("--corpus", tag.corpus, "Input corpus JSONL")->required()->check(CLI::ExistingFile);
  c_tag->add_option("--out", tag.out, "Tagged reports JSONL")->required();

  PromptOpts pr;
  auto* c_pr = app.add_subcommand("prompt", "Build prompt bundles from tagged reports");
  c_pr->add_option("--tagged", pr.tagged, "Tagged reports JSONL")->required()->check(CLI::ExistingFile);
  c_pr->add_option("--out", pr.out, "Prompt bundles JSONL")->required();
  c_pr->add_option("--setting", pr.setting, "base | with-anatomy")
      ->check(CLI::IsMember({"base", "with-anatomy"}))
      ->capture_default_str();
  c_pr->add_option("--placement", pr.placement, "Anatomy line before or after the text")
      ->check(CLI::IsMember({"before", "after"}))
      ->capture_default_str();
  c_pr->add_option("--temperature", pr.params.temperature, "Sampling temperature")->capture_default_str();
  c_pr->add_option("--top-p", pr.params.top_p, "Nucleus sampling mass")->capture_default_str();
  c_pr->add_option("--max-tokens", pr.params.max_tokens, "Completion token cap")->capture_default_str();

  InferOpts inf;
  auto* c_inf = app.add_subcommand("infer", "Run prompt bundles through a transport");
  c_inf->add_option("--prompts", inf.prompts, "Prompt bundles JSONL")->required()->check(CLI::ExistingFile);
  c_inf->add_option("--out", inf.out, "Completions JSONL (optional with --record)");
  c_inf->add_option("--transport", inf.transport, "live | replay | oracle")
      ->check(CLI::IsMember({"live", "replay", "oracle"}))
      ->capture_default_str();
  c_inf->add_option("--model", inf.model, "Model name sent to the endpoint and recorded in outputs");
  c_inf->add_option("--endpoint", inf.endpoint, "Live endpoint URL; falls back to LLM_ENDPOINT");
  c_inf->add_option("--cassette", inf.cassette, "Cassette JSONL to replay from or record to");
  c_inf->add_flag("--record", inf.record, "Record completions into --cassette");
  c_inf->add_option("--corpus", inf.corpus, "Gold corpus for the oracle transport");
  c_inf->add_option("--max-in-flight", inf.max_in_flight, "Concurrent requests")->capture_default_str();
  c_inf->add_option("--retries", inf.retries, "Retries per request after the first attempt")->capture_default_str();
  c_inf->add_option("--noise", inf.noise, "Oracle label noise rate")->capture_default_str();
  c_inf->add_option("--seed", inf.seed, "Oracle and retry-jitter seed")->capture_default_str();

  ParseOpts prs;
  auto* c_prs = app.add_subcommand("parse", "Parse completions into lesion-level predictions");
  c_prs->add_option("--completions", prs.completions, "Completions JSONL")->required()->check(CLI::ExistingFile);
  c_prs->add_option("--tagged", prs.tagged, "Tagged reports JSONL")->required()->check(CLI::ExistingFile);
  c_prs->add_option("--corpus", prs.corpus, "Corpus for anatomy checks and anatomy vectors");
  c_prs->add_option("--model-id", prs.model_id, "Model id; defaults to the model named in the completions");
  c_prs->add_option("--out", prs.out, "Predictions JSONL")->required();

  AggregateOpts agg;
  auto* c_agg = app.add_subcommand("aggregate", "Attach anatomy vectors (max over lesions) to predictions");
  c_agg->add_option("--pred", agg.pred, "Predictions JSONL")->required()->check(CLI::ExistingFile);
  c_agg->add_option("--corpus", agg.corpus, "Corpus with verified lesion anatomies")->required()->check(CLI::ExistingFile);
  c_agg->add_option("--out", agg.out, "Predictions JSONL with anatomy_vector")->required();

  TrainOpts trn;
  auto* c_trn = app.add_subcommand("train", "Train the hashed-feature softmax baseline");
  c_trn->add_option("--corpus", trn.corpus, "Training corpus with gold labels")->required()->check(CLI::ExistingFile);
  c_trn->add_option("--out", trn.out, "Model JSON")->required();
  c_trn->add_option("--objective", trn.objective, "weighted-ce | focal | expected-cost")
      ->check(CLI::IsMember({"weighted-ce", "focal", "expected-cost"}))
      ->capture_default_str();
  c_trn->add_option("--gamma", trn.cfg.gamma, "Focal exponent")->capture_default_str();
  c_trn->add_option("--cost-matrix", trn.cost_matrix,
                    "3x3 cost matrix JSON (rows true, columns predicted); default [[0,1,4],[1,0,4],[8,6,0]]");
  c_trn->add_option("--lr", trn.cfg.learning_rate, "Learning rate")->capture_default_str();
  c_trn->add_option("--weight-decay", trn.cfg.weight_decay, "Decoupled weight decay")->capture_default_str();
  c_trn->add_option("--epochs", trn.cfg.epochs, "Maximum epochs")->capture_default_str();
  c_trn->add_option("--batch-size", trn.cfg.batch_size, "Mini-batch size")->capture_default_str();
  c_trn->add_option("--patience", trn.cfg.patience, "Early-stopping patience in epochs")->capture_default_str();
  c_trn->add_option("--clip-norm", trn.cfg.clip_norm, "Global gradient-norm cap")->capture_default_str();
  c_trn->add_option("--hash-bits", trn.cfg.hash_bits, "Feature hash width in bits")->capture_default_str();
  c_trn->add_option("--context-radius", trn.cfg.context_radius, "Context characters per side")->capture_default_str();
  c_trn->add_option("--val-fraction", trn.val_fraction, "Share of reports held out for early stopping")
      ->capture_default_str();
  c_trn->add_option("--select-decode", trn.select_decode, "Decode used when scoring validation epochs")
      ->check(CLI::IsMember({"argmax", "cost-aware"}))
      ->capture_default_str();
  trn.cfg.seed = kDefaultSeed;
  c_trn->add_option("--seed", trn.cfg.seed, "Shuffle and split seed")->capture_default_str();

  PredictOpts prd;
  auto* c_prd = app.add_subcommand("predict", "Label lesions with a trained model");
  c_prd->add_option("--model", prd.model, "Model JSON")->required()->check(CLI::ExistingFile);
  c_prd->add_option("--corpus", prd.corpus, "Corpus to label")->required()->check(CLI::ExistingFile);
  c_prd->add_option("--out", prd.out, "Predictions JSONL")->required();
  c_prd->add_option("--decode", prd.decode, "argmax | cost-aware")
      ->check(CLI::IsMember({"argmax", "cost-aware"}))
      ->capture_default_str();
  c_prd->add_option("--cost-matrix", prd.cost_matrix, "Cost matrix JSON; defaults to the model's");
  c_prd->add_option("--model-id", prd.model_id, "Model id written to predictions");

  EnsembleOpts ens;
  auto* c_ens = app.add_subcommand("ensemble", "Majority-vote two or more prediction files");
  c_ens->add_option("--pred", ens.preds, "Prediction JSONL files (two or more)")
      ->required()
      ->expected(2, CLI::detail::expected_max_vector_size)
      ->check(CLI::ExistingFile);
  c_ens->add_option("--corpus", ens.corpus, "Corpus for anatomy vectors");
  c_ens->add_option("--out", ens.out, "Ensembled predictions JSONL")->required();

  EvaluateOpts ev;
  auto* c_ev = app.add_subcommand("evaluate", "Score predictions against gold, or two label sets against each other");
  c_ev->add_option("--pred", ev.pred, "Predictions JSONL")->required()->check(CLI::ExistingFile);
  c_ev->add_option("--corpus", ev.corpus, "Corpus with gold labels");
  c_ev->add_option("--reference", ev.reference, "Second annotator's predictions JSONL (agreement mode)");
  c_ev->add_option("--level", ev.level, "lesion | anatomy | all; lesion | document with --reference")
      ->capture_default_str();
  c_ev->add_option("--format", ev.format, "json | table")->check(CLI::IsMember({"json", "table"}))->capture_default_str();
  c_ev->add_option("--out", ev.out, "Also write the JSON here");

  BootstrapOpts bs;
  auto* c_bs = app.add_subcommand("bootstrap", "Paired lesion-level bootstrap of macro-F1(A) - macro-F1(B)");
  c_bs->add_option("--a", bs.a, "Predictions JSONL for model A")->required()->check(CLI::ExistingFile);
  c_bs->add_option("--b", bs.b, "Predictions JSONL for model B")->required()->check(CLI::ExistingFile);
  c_bs->add_option("--corpus", bs.corpus, "Corpus with gold labels")->check(CLI::ExistingFile);
  c_bs->add_option("--n", bs.n, "Resamples")->capture_default_str();
  c_bs->add_option("--seed", bs.seed, "Resampling seed")->capture_default_str();
  c_bs->add_flag("--all-lesions", bs.all_lesions, "Resample every lesion, not only gold 1 or 2");
  c_bs->add_option("--macro", bs.macro, "present: classes seen in the resample; all: three classes")
      ->check(CLI::IsMember({"present", "all"}))
      ->capture_default_str();
  c_bs->add_option("--forest", bs.forest, "Append a {pair, mean_delta, ci_low, ci_high} row to this JSONL");

  E2EOpts e2e;
  auto* c_e2e = app.add_subcommand("run-e2e", "generate -> sample -> tag -> prompt -> infer(oracle) -> parse -> evaluate");
  c_e2e->add_option("--seed", e2e.seed, "Seed for generation and the oracle")->capture_default_str();
  c_e2e->add_option("--n", e2e.n, "Reports to generate")->capture_default_str();
  c_e2e->add_option("--noise", e2e.cfg.noise, "Oracle label noise rate")->capture_default_str();
  c_e2e->add_option("--setting", e2e.setting, "base | with-anatomy")
      ->check(CLI::IsMember({"base", "with-anatomy"}))
      ->capture_default_str();
  c_e2e->add_option("--label-prior", e2e.prior, "Per-lesion label prior p0 p1 p2")->expected(3)->capture_default_str();
  c_e2e->add_option("--trend-rate", e2e.cfg.gen.trend_rate, "Chance a label-0 lesion carries a size trend")
      ->capture_default_str();
  c_e2e->add_option("--max-in-flight", e2e.cfg.max_in_flight, "Concurrent oracle requests")->capture_default_str();
  c_e2e->add_option("--out-dir", e2e.out_dir, "Write sampled corpus, predictions and evaluation here");
  c_e2e->add_option("--format", e2e.format, "json | table")->check(CLI::IsMember({"json", "table"}))->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    // CLI11 reports a stray first word as a missing subcommand
    const bool unknown = argc > 1 && argv[1][0] != '-' && app.get_subcommands().empty();
    if (unknown) std::cerr << "error: unknown subcommand '" << argv[1] << "'\n\n" << app.help();
    else std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }

  try {
    if (*c_gen) return run_generate(gen);
    if (*c_smp) return run_sample(smp);
    if (*c_tag) return run_tag(tag);
    if (*c_pr) return run_prompt(pr);
    if (*c_inf) return run_infer(inf);
    if (*c_prs) return run_parse(prs);
    if (*c_agg) return run_aggregate(agg);
    if (*c_trn) return run_train(trn);
    if (*c_prd) return run_predict(prd);
    if (*c_ens) return run_ensemble(ens);
    if (*c_ev) return run_evaluate(ev);
    if (*c_bs) return run_bootstrap(bs);
    if (*c_e2e) return run_e2e_cmd(e2e);
  } catch (const TransportFailed& e) {
    std::cerr << "transport failure: " << e.what() << "\n";
    return 2;
  } catch (const TransportError& e) {
    std::cerr << "transport failure: " << e.what() << "\n";
    return 2;
  } catch (const TransientFailure& e) {
    std::cerr << "transport failure: " << e.what() << "\n";
    return 2;
  } catch (const AuthError& e) {
    std::cerr << "transport failure (auth): " << e.what() << "\n";
    return 2;
  } catch (const CassetteMiss& e) {
    std::cerr << "transport failure: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
