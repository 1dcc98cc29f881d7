#include "inci/llm_client.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>

#include <httplib.h>
#include <openssl/evp.h>

#include "inci/io.hpp"
#include "inci/parsing.hpp"
#include "inci/random.hpp"
#include "inci/tagging.hpp"

namespace inci {

namespace {

using Clock = std::chrono::steady_clock;

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 0x0F];
  }
  return out;
}

std::chrono::milliseconds elapsed_since(Clock::time_point start) {
  return std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - start);
}

}  // namespace

TransportError::TransportError(std::string report_id, int attempts, const std::string& reason)
    : std::runtime_error("request for report '" + report_id + "' failed after " + std::to_string(attempts) +
                         " attempt(s): " + reason),
      report_id_(std::move(report_id)),
      attempts_(attempts) {}

nlohmann::ordered_json request_body(const PromptBundle& bundle, const std::string& model) {
  nlohmann::ordered_json body;
  body["model"] = model;
  body["messages"] = nlohmann::ordered_json::array({
      {{"role", "system"}, {"content", bundle.system_instruction}},
      {{"role", "user"}, {"content", bundle.user_content}},
  });
  body["temperature"] = bundle.params.temperature;
  body["top_p"] = bundle.params.top_p;
  body["max_tokens"] = bundle.params.max_tokens;
  return body;
}

std::string cassette_key(const PromptBundle& bundle, const std::string& model) {
  return sha256_hex(request_body(bundle, model).dump());
}

// ---------------------------------------------------------------------------
// Live

LiveTransport::LiveTransport(LiveConfig config) : config_(std::move(config)) {
  const auto scheme_end = config_.endpoint.find("://");
  if (scheme_end == std::string::npos) {
    throw std::invalid_argument("endpoint must be an absolute URL: '" + config_.endpoint + "'");
  }
  const auto path_start = config_.endpoint.find('/', scheme_end + 3);
  origin_ = config_.endpoint.substr(0, path_start);
  path_ = path_start == std::string::npos ? "/" : config_.endpoint.substr(path_start);
}

LiveTransport LiveTransport::from_env(const std::string& model, const std::optional<std::string>& endpoint) {
  LiveConfig cfg;
  cfg.model = model;
  if (endpoint && !endpoint->empty()) {
    cfg.endpoint = *endpoint;
  } else if (const char* env = std::getenv("LLM_ENDPOINT"); env != nullptr && *env != '\0') {
    cfg.endpoint = env;
  } else {
    throw std::invalid_argument("no endpoint configured (use --endpoint or LLM_ENDPOINT)");
  }
  if (const char* key = std::getenv("LLM_API_KEY"); key != nullptr && *key != '\0') cfg.api_key = key;
  return LiveTransport(std::move(cfg));
}

RawCompletion LiveTransport::execute(const PromptBundle& bundle) const {
  httplib::Client client(origin_);
  client.set_connection_timeout(config_.timeout);
  client.set_read_timeout(config_.timeout);
  client.set_write_timeout(config_.timeout);
  httplib::Headers headers;
  if (config_.api_key) headers.emplace("Authorization", "Bearer " + *config_.api_key);

  const auto start = Clock::now();
  const auto res = client.Post(path_, headers, request_body(bundle, config_.model).dump(), "application/json");
  if (!res) throw TransientFailure("connection error: " + httplib::to_string(res.error()));

  const int status = res->status;
  if (status == 401 || status == 403) throw AuthError("endpoint rejected credentials (HTTP " + std::to_string(status) + ")");
  if (status == 429 || status >= 500) throw TransientFailure("HTTP " + std::to_string(status));
  if (status != 200) throw TransportError(bundle.report_id, 1, "HTTP " + std::to_string(status) + ": " + res->body);

  RawCompletion out;
  out.report_id = bundle.report_id;
  out.latency = elapsed_since(start);
  try {
    const auto j = nlohmann::json::parse(res->body);
    out.text = j.at("choices").at(0).at("message").at("content").get<std::string>();
    out.transport_meta["model"] = j.value("model", config_.model);
    if (j.contains("usage") && j.at("usage").is_object()) {
      const auto& usage = j.at("usage");
      for (const char* k : {"prompt_tokens", "completion_tokens", "total_tokens"}) {
        if (usage.contains(k)) out.transport_meta[k] = usage.at(k);
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw TransportError(bundle.report_id, 1, std::string("unexpected response body: ") + e.what());
  }
  if (out.text.empty()) throw TransportError(bundle.report_id, 1, "empty completion");
  return out;
}

// ---------------------------------------------------------------------------
// Replay

ReplayTransport::ReplayTransport(const std::filesystem::path& cassette, std::string model) : model_(std::move(model)) {
  for (const auto& row : io::read_jsonl(cassette)) {
    entries_[row.at("key").get<std::string>()] = row.at("response_text").get<std::string>();
  }
}

RawCompletion ReplayTransport::execute(const PromptBundle& bundle) const {
  const auto it = entries_.find(cassette_key(bundle, model_));
  if (it == entries_.end()) throw CassetteMiss(bundle.report_id);
  RawCompletion out;
  out.report_id = bundle.report_id;
  out.text = it->second;
  out.transport_meta["model"] = model_;
  out.transport_meta["replayed"] = true;
  return out;
}

// ---------------------------------------------------------------------------
// Oracle

OracleTransport::OracleTransport(const std::vector<RadiologyReport>& corpus, double noise, std::uint64_t seed,
                                 std::string model)
    : noise_(noise), seed_(seed), model_(std::move(model)) {
  if (!(noise >= 0.0 && noise <= 1.0)) throw std::invalid_argument("oracle noise must lie in [0,1]");
  for (const auto& r : corpus) reports_.emplace(r.report_id, r);
}

std::map<std::string, IncidentalomaLabel> OracleTransport::emitted_labels(const RadiologyReport& report) const {
  const auto tagged = tag_lesions(report);
  Rng rng(derive_seed(seed_, report.report_id));
  std::map<std::string, IncidentalomaLabel> out;
  for (const auto& [tag, lesion_id] : tagged.tag_map) {
    const auto* lesion = report.find_lesion(lesion_id);
    int label = lesion->gold_label ? to_int(*lesion->gold_label) : 0;
    if (rng.bernoulli(noise_)) label = (label + 1 + static_cast<int>(rng.uniform_int(0, 1))) % kNumLabels;
    out[lesion_id] = static_cast<IncidentalomaLabel>(label);
  }
  return out;
}

RawCompletion OracleTransport::execute(const PromptBundle& bundle) const {
  const auto start = Clock::now();
  const auto it = reports_.find(bundle.report_id);
  if (it == reports_.end()) throw TransportError(bundle.report_id, 1, "oracle has no such report");
  const auto& report = it->second;
  const auto tagged = tag_lesions(report);
  const auto labels = emitted_labels(report);

  AnatomyBlocks blocks;
  std::size_t positives = 0;
  for (const auto& [tag, lesion_id] : tagged.tag_map) {
    const auto label = labels.at(lesion_id);
    if (label == IncidentalomaLabel::None) continue;
    blocks[static_cast<std::size_t>(report.find_lesion(lesion_id)->anatomy)][tag] = label;
    ++positives;
  }
  const std::string reasoning = positives == 0
                                    ? "No tagged lesion meets incidentaloma criteria."
                                    : "Labels follow the reference annotation for each tagged lesion.";
  RawCompletion out;
  out.report_id = bundle.report_id;
  out.text = format_model_output(blocks, reasoning);
  out.latency = elapsed_since(start);
  out.transport_meta["model"] = model_;
  return out;
}

// ---------------------------------------------------------------------------
// Batch execution

std::chrono::milliseconds RetryPolicy::delay(int failed_attempt, const std::string& report_id) const {
  const double exp_ms = static_cast<double>(base_delay.count()) * std::ldexp(1.0, std::max(0, failed_attempt - 1));
  const double capped = std::min(exp_ms, static_cast<double>(max_delay.count()));
  Rng rng(derive_seed(derive_seed(seed, report_id), static_cast<std::uint64_t>(failed_attempt)));
  const double factor = 1.0 - jitter * rng.uniform();
  return std::chrono::milliseconds(static_cast<long long>(std::llround(capped * factor)));
}

namespace {

InferOutcome run_with_retries(const PromptBundle& bundle, const Transport& transport, const RetryPolicy& retry) {
  InferOutcome outcome;
  outcome.report_id = bundle.report_id;
  const int max_attempts = std::max(1, retry.max_attempts);
  for (int attempt = 1; attempt <= max_attempts; ++attempt) {
    outcome.attempts = attempt;
    try {
      auto completion = transport.execute(bundle);
      completion.attempts = attempt;
      outcome.completion = std::move(completion);
      outcome.error.clear();
      return outcome;
    } catch (const TransientFailure& e) {
      outcome.error = e.what();
      if (attempt < max_attempts) std::this_thread::sleep_for(retry.delay(attempt, bundle.report_id));
    } catch (const TransportError& e) {
      outcome.error = e.what();
      return outcome;
    }
  }
  outcome.error = TransportError(bundle.report_id, outcome.attempts, outcome.error).what();
  return outcome;
}

}  // namespace

std::vector<InferOutcome> infer(const std::vector<PromptBundle>& bundles, const Transport& transport,
                                int max_in_flight, const RetryPolicy& retry) {
  if (max_in_flight < 1) throw std::invalid_argument("max_in_flight must be >= 1");
  std::vector<InferOutcome> results(bundles.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> abort{false};
  std::exception_ptr fatal;
  std::mutex fatal_mutex;

  auto worker = [&] {
    while (!abort.load()) {
      const auto i = next.fetch_add(1);
      if (i >= bundles.size()) return;
      try {
        results[i] = run_with_retries(bundles[i], transport, retry);
      } catch (...) {
        // AuthError, CassetteMiss and anything unexpected end the batch.
        std::lock_guard lock(fatal_mutex);
        if (!fatal) fatal = std::current_exception();
        abort.store(true);
        return;
      }
    }
  };

  const auto n_workers = std::min<std::size_t>(static_cast<std::size_t>(max_in_flight), bundles.size());
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(n_workers);
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  }
  if (fatal) std::rethrow_exception(fatal);
  return results;
}

nlohmann::ordered_json to_json(const InferOutcome& outcome) {
  nlohmann::ordered_json j;
  j["report_id"] = outcome.report_id;
  if (outcome.completion) {
    j["text"] = outcome.completion->text;
    j["latency_ms"] = outcome.completion->latency.count();
    j["attempts"] = outcome.attempts;
    j["meta"] = outcome.completion->transport_meta;
    j["error"] = nullptr;
  } else {
    j["text"] = nullptr;
    j["latency_ms"] = nullptr;
    j["attempts"] = outcome.attempts;
    j["meta"] = nlohmann::ordered_json::object();
    j["error"] = outcome.error;
  }
  return j;
}

InferOutcome infer_outcome_from_json(const nlohmann::json& j) {
  InferOutcome o;
  o.report_id = j.at("report_id").get<std::string>();
  o.attempts = j.value("attempts", 1);
  if (j.contains("text") && j.at("text").is_string()) {
    RawCompletion c;
    c.report_id = o.report_id;
    c.text = j.at("text").get<std::string>();
    if (j.contains("latency_ms") && j.at("latency_ms").is_number()) {
      c.latency = std::chrono::milliseconds(j.at("latency_ms").get<long long>());
    }
    if (j.contains("meta") && j.at("meta").is_object()) {
      c.transport_meta = nlohmann::ordered_json::parse(j.at("meta").dump());
    }
    c.attempts = o.attempts;
    o.completion = std::move(c);
  } else {
    o.error = j.contains("error") && j.at("error").is_string() ? j.at("error").get<std::string>() : "missing text";
  }
  return o;
}

void record_cassette(const std::vector<PromptBundle>& bundles, const Transport& transport,
                     const std::filesystem::path& path, int max_in_flight, const RetryPolicy& retry) {
  const auto outcomes = infer(bundles, transport, max_in_flight, retry);
  std::vector<nlohmann::ordered_json> rows;
  const InferOutcome* first_failure = nullptr;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    if (!outcomes[i].ok()) {
      if (first_failure == nullptr) first_failure = &outcomes[i];
      continue;
    }
    nlohmann::ordered_json row;
    row["key"] = cassette_key(bundles[i], transport.model_name());
    row["request"] = request_body(bundles[i], transport.model_name());
    row["response_text"] = outcomes[i].completion->text;
    rows.push_back(std::move(row));
  }
  io::write_jsonl(path, rows);
  if (first_failure != nullptr) {
    throw TransportError(first_failure->report_id, first_failure->attempts, first_failure->error);
  }
}

}  // namespace inci
