#ifndef INCI_LLM_CLIENT_HPP
#define INCI_LLM_CLIENT_HPP

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "inci/corpus.hpp"
#include "inci/prompting.hpp"

namespace inci {

struct RawCompletion {
  std::string report_id;
  std::string text;
  std::chrono::milliseconds latency{0};
  nlohmann::ordered_json transport_meta = nlohmann::ordered_json::object();
  int attempts = 1;
};

/// A request that failed for good (after retries, or on a non-retryable status).
class TransportError : public std::runtime_error {
 public:
  TransportError(std::string report_id, int attempts, const std::string& reason);
  const std::string& report_id() const { return report_id_; }
  int attempts() const { return attempts_; }

 private:
  std::string report_id_;
  int attempts_;
};

/// A failure worth retrying: HTTP 429, 5xx, connection errors.
class TransientFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class AuthError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class CassetteMiss : public std::runtime_error {
 public:
  explicit CassetteMiss(const std::string& report_id)
      : std::runtime_error("no cassette entry for report '" + report_id + "'"), report_id_(report_id) {}
  const std::string& report_id() const { return report_id_; }

 private:
  std::string report_id_;
};

/// One request attempt against some backend. Implementations must be safe to
/// call concurrently.
///
/// execute() throws TransientFailure for retryable failures, TransportError
/// for permanent ones, and AuthError / CassetteMiss for conditions that abort
/// the whole batch.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual std::string model_name() const = 0;
  virtual RawCompletion execute(const PromptBundle& bundle) const = 0;
};

/// Chat-completions request body for a bundle.
nlohmann::ordered_json request_body(const PromptBundle& bundle, const std::string& model);

/// Hex SHA-256 of the serialized request body; keys cassette entries.
std::string cassette_key(const PromptBundle& bundle, const std::string& model);

struct LiveConfig {
  std::string endpoint;  // full URL, e.g. https://host/v1/chat/completions
  std::string model;
  std::optional<std::string> api_key;  // sent as "Authorization: Bearer <key>"
  std::chrono::seconds timeout{120};
};

class LiveTransport final : public Transport {
 public:
  explicit LiveTransport(LiveConfig config);

  /// Endpoint from `endpoint` or else LLM_ENDPOINT; key from LLM_API_KEY.
  static LiveTransport from_env(const std::string& model, const std::optional<std::string>& endpoint);

  std::string model_name() const override { return config_.model; }
  RawCompletion execute(const PromptBundle& bundle) const override;

 private:
  LiveConfig config_;
  std::string origin_;  // scheme://host[:port]
  std::string path_;
};

class ReplayTransport final : public Transport {
 public:
  ReplayTransport(const std::filesystem::path& cassette, std::string model);

  std::string model_name() const override { return model_; }
  RawCompletion execute(const PromptBundle& bundle) const override;
  std::size_t size() const { return entries_.size(); }

 private:
  std::string model_;
  std::unordered_map<std::string, std::string> entries_;
};

/// Test double that answers from gold labels.
///
/// Each lesion's gold label (0 when absent) is emitted under its verified
/// anatomy block in the standard JSON shape. With probability `noise` a
/// lesion's label is replaced by one of the other two labels, chosen
/// uniformly. Draws come from a stream seeded by (seed, report_id), so output
/// is independent of call order and thread scheduling.
class OracleTransport final : public Transport {
 public:
  OracleTransport(const std::vector<RadiologyReport>& corpus, double noise, std::uint64_t seed,
                  std::string model = "oracle");

  std::string model_name() const override { return model_; }
  RawCompletion execute(const PromptBundle& bundle) const override;

  /// The labels the oracle emits for a report, keyed by lesion_id.
  std::map<std::string, IncidentalomaLabel> emitted_labels(const RadiologyReport& report) const;

 private:
  std::unordered_map<std::string, RadiologyReport> reports_;
  double noise_;
  std::uint64_t seed_;
  std::string model_;
};

struct RetryPolicy {
  int max_attempts = 3;  // total attempts, including the first
  std::chrono::milliseconds base_delay{250};
  std::chrono::milliseconds max_delay{8000};
  double jitter = 0.5;  // delay is scaled by a factor drawn from [1 - jitter, 1]
  std::uint64_t seed = 0;

  /// Delay after the given failed attempt (1-based).
  std::chrono::milliseconds delay(int failed_attempt, const std::string& report_id) const;
};

struct InferOutcome {
  std::string report_id;
  std::optional<RawCompletion> completion;
  std::string error;  // set when completion is empty
  int attempts = 0;

  bool ok() const { return completion.has_value(); }
};

/// Runs every bundle through the transport with at most `max_in_flight`
/// requests outstanding. Results come back in input order. Requests that
/// still fail after retries become failure entries; AuthError and
/// CassetteMiss stop the batch and are rethrown.
std::vector<InferOutcome> infer(const std::vector<PromptBundle>& bundles, const Transport& transport,
                                int max_in_flight = 4, const RetryPolicy& retry = {});

/// Completions JSONL row: {"report_id","text","latency_ms","attempts","meta","error"}.
nlohmann::ordered_json to_json(const InferOutcome& outcome);
InferOutcome infer_outcome_from_json(const nlohmann::json& j);

/// Runs the bundles through `transport` and stores one record per completion:
/// {"key","request","response_text"}. Successful records are written even if
/// some requests failed; the failure is then reported as TransportError.
void record_cassette(const std::vector<PromptBundle>& bundles, const Transport& transport,
                     const std::filesystem::path& path, int max_in_flight = 4, const RetryPolicy& retry = {});

}  // namespace inci

#endif  // INCI_LLM_CLIENT_HPP
