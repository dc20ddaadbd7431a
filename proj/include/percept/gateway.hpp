#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>

#include "percept/dataset.hpp"

namespace percept {

struct SamplingParams {
  double temperature = 1.0;
  double top_p = 1.0;
  int max_new_tokens = 512;
  double repetition_penalty = 1.0;
  double presence_penalty = 0.0;
  double frequency_penalty = 0.0;

  /// Hosted chat-service defaults: temperature 1.0, top_p 1.0.
  static SamplingParams hosted_default() { return {}; }
  /// Open-weights chat defaults: temperature 0.7, top_p 0.9.
  static SamplingParams open_weights_default() {
    SamplingParams p;
    p.temperature = 0.7;
    p.top_p = 0.9;
    return p;
  }

  friend bool operator==(const SamplingParams&, const SamplingParams&) = default;
};

struct ChatRequest {
  std::string model_id;
  std::optional<std::string> system_prompt;
  std::string user_prompt;
  SamplingParams sampling;
  /// Distinguishes repeat runs of identical prompts in the cache key.
  int iteration = 0;
};

/// Cache/log key for one request.
std::string request_digest(const ChatRequest& request);

enum class BackendKind { Http, Scripted, Synthetic };

std::string to_string(BackendKind kind);

struct RawResponse {
  std::string text;
  std::string model_id;
  std::chrono::microseconds latency{0};
  BackendKind backend = BackendKind::Scripted;
  std::string request_digest;
  int retries = 0;
};

/// Request plus the evaluation context responders may need: the synthetic
/// responder answers from the question itself, not from the rendered prompt.
struct QueryContext {
  ChatRequest request;
  std::string persona_id;
  const QuestionRecord* question = nullptr;
};

class GatewayError : public std::runtime_error {
 public:
  GatewayError(const std::string& what, int status = 0, int attempts = 0)
      : std::runtime_error(what), status(status), attempts(attempts) {}
  int status = 0;
  int attempts = 0;
};

class AuthError : public GatewayError {
 public:
  using GatewayError::GatewayError;
};

class Backend {
 public:
  virtual ~Backend() = default;
  virtual RawResponse complete(const QueryContext& query) = 0;
  virtual BackendKind kind() const = 0;
};

struct HttpBackendConfig {
  std::string url;  // e.g. "http://host:port/v1/chat/completions"
  std::string api_key_env = "PERCEPT_API_KEY";
  bool supports_system_role = true;
  int max_attempts = 5;
  std::chrono::milliseconds backoff_base{250};
  std::chrono::milliseconds backoff_cap{8000};
  double timeout_seconds = 120.0;
  int max_in_flight = 8;
  /// 0 disables rate limiting.
  int requests_per_interval = 0;
  std::chrono::milliseconds interval{1000};
  std::uint64_t jitter_seed = 0;
};

/// OpenAI-style chat-completions client. Retries timeouts, 429 and 5xx with
/// exponential backoff and jitter; authentication failures are not retried.
/// In-flight requests are bounded and a token bucket enforces the
/// requests-per-interval budget.
class HttpBackend : public Backend {
 public:
  explicit HttpBackend(HttpBackendConfig config);
  ~HttpBackend() override;

  RawResponse complete(const QueryContext& query) override;
  BackendKind kind() const override { return BackendKind::Http; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Replay responder: answers from a digest-keyed fixture map, then from a
/// callback, then from a fixed default. Counts invocations so tests can
/// assert that caching prevented calls.
class ScriptedBackend : public Backend {
 public:
  using Responder = std::function<std::string(const QueryContext&)>;

  ScriptedBackend() = default;
  explicit ScriptedBackend(Responder responder)
      : responder_(std::move(responder)) {}

  void add_fixture(const std::string& digest, std::string text);
  /// Loads {"digest": ..., "text": ...} lines.
  void load_fixture_file(const std::string& path);
  void set_default_text(std::string text) { default_text_ = std::move(text); }

  long calls() const { return calls_.load(); }

  RawResponse complete(const QueryContext& query) override;
  BackendKind kind() const override { return BackendKind::Scripted; }

 private:
  std::map<std::string, std::string> fixtures_;
  Responder responder_;
  std::optional<std::string> default_text_;
  std::atomic<long> calls_{0};
};

/// Ground-truth oracle configuration: per-(persona, target) preference in
/// [-1, 1] plus the probability of answering correctly.
struct PreferenceMatrix {
  std::map<std::string, std::map<std::string, double>> bias;
  double compliance = 1.0;
  std::uint64_t seed = 0;

  /// Square in-group matrix over `identities` (+own / -other) plus an
  /// all-zero default-persona row.
  static PreferenceMatrix in_group(const std::vector<std::string>& identities,
                                   double own = 1.0, double other = -1.0,
                                   double compliance = 1.0,
                                   std::uint64_t seed = 0);
};

/// Answers the gold option with probability `compliance`; otherwise picks the
/// option whose target the persona prefers most (positive question) or least
/// (negative question), with ties resolving to the unknown option. Emits the
/// bare option letter. Deterministic per (seed, persona, question, iteration),
/// independent of call order.
RawResponse biased_complete(const PreferenceMatrix& matrix,
                            const std::string& persona_id,
                            const QuestionRecord& question, int iteration = 0);

/// Answers gold with probability `compliance`, otherwise uniformly one of the
/// two incorrect options. Same determinism contract as biased_complete.
RawResponse uniform_incorrect_complete(double compliance, std::uint64_t seed,
                                       const std::string& persona_id,
                                       const QuestionRecord& question,
                                       int iteration = 0);

class SyntheticBackend : public Backend {
 public:
  enum class Mode { Preference, UniformIncorrect };

  explicit SyntheticBackend(PreferenceMatrix matrix,
                            Mode mode = Mode::Preference)
      : matrix_(std::move(matrix)), mode_(mode) {}

  RawResponse complete(const QueryContext& query) override;
  BackendKind kind() const override { return BackendKind::Synthetic; }

 private:
  PreferenceMatrix matrix_;
  Mode mode_;
};

/// Append-only response cache keyed by request digest.
class ResponseCache {
 public:
  /// In-memory only.
  ResponseCache();
  /// Backed by a line-delimited file; existing entries are loaded.
  explicit ResponseCache(const std::string& path);
  ~ResponseCache();

  std::optional<std::string> lookup(const std::string& digest) const;
  void insert(const std::string& digest, const std::string& text);
  std::size_t size() const;

 private:
  mutable std::mutex mutex_;
  std::map<std::string, std::string> entries_;
  std::unique_ptr<class JsonlWriterHolder> writer_;
};

/// Uniform completion interface: cache in front of a backend.
class ModelGateway {
 public:
  explicit ModelGateway(Backend& backend, ResponseCache* cache = nullptr)
      : backend_(backend), cache_(cache) {}

  RawResponse complete(const QueryContext& query);

 private:
  Backend& backend_;
  ResponseCache* cache_;
};

}  // namespace percept
