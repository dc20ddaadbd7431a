#include "percept/gateway.hpp"

#include <algorithm>
#include <condition_variable>
#include <cstdlib>
#include <filesystem>
#include <thread>

#include "httplib.h"
#include "json.hpp"

#include "percept/digest.hpp"
#include "percept/jsonl.hpp"
#include "percept/rng.hpp"

namespace percept {

using nlohmann::json;

std::string to_string(BackendKind kind) {
  switch (kind) {
    case BackendKind::Http: return "http";
    case BackendKind::Scripted: return "scripted";
    case BackendKind::Synthetic: return "synthetic";
  }
  return "?";
}

std::string request_digest(const ChatRequest& request) {
  Fnv64 h;
  h.feed(request.model_id);
  h.feed(request.system_prompt ? *request.system_prompt : std::string("\x01"));
  h.feed(request.user_prompt);
  h.feed(request.sampling.temperature);
  h.feed(request.sampling.top_p);
  h.feed(static_cast<long long>(request.sampling.max_new_tokens));
  h.feed(request.sampling.repetition_penalty);
  h.feed(request.sampling.presence_penalty);
  h.feed(request.sampling.frequency_penalty);
  h.feed(static_cast<long long>(request.iteration));
  return h.hex();
}

// ---------------------------------------------------------------------------
// HTTP backend

namespace {

struct ParsedUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

ParsedUrl split_url(const std::string& url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos)
    throw GatewayError("endpoint url must include a scheme: " + url);
  auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/v1/chat/completions"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

bool retryable_status(int status) {
  return status == 408 || status == 429 || (status >= 500 && status < 600);
}

}  // namespace

struct HttpBackend::Impl {
  HttpBackendConfig config;
  ParsedUrl url;
  std::string api_key;

  // Token bucket for the requests-per-interval budget.
  std::mutex budget_mutex;
  int budget_used = 0;
  std::chrono::steady_clock::time_point window_start;

  // In-flight bound.
  std::mutex inflight_mutex;
  std::condition_variable inflight_cv;
  int inflight = 0;

  std::mutex jitter_mutex;
  Rng jitter;

  explicit Impl(HttpBackendConfig cfg)
      : config(std::move(cfg)),
        url(split_url(config.url)),
        window_start(std::chrono::steady_clock::now()),
        jitter(config.jitter_seed) {
    if (const char* key = std::getenv(config.api_key_env.c_str()))
      api_key = key;
  }

  void acquire_budget() {
    if (config.requests_per_interval <= 0) return;
    std::unique_lock lock(budget_mutex);
    for (;;) {
      auto now = std::chrono::steady_clock::now();
      if (now - window_start >= config.interval) {
        window_start = now;
        budget_used = 0;
      }
      if (budget_used < config.requests_per_interval) {
        ++budget_used;
        return;
      }
      auto wake = window_start + config.interval;
      lock.unlock();
      std::this_thread::sleep_until(wake);
      lock.lock();
    }
  }

  std::chrono::milliseconds backoff_delay(int attempt) {
    auto base = config.backoff_base.count();
    long long delay = base << std::min(attempt, 20);
    delay = std::min<long long>(delay, config.backoff_cap.count());
    double factor;
    {
      std::lock_guard lock(jitter_mutex);
      factor = 0.5 + 0.5 * jitter.uniform01();
    }
    return std::chrono::milliseconds(
        static_cast<long long>(static_cast<double>(delay) * factor));
  }

  struct InFlightGuard {
    Impl& impl;
    explicit InFlightGuard(Impl& impl) : impl(impl) {
      std::unique_lock lock(impl.inflight_mutex);
      impl.inflight_cv.wait(lock, [&] {
        return impl.inflight < impl.config.max_in_flight;
      });
      ++impl.inflight;
    }
    ~InFlightGuard() {
      {
        std::lock_guard lock(impl.inflight_mutex);
        --impl.inflight;
      }
      impl.inflight_cv.notify_one();
    }
  };
};

HttpBackend::HttpBackend(HttpBackendConfig config)
    : impl_(std::make_unique<Impl>(std::move(config))) {}

HttpBackend::~HttpBackend() = default;

RawResponse HttpBackend::complete(const QueryContext& query) {
  const auto& config = impl_->config;
  const ChatRequest& request = query.request;

  json body;
  body["model"] = request.model_id;
  json messages = json::array();
  std::string user_content = request.user_prompt;
  if (request.system_prompt) {
    if (config.supports_system_role)
      messages.push_back({{"role", "system"}, {"content", *request.system_prompt}});
    else
      user_content = *request.system_prompt + "\n\n" + user_content;
  }
  messages.push_back({{"role", "user"}, {"content", user_content}});
  body["messages"] = std::move(messages);
  body["temperature"] = request.sampling.temperature;
  body["top_p"] = request.sampling.top_p;
  body["max_tokens"] = request.sampling.max_new_tokens;
  body["presence_penalty"] = request.sampling.presence_penalty;
  body["frequency_penalty"] = request.sampling.frequency_penalty;
  if (request.sampling.repetition_penalty != 1.0)
    body["repetition_penalty"] = request.sampling.repetition_penalty;
  const std::string payload = body.dump();

  httplib::Headers headers;
  if (!impl_->api_key.empty())
    headers.emplace("Authorization", "Bearer " + impl_->api_key);

  auto start = std::chrono::steady_clock::now();
  int last_status = 0;
  std::string last_error;
  for (int attempt = 0; attempt < config.max_attempts; ++attempt) {
    if (attempt > 0) std::this_thread::sleep_for(impl_->backoff_delay(attempt - 1));
    impl_->acquire_budget();
    Impl::InFlightGuard guard(*impl_);

    httplib::Client client(impl_->url.origin);
    client.set_connection_timeout(std::chrono::duration<double>(config.timeout_seconds));
    client.set_read_timeout(std::chrono::duration<double>(config.timeout_seconds));
    client.set_write_timeout(std::chrono::duration<double>(config.timeout_seconds));

    auto result = client.Post(impl_->url.path, headers, payload, "application/json");
    if (!result) {
      last_status = 0;
      last_error = httplib::to_string(result.error());
      continue;  // transport errors and timeouts are retryable
    }
    last_status = result->status;
    if (result->status == 401 || result->status == 403)
      throw AuthError("authentication failed (" + std::to_string(result->status) +
                          ") for " + config.url,
                      result->status, attempt + 1);
    if (result->status == 200) {
      json parsed;
      try {
        parsed = json::parse(result->body);
      } catch (const json::exception& e) {
        throw GatewayError(std::string("malformed completion body: ") + e.what(),
                           200, attempt + 1);
      }
      if (!parsed.contains("choices") || parsed["choices"].empty())
        throw GatewayError("completion body has no choices", 200, attempt + 1);
      RawResponse response;
      response.text = parsed["choices"][0]["message"]["content"].get<std::string>();
      response.model_id = request.model_id;
      response.latency = std::chrono::duration_cast<std::chrono::microseconds>(
          std::chrono::steady_clock::now() - start);
      response.backend = BackendKind::Http;
      response.request_digest = request_digest(request);
      response.retries = attempt;
      return response;
    }
    if (!retryable_status(result->status))
      throw GatewayError("request failed with status " +
                             std::to_string(result->status),
                         result->status, attempt + 1);
    last_error = "status " + std::to_string(result->status);
  }
  throw GatewayError("retries exhausted (" + std::to_string(config.max_attempts) +
                         " attempts, last: " + last_error + ")",
                     last_status, config.max_attempts);
}

// ---------------------------------------------------------------------------
// Scripted backend

void ScriptedBackend::add_fixture(const std::string& digest, std::string text) {
  fixtures_[digest] = std::move(text);
}

void ScriptedBackend::load_fixture_file(const std::string& path) {
  for (const auto& [line_no, line] : read_jsonl_lines(path)) {
    json j = json::parse(line);
    fixtures_[j.at("digest").get<std::string>()] =
        j.at("text").get<std::string>();
  }
}

RawResponse ScriptedBackend::complete(const QueryContext& query) {
  calls_.fetch_add(1);
  std::string digest = request_digest(query.request);
  RawResponse response;
  response.model_id = query.request.model_id;
  response.backend = BackendKind::Scripted;
  response.request_digest = digest;
  if (auto it = fixtures_.find(digest); it != fixtures_.end()) {
    response.text = it->second;
    return response;
  }
  if (responder_) {
    response.text = responder_(query);
    return response;
  }
  if (default_text_) {
    response.text = *default_text_;
    return response;
  }
  throw GatewayError("no scripted fixture for digest " + digest);
}

// ---------------------------------------------------------------------------
// Synthetic responder

PreferenceMatrix PreferenceMatrix::in_group(
    const std::vector<std::string>& identities, double own, double other,
    double compliance, std::uint64_t seed) {
  PreferenceMatrix matrix;
  matrix.compliance = compliance;
  matrix.seed = seed;
  for (const auto& persona : identities)
    for (const auto& target : identities)
      matrix.bias[persona][target] = persona == target ? own : other;
  for (const auto& target : identities)
    matrix.bias[kDefaultPersonaId][target] = 0.0;
  return matrix;
}

namespace {

Rng per_call_rng(std::uint64_t seed, const std::string& persona_id,
                 const std::string& question_id, int iteration) {
  std::uint64_t h = mix64(seed ^ 0x7065726365707421ULL);
  h = mix64(h, persona_id);
  h = mix64(h, question_id);
  h = mix64(h ^ static_cast<std::uint64_t>(iteration));
  return Rng(h);
}

RawResponse letter_response(char letter, const std::string& model_id) {
  RawResponse response;
  response.text = std::string(1, letter);
  response.model_id = model_id;
  response.backend = BackendKind::Synthetic;
  return response;
}

}  // namespace

RawResponse biased_complete(const PreferenceMatrix& matrix,
                            const std::string& persona_id,
                            const QuestionRecord& question, int iteration) {
  auto row = matrix.bias.find(persona_id);
  if (row == matrix.bias.end())
    throw GatewayError("preference matrix has no row for persona '" +
                       persona_id + "'");
  auto [a, b] = question.target_slots();
  auto bias_of = [&](const std::string& target_id) {
    auto it = row->second.find(target_id);
    if (it == row->second.end())
      throw GatewayError("preference matrix has no entry (" + persona_id +
                         ", " + target_id + ")");
    return it->second;
  };
  double bias_a = bias_of(*a->target_id);
  double bias_b = bias_of(*b->target_id);

  Rng rng = per_call_rng(matrix.seed, persona_id, question.id, iteration);
  if (rng.chance(matrix.compliance))
    return letter_response(to_char(question.gold), "synthetic");

  OptionLabel pick;
  if (bias_a == bias_b) {
    pick = question.unknown_label();
  } else if (question.polarity == Polarity::Positive) {
    pick = bias_a > bias_b ? a->label : b->label;
  } else {
    pick = bias_a < bias_b ? a->label : b->label;
  }
  return letter_response(to_char(pick), "synthetic");
}

RawResponse uniform_incorrect_complete(double compliance, std::uint64_t seed,
                                       const std::string& persona_id,
                                       const QuestionRecord& question,
                                       int iteration) {
  Rng rng = per_call_rng(seed ^ 0x556e69666f726dULL, persona_id, question.id,
                         iteration);
  if (rng.chance(compliance))
    return letter_response(to_char(question.gold), "synthetic");
  OptionLabel wrong[2];
  int count = 0;
  for (const auto& slot : question.options)
    if (slot.label != question.gold) wrong[count++] = slot.label;
  return letter_response(to_char(wrong[rng.below(2)]), "synthetic");
}

RawResponse SyntheticBackend::complete(const QueryContext& query) {
  if (!query.question)
    throw GatewayError("synthetic backend needs the question context");
  RawResponse response;
  if (mode_ == Mode::Preference)
    response = biased_complete(matrix_, query.persona_id, *query.question,
                               query.request.iteration);
  else
    response = uniform_incorrect_complete(matrix_.compliance, matrix_.seed,
                                          query.persona_id, *query.question,
                                          query.request.iteration);
  response.model_id = query.request.model_id;
  response.request_digest = request_digest(query.request);
  return response;
}

// ---------------------------------------------------------------------------
// Response cache

class JsonlWriterHolder {
 public:
  explicit JsonlWriterHolder(const std::string& path) : writer(path) {}
  JsonlWriter writer;
};

ResponseCache::ResponseCache() = default;
ResponseCache::~ResponseCache() = default;

ResponseCache::ResponseCache(const std::string& path) {
  namespace fs = std::filesystem;
  if (fs::exists(path)) {
    for (const auto& [line_no, line] : read_jsonl_lines(path, true)) {
      json j = json::parse(line);
      entries_[j.at("digest").get<std::string>()] =
          j.at("text").get<std::string>();
    }
  }
  writer_ = std::make_unique<JsonlWriterHolder>(path);
}

std::optional<std::string> ResponseCache::lookup(
    const std::string& digest) const {
  std::lock_guard lock(mutex_);
  auto it = entries_.find(digest);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void ResponseCache::insert(const std::string& digest,
                           const std::string& text) {
  std::lock_guard lock(mutex_);
  auto [it, inserted] = entries_.emplace(digest, text);
  if (inserted && writer_) {
    nlohmann::ordered_json j;
    j["digest"] = digest;
    j["text"] = text;
    writer_->writer.append(j.dump());
  }
}

std::size_t ResponseCache::size() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

RawResponse ModelGateway::complete(const QueryContext& query) {
  std::string digest = request_digest(query.request);
  if (cache_) {
    if (auto cached = cache_->lookup(digest)) {
      RawResponse response;
      response.text = *cached;
      response.model_id = query.request.model_id;
      response.backend = backend_.kind();
      response.request_digest = digest;
      return response;
    }
  }
  RawResponse response = backend_.complete(query);
  if (cache_) cache_->insert(digest, response.text);
  return response;
}

}  // namespace percept
