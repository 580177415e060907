#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <deque>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <semaphore>
#include <stdexcept>
#include <string>
#include <vector>

#include "restgpt/prompt_builder.hpp"

namespace restgpt {

/// Logging and scripting label; not part of the cache key.
struct RequestTag {
  std::string descriptor;
  std::string parameter;
  std::string rule_kind;
};

struct CompletionRequest {
  std::vector<ChatMessage> messages;
  std::string model_name = "gpt-3.5-turbo";
  double temperature = 0.0;
  std::size_t max_output_tokens = 512;
  RequestTag tag;

  /// Throws std::invalid_argument if messages are empty or temperature is
  /// outside [0, 2].
  void validate() const;
};

enum class BackendKind { live, replay, scripted };
std::string_view to_string(BackendKind k);

struct Usage {
  std::size_t prompt_units = 0;
  std::size_t output_units = 0;
};

struct CompletionResult {
  std::string text;
  std::string finish_reason = "stop";
  Usage usage;
  BackendKind backend_kind = BackendKind::scripted;
  std::chrono::milliseconds latency{0};
};

class BackendError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class CacheMissError : public BackendError {
 public:
  using BackendError::BackendError;
};
class AttemptsExhaustedError : public BackendError {
 public:
  using BackendError::BackendError;
};
class MalformedResponseError : public BackendError {
 public:
  using BackendError::BackendError;
};
/// A replay-cache file line that does not parse. line() is 1-based.
class CacheFormatError : public std::runtime_error {
 public:
  CacheFormatError(const std::string& what, std::size_t line);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Fields that identify a request for caching: messages, model, temperature,
/// and output cap. The tag is not part of it.
nlohmann::json canonical_request(const CompletionRequest& request);
/// Hex SHA-256 of the canonical request serialization.
std::string cache_key(const CompletionRequest& request);
std::string sha256_hex(std::string_view data);

class LlmBackend {
 public:
  virtual ~LlmBackend() = default;
  virtual CompletionResult complete(const CompletionRequest& request) = 0;
};

/// Test double. Either replays a fixed list of responses in order (the last
/// one repeats once the list is used up) or asks a responder function.
class ScriptedBackend : public LlmBackend {
 public:
  using Responder = std::function<std::string(const CompletionRequest&)>;

  explicit ScriptedBackend(std::vector<std::string> responses);
  explicit ScriptedBackend(Responder responder);

  /// Responses keyed by "<parameter>:<rule_kind>", falling back to
  /// "<parameter>:*", "*:<rule_kind>", "*", and finally "None". A value is a
  /// string or a list of lines.
  static std::shared_ptr<ScriptedBackend> from_script(const Json& script);

  CompletionResult complete(const CompletionRequest& request) override;

  void set_delay(std::chrono::milliseconds d) { delay_ = d; }
  std::size_t call_count() const { return calls_.load(); }
  std::size_t max_concurrent() const { return max_concurrent_.load(); }
  std::vector<CompletionRequest> requests() const;

 private:
  mutable std::mutex mu_;
  std::deque<std::string> queue_;
  std::string last_ = "None";
  Responder responder_;
  std::chrono::milliseconds delay_{0};
  std::atomic<std::size_t> calls_{0};
  std::atomic<std::size_t> in_flight_{0};
  std::atomic<std::size_t> max_concurrent_{0};
  std::vector<CompletionRequest> seen_;
};

/// Persistent digest → result store. Thread-safe.
class ReplayCache {
 public:
  struct Record {
    Json request;
    CompletionResult result;
  };

  ReplayCache() = default;
  ReplayCache(ReplayCache&& other) noexcept : records_(std::move(other.records_)) {}
  /// Throws CacheFormatError naming the line for corrupt entries and
  /// std::runtime_error when the file cannot be opened.
  static ReplayCache load(const std::string& path);

  std::optional<CompletionResult> lookup(const std::string& digest) const;
  /// Returns false (and keeps the old record) if the digest is already present.
  bool insert(const std::string& digest, Json request, CompletionResult result);
  std::size_t size() const;
  /// JSONL, one record per line, sorted by digest.
  std::string serialize() const;
  void save(const std::string& path) const;

 private:
  mutable std::mutex mu_;
  std::map<std::string, Record> records_;
};

/// Serves requests from a cache. With an upstream backend it records misses
/// (record mode); without one, a miss is an error in strict mode and a "None"
/// completion otherwise.
class ReplayBackend : public LlmBackend {
 public:
  ReplayBackend(std::shared_ptr<ReplayCache> cache, std::shared_ptr<LlmBackend> upstream = nullptr,
                bool strict = true);

  CompletionResult complete(const CompletionRequest& request) override;

  std::size_t upstream_calls() const { return upstream_calls_.load(); }
  std::size_t misses() const { return misses_.load(); }

 private:
  std::shared_ptr<ReplayCache> cache_;
  std::shared_ptr<LlmBackend> upstream_;
  bool strict_;
  std::mutex inflight_mu_;
  std::map<std::string, std::shared_future<CompletionResult>> inflight_;
  std::atomic<std::size_t> upstream_calls_{0};
  std::atomic<std::size_t> misses_{0};
};

/// Caps the number of concurrent calls into the wrapped backend.
class BoundedBackend : public LlmBackend {
 public:
  BoundedBackend(std::shared_ptr<LlmBackend> inner, std::size_t limit);
  CompletionResult complete(const CompletionRequest& request) override;

 private:
  std::shared_ptr<LlmBackend> inner_;
  std::counting_semaphore<1024> slots_;
};

struct RetryPolicy {
  std::size_t max_attempts = 5;
  std::chrono::milliseconds base_delay{500};
  double factor = 2.0;
  double jitter = 0.2;

  /// Delay before retry number `attempt` (1-based): base·factor^(attempt-1),
  /// scaled by a uniform factor in [1-jitter, 1+jitter].
  std::chrono::milliseconds delay(std::size_t attempt, std::mt19937_64& rng) const;
};

struct HttpBackendConfig {
  std::string base_url = "https://api.openai.com";
  std::string api_key;
  std::chrono::milliseconds timeout{60000};
  RetryPolicy retry;
  std::size_t concurrency = 4;
  std::uint64_t seed = 0;
};

/// OpenAI-compatible `POST /v1/chat/completions` client.
class HttpBackend : public LlmBackend {
 public:
  using Sleeper = std::function<void(std::chrono::milliseconds)>;

  explicit HttpBackend(HttpBackendConfig config, Sleeper sleeper = {});
  /// Reads the key from RESTGPT_API_KEY; throws BackendError when unset.
  static std::shared_ptr<HttpBackend> from_environment(HttpBackendConfig config);

  CompletionResult complete(const CompletionRequest& request) override;

  std::size_t attempts_made() const { return attempts_.load(); }

  static Json request_body(const CompletionRequest& request);
  /// Throws MalformedResponseError when the body lacks choices[0].message.content.
  static CompletionResult parse_response(const std::string& body);

 private:
  HttpBackendConfig config_;
  Sleeper sleeper_;
  std::counting_semaphore<1024> slots_;
  std::mutex rng_mu_;
  std::mt19937_64 rng_;
  std::atomic<std::size_t> attempts_{0};
};

}  // namespace restgpt
