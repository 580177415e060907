#include "restgpt/llm_backend.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>

namespace restgpt {
namespace {

struct SlotGuard {
  explicit SlotGuard(std::counting_semaphore<1024>& s) : sem(s) { sem.acquire(); }
  ~SlotGuard() { sem.release(); }
  std::counting_semaphore<1024>& sem;
};

std::optional<BackendKind> backend_kind_from_string(std::string_view s) {
  if (s == "live") return BackendKind::live;
  if (s == "replay") return BackendKind::replay;
  if (s == "scripted") return BackendKind::scripted;
  return std::nullopt;
}

Json result_to_json(const CompletionResult& r) {
  return Json{{"text", r.text},
              {"finish_reason", r.finish_reason},
              {"usage", {{"prompt_units", r.usage.prompt_units}, {"output_units", r.usage.output_units}}},
              {"backend_kind", to_string(r.backend_kind)}};
}

CompletionResult result_from_json(const Json& j) {
  CompletionResult r;
  r.text = j.at("text").get<std::string>();
  r.finish_reason = j.value("finish_reason", "stop");
  if (auto u = j.find("usage"); u != j.end() && u->is_object()) {
    r.usage.prompt_units = u->value("prompt_units", std::size_t{0});
    r.usage.output_units = u->value("output_units", std::size_t{0});
  }
  auto kind = backend_kind_from_string(j.value("backend_kind", "replay"));
  if (!kind) throw std::invalid_argument("unknown backend_kind");
  r.backend_kind = *kind;
  return r;
}

}  // namespace

void CompletionRequest::validate() const {
  if (messages.empty()) throw std::invalid_argument("completion request has no messages");
  if (!(temperature >= 0.0 && temperature <= 2.0)) {
    throw std::invalid_argument("temperature must be within [0, 2]");
  }
}

std::string_view to_string(BackendKind k) {
  switch (k) {
    case BackendKind::live: return "live";
    case BackendKind::replay: return "replay";
    case BackendKind::scripted: return "scripted";
  }
  return "scripted";
}

CacheFormatError::CacheFormatError(const std::string& what, std::size_t line)
    : std::runtime_error("replay cache line " + std::to_string(line) + ": " + what), line_(line) {}

nlohmann::json canonical_request(const CompletionRequest& request) {
  nlohmann::json messages = nlohmann::json::array();
  for (const auto& m : request.messages) {
    messages.push_back({{"role", to_string(m.role)}, {"content", m.content}});
  }
  // nlohmann::json (unlike ordered_json) keeps object keys sorted.
  return {{"messages", messages},
          {"model", request.model_name},
          {"temperature", request.temperature},
          {"max_output_tokens", request.max_output_tokens}};
}

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 0x0f];
  }
  return out;
}

std::string cache_key(const CompletionRequest& request) { return sha256_hex(canonical_request(request).dump()); }

// ---------------------------------------------------------------- scripted

ScriptedBackend::ScriptedBackend(std::vector<std::string> responses) : queue_(responses.begin(), responses.end()) {}

ScriptedBackend::ScriptedBackend(Responder responder) : responder_(std::move(responder)) {}

std::shared_ptr<ScriptedBackend> ScriptedBackend::from_script(const Json& script) {
  if (!script.is_object()) throw std::invalid_argument("script must be a JSON object");
  std::map<std::string, std::string> table;
  for (const auto& [key, value] : script.items()) {
    if (value.is_string()) {
      table[key] = value.get<std::string>();
    } else if (value.is_array()) {
      std::string joined;
      for (const auto& line : value) {
        if (!line.is_string()) throw std::invalid_argument("script entry '" + key + "' must hold strings");
        if (!joined.empty()) joined += '\n';
        joined += line.get<std::string>();
      }
      table[key] = joined;
    } else {
      throw std::invalid_argument("script entry '" + key + "' must be a string or a list of strings");
    }
  }
  return std::make_shared<ScriptedBackend>([table](const CompletionRequest& r) -> std::string {
    for (const std::string& key : {r.tag.parameter + ":" + r.tag.rule_kind, r.tag.parameter + ":*",
                                   "*:" + r.tag.rule_kind, std::string("*")}) {
      if (auto it = table.find(key); it != table.end()) return it->second;
    }
    return "None";
  });
}

CompletionResult ScriptedBackend::complete(const CompletionRequest& request) {
  request.validate();
  auto start = std::chrono::steady_clock::now();
  calls_.fetch_add(1);
  std::size_t now = in_flight_.fetch_add(1) + 1;
  std::size_t seen = max_concurrent_.load();
  while (now > seen && !max_concurrent_.compare_exchange_weak(seen, now)) {
  }
  std::string text;
  {
    std::lock_guard lock(mu_);
    seen_.push_back(request);
    if (!responder_) {
      if (!queue_.empty()) {
        last_ = queue_.front();
        queue_.pop_front();
      }
      text = last_;
    }
  }
  if (responder_) text = responder_(request);
  if (delay_.count() > 0) std::this_thread::sleep_for(delay_);
  in_flight_.fetch_sub(1);

  CompletionResult result;
  result.text = std::move(text);
  result.backend_kind = BackendKind::scripted;
  result.usage.prompt_units = estimate_tokens(request.messages);
  result.usage.output_units = estimate_tokens(result.text);
  result.latency = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start);
  return result;
}

std::vector<CompletionRequest> ScriptedBackend::requests() const {
  std::lock_guard lock(mu_);
  return seen_;
}

// ---------------------------------------------------------------- replay cache

ReplayCache ReplayCache::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read replay cache '" + path + "'");
  ReplayCache cache;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      Json j = Json::parse(line);
      std::string digest = j.at("digest").get<std::string>();
      Json request = j.at("request");
      CompletionResult result = result_from_json(j.at("result"));
      cache.records_[digest] = {std::move(request), std::move(result)};
    } catch (const std::exception& e) {
      throw CacheFormatError(e.what(), n);
    }
  }
  return cache;
}

std::optional<CompletionResult> ReplayCache::lookup(const std::string& digest) const {
  std::lock_guard lock(mu_);
  auto it = records_.find(digest);
  if (it == records_.end()) return std::nullopt;
  return it->second.result;
}

bool ReplayCache::insert(const std::string& digest, Json request, CompletionResult result) {
  std::lock_guard lock(mu_);
  return records_.emplace(digest, Record{std::move(request), std::move(result)}).second;
}

std::size_t ReplayCache::size() const {
  std::lock_guard lock(mu_);
  return records_.size();
}

std::string ReplayCache::serialize() const {
  std::lock_guard lock(mu_);
  std::string out;
  for (const auto& [digest, record] : records_) {
    Json line{{"digest", digest}, {"request", record.request}, {"result", result_to_json(record.result)}};
    out += line.dump();
    out += '\n';
  }
  return out;
}

void ReplayCache::save(const std::string& path) const {
  std::string body = serialize();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write replay cache '" + path + "'");
  out << body;
}

// ---------------------------------------------------------------- replay backend

ReplayBackend::ReplayBackend(std::shared_ptr<ReplayCache> cache, std::shared_ptr<LlmBackend> upstream, bool strict)
    : cache_(std::move(cache)), upstream_(std::move(upstream)), strict_(strict) {
  if (!cache_) throw std::invalid_argument("replay backend needs a cache");
}

CompletionResult ReplayBackend::complete(const CompletionRequest& request) {
  request.validate();
  const std::string key = cache_key(request);
  if (auto hit = cache_->lookup(key)) {
    hit->backend_kind = BackendKind::replay;
    hit->latency = std::chrono::milliseconds(0);
    return *hit;
  }
  misses_.fetch_add(1);
  if (!upstream_) {
    if (strict_) {
      throw CacheMissError("no recorded completion for " + request.tag.descriptor + " [" + request.tag.rule_kind +
                           "] (digest " + key + ")");
    }
    CompletionResult none;
    none.text = "None";
    none.finish_reason = "cache_miss";
    none.backend_kind = BackendKind::replay;
    return none;
  }

  std::promise<CompletionResult> promise;
  std::shared_future<CompletionResult> pending;
  bool owner = false;
  {
    std::lock_guard lock(inflight_mu_);
    if (auto it = inflight_.find(key); it != inflight_.end()) {
      pending = it->second;
    } else {
      pending = promise.get_future().share();
      inflight_[key] = pending;
      owner = true;
    }
  }
  if (!owner) return pending.get();

  auto finish = [&] {
    std::lock_guard lock(inflight_mu_);
    inflight_.erase(key);
  };
  try {
    CompletionResult result;
    if (auto hit = cache_->lookup(key)) {
      result = *hit;
    } else {
      upstream_calls_.fetch_add(1);
      result = upstream_->complete(request);
      cache_->insert(key, canonical_request(request), result);
    }
    promise.set_value(result);
    finish();
    return result;
  } catch (...) {
    promise.set_exception(std::current_exception());
    finish();
    throw;
  }
}

// ---------------------------------------------------------------- bounded

BoundedBackend::BoundedBackend(std::shared_ptr<LlmBackend> inner, std::size_t limit)
    : inner_(std::move(inner)), slots_(static_cast<std::ptrdiff_t>(std::clamp<std::size_t>(limit, 1, 1024))) {
  if (limit == 0) throw std::invalid_argument("concurrency limit must be at least 1");
}

CompletionResult BoundedBackend::complete(const CompletionRequest& request) {
  SlotGuard guard(slots_);
  return inner_->complete(request);
}

std::chrono::milliseconds RetryPolicy::delay(std::size_t attempt, std::mt19937_64& rng) const {
  double base = static_cast<double>(base_delay.count()) * std::pow(factor, static_cast<double>(attempt - 1));
  std::uniform_real_distribution<double> spread(1.0 - jitter, 1.0 + jitter);
  return std::chrono::milliseconds(static_cast<long long>(std::llround(base * spread(rng))));
}

}  // namespace restgpt
