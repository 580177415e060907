#include <httplib.h>

#include <cstdlib>
#include <thread>

#include "restgpt/llm_backend.hpp"

namespace restgpt {
namespace {

constexpr std::string_view kEndpoint = "/v1/chat/completions";

struct SplitUrl {
  std::string origin;
  std::string prefix;
};

SplitUrl split_base_url(const std::string& url) {
  auto scheme = url.find("://");
  std::size_t host_start = scheme == std::string::npos ? 0 : scheme + 3;
  auto slash = url.find('/', host_start);
  if (slash == std::string::npos) return {url, ""};
  std::string prefix = url.substr(slash);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  // Accept a base URL that already ends in /v1.
  if (prefix.ends_with("/v1")) prefix.resize(prefix.size() - 3);
  return {url.substr(0, slash), prefix};
}

bool transient_status(int status) { return status == 429 || status >= 500; }

}  // namespace

HttpBackend::HttpBackend(HttpBackendConfig config, Sleeper sleeper)
    : config_(std::move(config)),
      sleeper_(std::move(sleeper)),
      slots_(static_cast<std::ptrdiff_t>(std::clamp<std::size_t>(config_.concurrency, 1, 1024))),
      rng_(config_.seed) {
  if (config_.concurrency == 0) throw std::invalid_argument("concurrency limit must be at least 1");
  if (config_.retry.max_attempts == 0) throw std::invalid_argument("retry policy needs at least one attempt");
  if (!sleeper_) sleeper_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

std::shared_ptr<HttpBackend> HttpBackend::from_environment(HttpBackendConfig config) {
  const char* key = std::getenv("RESTGPT_API_KEY");
  if (!key || !*key) throw BackendError("RESTGPT_API_KEY is not set; the live backend needs an API key");
  config.api_key = key;
  return std::make_shared<HttpBackend>(std::move(config));
}

Json HttpBackend::request_body(const CompletionRequest& request) {
  Json messages = Json::array();
  for (const auto& m : request.messages) messages.push_back({{"role", to_string(m.role)}, {"content", m.content}});
  return Json{{"model", request.model_name},
              {"messages", messages},
              {"temperature", request.temperature},
              {"max_tokens", request.max_output_tokens}};
}

CompletionResult HttpBackend::parse_response(const std::string& body) {
  Json j;
  try {
    j = Json::parse(body);
  } catch (const Json::parse_error& e) {
    throw MalformedResponseError(std::string("completion response is not JSON: ") + e.what());
  }
  try {
    const Json& choice = j.at("choices").at(0);
    CompletionResult r;
    r.backend_kind = BackendKind::live;
    const Json& content = choice.at("message").at("content");
    r.text = content.is_null() ? "" : content.get<std::string>();
    r.finish_reason = choice.value("finish_reason", std::string("stop"));
    if (choice.contains("finish_reason") && choice["finish_reason"].is_null()) r.finish_reason = "unknown";
    if (auto u = j.find("usage"); u != j.end() && u->is_object()) {
      r.usage.prompt_units = u->value("prompt_tokens", std::size_t{0});
      r.usage.output_units = u->value("completion_tokens", std::size_t{0});
    }
    if (r.finish_reason == "stop" && content.is_null()) {
      throw MalformedResponseError("completion finished normally but carries no text");
    }
    return r;
  } catch (const Json::exception& e) {
    throw MalformedResponseError(std::string("unexpected completion response shape: ") + e.what());
  }
}

CompletionResult HttpBackend::complete(const CompletionRequest& request) {
  request.validate();
  struct Guard {
    std::counting_semaphore<1024>& s;
    explicit Guard(std::counting_semaphore<1024>& sem) : s(sem) { s.acquire(); }
    ~Guard() { s.release(); }
  } guard(slots_);

  const auto start = std::chrono::steady_clock::now();
  const SplitUrl url = split_base_url(config_.base_url);
  const std::string path = url.prefix + std::string(kEndpoint);
  const std::string body = request_body(request).dump();
  httplib::Headers headers{{"Authorization", "Bearer " + config_.api_key}};

  std::string last_error;
  for (std::size_t attempt = 1; attempt <= config_.retry.max_attempts; ++attempt) {
    attempts_.fetch_add(1);
    httplib::Client client(url.origin);
    auto timeout_s = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
    auto timeout_us = std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout - timeout_s);
    client.set_connection_timeout(timeout_s.count(), timeout_us.count());
    client.set_read_timeout(timeout_s.count(), timeout_us.count());
    client.set_write_timeout(timeout_s.count(), timeout_us.count());

    auto res = client.Post(path, headers, body, "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
    } else if (transient_status(res->status)) {
      last_error = "HTTP " + std::to_string(res->status);
    } else if (res->status != 200) {
      throw BackendError("completion endpoint returned HTTP " + std::to_string(res->status) + ": " + res->body);
    } else {
      CompletionResult result = parse_response(res->body);
      result.latency =
          std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start);
      return result;
    }
    if (attempt < config_.retry.max_attempts) {
      std::chrono::milliseconds wait;
      {
        std::lock_guard lock(rng_mu_);
        wait = config_.retry.delay(attempt, rng_);
      }
      sleeper_(wait);
    }
  }
  throw AttemptsExhaustedError("gave up after " + std::to_string(config_.retry.max_attempts) +
                               " attempts for " + request.tag.descriptor + " [" + request.tag.rule_kind +
                               "]: " + last_error);
}

}  // namespace restgpt
