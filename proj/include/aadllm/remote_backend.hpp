#pragma once

#include <httplib.h>
#include <json.hpp>

#include <chrono>
#include <cstdlib>
#include <string>
#include <thread>

#include "aadllm/backend.hpp"

namespace aadllm::backend {

struct EndpointUrl {
  std::string scheme_host_port;  // e.g. "http://localhost:8000"
  std::string path;              // e.g. "/v1/chat/completions"
};

inline EndpointUrl split_endpoint(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) fail(ErrorCode::InvalidConfig, "endpoint needs a scheme: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

/// Delay before retry number `retry` (1-based): initial * 2^(retry-1).
inline std::chrono::milliseconds backoff_delay(int retry, std::chrono::milliseconds initial) {
  return initial * (1LL << std::min(retry - 1, 20));
}

inline bool is_retryable_status(int status) { return status == 429 || status >= 500; }

/// Chat-completion client: the whole prompt goes out as one user message.
class RemoteBackend final : public VerdictBackend {
 public:
  explicit RemoteBackend(BackendConfig config) : config_(std::move(config)) {
    endpoint_ = split_endpoint(config_.endpoint_url);
    if (!config_.api_key_env_var.empty()) {
      const char* key = std::getenv(config_.api_key_env_var.c_str());
      if (!key || !*key) fail(ErrorCode::AuthMissing, "environment variable " + config_.api_key_env_var + " is not set");
      api_key_ = key;
    }
  }

  static nlohmann::json request_body(const BackendConfig& cfg, const std::string& prompt_text) {
    return {{"model", cfg.model_name},
            {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt_text}}})},
            {"temperature", cfg.temperature},
            {"max_tokens", cfg.max_output_tokens}};
  }

  RawVerdict query(const prompt::PromptBundle& bundle) const override {
    const auto text = bundle.text();
    const auto body = request_body(config_, text).dump();
    const auto started = std::chrono::steady_clock::now();

    httplib::Client client(endpoint_.scheme_host_port);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());
    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

    for (int attempt = 1;; ++attempt) {
      auto res = client.Post(endpoint_.path, headers, body, "application/json");
      const bool last = attempt > config_.max_retries;
      if (!res) {
        const auto err = res.error();
        const bool timed_out = err == httplib::Error::Read || err == httplib::Error::ConnectionTimeout;
        if (last) {
          if (timed_out) fail(ErrorCode::Timeout, "no answer from " + config_.endpoint_url);
          fail(ErrorCode::HttpError, "status 0: " + httplib::to_string(err));
        }
      } else if (res->status == 200) {
        RawVerdict v;
        v.text = extract_content(res->body);
        v.backend_kind = BackendKind::Remote;
        v.attempt = attempt;
        v.prompt_hash = sha256_hex(text);
        v.latency = std::chrono::duration_cast<std::chrono::microseconds>(std::chrono::steady_clock::now() - started);
        return v;
      } else if (last || !is_retryable_status(res->status)) {
        fail(ErrorCode::HttpError, "status " + std::to_string(res->status) + " after " + std::to_string(attempt) +
                                       " attempt(s)");
      }
      std::this_thread::sleep_for(backoff_delay(attempt, config_.initial_backoff));
    }
  }

  BackendKind kind() const override { return BackendKind::Remote; }

  static std::string extract_content(const std::string& body) {
    auto json = nlohmann::json::parse(body, nullptr, false);
    if (json.is_discarded()) fail(ErrorCode::HttpError, "status 200 with a non-JSON body");
    try {
      auto text = json.at("choices").at(0).at("message").at("content").get<std::string>();
      if (text.empty()) fail(ErrorCode::HttpError, "status 200 with empty content");
      return text;
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::HttpError, std::string("unexpected response shape: ") + e.what());
    }
  }

 private:
  BackendConfig config_;
  EndpointUrl endpoint_;
  std::string api_key_;
};

/// Builds the configured backend, wrapped in a recorder when a record store
/// path is set.
inline std::shared_ptr<const VerdictBackend> make_backend(const BackendConfig& cfg) {
  validate(cfg);
  std::shared_ptr<const VerdictBackend> b;
  switch (cfg.kind) {
    case BackendKind::Remote: b = std::make_shared<RemoteBackend>(cfg); break;
    case BackendKind::Oracle: b = std::make_shared<OracleBackend>(cfg.oracle_z_threshold); break;
    case BackendKind::Replay: return std::make_shared<ReplayBackend>(std::filesystem::path(cfg.replay_store_path));
  }
  if (!cfg.record_store_path.empty()) {
    auto store = std::make_shared<ReplayStore>(cfg.record_store_path, false);
    b = std::make_shared<RecordingBackend>(b, store);
  }
  return b;
}

}  // namespace aadllm::backend
