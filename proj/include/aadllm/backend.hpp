#pragma once

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "aadllm/digest.hpp"
#include "aadllm/error.hpp"
#include "aadllm/promptgen.hpp"
#include "aadllm/verdict.hpp"

namespace aadllm::backend {

enum class BackendKind { Remote, Oracle, Replay };

inline std::string_view to_string(BackendKind k) {
  switch (k) {
    case BackendKind::Remote: return "remote";
    case BackendKind::Oracle: return "oracle";
    case BackendKind::Replay: return "replay";
  }
  return "?";
}

inline BackendKind backend_kind_from(std::string_view s) {
  if (s == "remote") return BackendKind::Remote;
  if (s == "oracle") return BackendKind::Oracle;
  if (s == "replay") return BackendKind::Replay;
  fail(ErrorCode::InvalidConfig, "unknown backend '" + std::string(s) + "'");
}

struct BackendConfig {
  BackendKind kind = BackendKind::Oracle;
  std::string endpoint_url = "http://localhost:8000/v1/chat/completions";
  std::string model_name = "meta-llama/Meta-Llama-3-8B-Instruct";
  double temperature = 0.0;
  int max_output_tokens = 512;
  std::chrono::milliseconds timeout{60000};
  int max_retries = 2;
  std::chrono::milliseconds initial_backoff{500};
  std::string api_key_env_var = "AADLLM_API_KEY";
  double oracle_z_threshold = 3.0;
  std::string replay_store_path;
  // When non-empty, every answer from a remote or oracle backend is appended
  // to this store.
  std::string record_store_path;
};

inline void validate(const BackendConfig& c) {
  if (!(c.temperature >= 0.0)) fail(ErrorCode::InvalidConfig, "temperature must be >= 0");
  if (c.max_retries < 0) fail(ErrorCode::InvalidConfig, "max_retries must be >= 0");
  if (c.max_output_tokens <= 0) fail(ErrorCode::InvalidConfig, "max_output_tokens must be > 0");
  if (!(c.oracle_z_threshold > 0.0)) fail(ErrorCode::InvalidConfig, "oracle_z_threshold must be > 0");
  if (c.kind == BackendKind::Replay && c.replay_store_path.empty()) {
    fail(ErrorCode::InvalidConfig, "replay backend needs a store path");
  }
}

struct RawVerdict {
  std::string text;
  BackendKind backend_kind = BackendKind::Oracle;
  std::chrono::microseconds latency{0};
  int attempt = 1;
  std::string prompt_hash;
};

/// Answers an assembled prompt. Implementations must tolerate concurrent
/// queries.
class VerdictBackend {
 public:
  virtual ~VerdictBackend() = default;
  virtual RawVerdict query(const prompt::PromptBundle& bundle) const = 0;
  virtual BackendKind kind() const = 0;
};

// ---------------------------------------------------------------------------
// Oracle

/// Flags a channel when |z| exceeds the threshold or its window maximum lies
/// outside the configured normal range.
inline ChannelFlags oracle_judge(std::span<const prompt::ChannelEntry> entries, double z_threshold) {
  ChannelFlags f;
  for (const auto& e : entries) {
    bool flag = std::abs(e.stats.z_score) > z_threshold;
    if (e.range && (e.stats.window_max > e.range->high || e.stats.window_max < e.range->low)) flag = true;
    f.channels.push_back(e.name);
    f.flags.push_back(flag ? 1 : 0);
  }
  return f;
}

inline ChannelFlags oracle_judge(std::span<const std::string> channels, std::span<const stats::StatDerivatives> stats,
                                 const prompt::DomainContext& context, double z_threshold) {
  if (channels.size() != stats.size()) fail(ErrorCode::ChannelCountMismatch, "channels and stats differ in length");
  std::vector<prompt::ChannelEntry> entries;
  for (std::size_t i = 0; i < channels.size(); ++i) {
    entries.push_back(prompt::ChannelEntry{channels[i], stats[i], context.range_for(channels[i])});
  }
  return oracle_judge(entries, z_threshold);
}

class OracleBackend final : public VerdictBackend {
 public:
  explicit OracleBackend(double z_threshold = 3.0) : z_threshold_(z_threshold) {}

  RawVerdict query(const prompt::PromptBundle& bundle) const override {
    const auto started = std::chrono::steady_clock::now();
    const auto flags = oracle_judge(bundle.entries, z_threshold_);
    RawVerdict v;
    v.text = "Rule check: |z-score| > " + prompt::format_number(z_threshold_) +
             " or maximum outside the configured normal range.\n" + render_verdict_line(flags);
    v.backend_kind = BackendKind::Oracle;
    v.prompt_hash = sha256_hex(bundle.text());
    v.latency = std::chrono::duration_cast<std::chrono::microseconds>(std::chrono::steady_clock::now() - started);
    return v;
  }

  BackendKind kind() const override { return BackendKind::Oracle; }

 private:
  double z_threshold_;
};

// ---------------------------------------------------------------------------
// Replay store
//
// File format: UTF-8 text, one record per line, fields separated by TAB:
//
//   <sha256 hex of prompt>\t<escaped prompt>\t<escaped response>
//
// Escapes: "\\" backslash, "\n" newline, "\r" carriage return, "\t" tab.
// Lines starting with '#' are comments. Records are only ever appended.

inline std::string escape_field(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default: out += c;
    }
  }
  return out;
}

inline std::string unescape_field(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '\\' || i + 1 == s.size()) {
      out += s[i];
      continue;
    }
    switch (s[++i]) {
      case 'n': out += '\n'; break;
      case 'r': out += '\r'; break;
      case 't': out += '\t'; break;
      case '\\': out += '\\'; break;
      default: fail(ErrorCode::Io, "bad escape in replay store");
    }
  }
  return out;
}

/// Append-only prompt/response store. For a prompt seen several times the
/// k-th lookup returns the k-th recorded response (the last one repeats).
class ReplayStore {
 public:
  ReplayStore() = default;
  explicit ReplayStore(std::filesystem::path path, bool must_exist = true) : path_(std::move(path)) {
    std::ifstream in(path_, std::ios::binary);
    if (!in) {
      if (must_exist) fail(ErrorCode::FileNotFound, "replay store " + path_.string());
      return;
    }
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty() || line.front() == '#') continue;
      const auto t1 = line.find('\t');
      const auto t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
      if (t2 == std::string::npos) fail(ErrorCode::Io, "malformed replay record at line " + std::to_string(lineno));
      const auto hash = line.substr(0, t1);
      const auto prompt = unescape_field(std::string_view(line).substr(t1 + 1, t2 - t1 - 1));
      if (sha256_hex(prompt) != hash) {
        fail(ErrorCode::Io, "replay record hash mismatch at line " + std::to_string(lineno));
      }
      responses_[hash].push_back(unescape_field(std::string_view(line).substr(t2 + 1)));
    }
  }

  std::optional<std::string> next(const std::string& hash) const {
    std::lock_guard lock(mutex_);
    auto it = responses_.find(hash);
    if (it == responses_.end()) return std::nullopt;
    auto& cursor = cursors_[hash];
    const auto& list = it->second;
    const auto& text = list[std::min(cursor, list.size() - 1)];
    ++cursor;
    return text;
  }

  void append(const std::string& prompt, const std::string& response) {
    const auto hash = sha256_hex(prompt);
    std::lock_guard lock(mutex_);
    if (!path_.empty()) {
      std::ofstream out(path_, std::ios::binary | std::ios::app);
      if (!out) fail(ErrorCode::Io, "cannot append to replay store " + path_.string());
      out << hash << '\t' << escape_field(prompt) << '\t' << escape_field(response) << '\n';
      out.flush();
    }
    responses_[hash].push_back(response);
  }

  std::size_t size() const {
    std::lock_guard lock(mutex_);
    std::size_t n = 0;
    for (const auto& [h, v] : responses_) n += v.size();
    return n;
  }

 private:
  std::filesystem::path path_;
  mutable std::mutex mutex_;
  std::map<std::string, std::vector<std::string>> responses_;
  mutable std::map<std::string, std::size_t> cursors_;
};

class ReplayBackend final : public VerdictBackend {
 public:
  explicit ReplayBackend(std::shared_ptr<const ReplayStore> store) : store_(std::move(store)) {}
  explicit ReplayBackend(const std::filesystem::path& path)
      : store_(std::make_shared<const ReplayStore>(path)) {}

  RawVerdict query(const prompt::PromptBundle& bundle) const override {
    RawVerdict v;
    v.backend_kind = BackendKind::Replay;
    v.prompt_hash = sha256_hex(bundle.text());
    auto text = store_->next(v.prompt_hash);
    if (!text) fail(ErrorCode::ReplayMiss, v.prompt_hash);
    v.text = std::move(*text);
    return v;
  }

  BackendKind kind() const override { return BackendKind::Replay; }

 private:
  std::shared_ptr<const ReplayStore> store_;
};

/// Forwards to another backend and appends each answer to a store.
class RecordingBackend final : public VerdictBackend {
 public:
  RecordingBackend(std::shared_ptr<const VerdictBackend> inner, std::shared_ptr<ReplayStore> store)
      : inner_(std::move(inner)), store_(std::move(store)) {}

  RawVerdict query(const prompt::PromptBundle& bundle) const override {
    auto v = inner_->query(bundle);
    store_->append(bundle.text(), v.text);
    return v;
  }

  BackendKind kind() const override { return inner_->kind(); }

 private:
  std::shared_ptr<const VerdictBackend> inner_;
  std::shared_ptr<ReplayStore> store_;
};

}  // namespace aadllm::backend
