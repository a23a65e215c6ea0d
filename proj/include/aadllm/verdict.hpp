#pragma once

#include <algorithm>
#include <cctype>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "aadllm/core_model.hpp"
#include "aadllm/error.hpp"

namespace aadllm {

/// Per-channel anomaly flags in prompt order.
struct ChannelFlags {
  std::vector<std::string> channels;
  LabelVector flags;

  std::optional<Label> get(std::string_view name) const {
    for (std::size_t i = 0; i < channels.size(); ++i) {
      if (channels[i] == name) return flags[i];
    }
    return std::nullopt;
  }

  std::size_t flagged_count() const {
    return static_cast<std::size_t>(std::count(flags.begin(), flags.end(), Label{1}));
  }

  friend bool operator==(const ChannelFlags&, const ChannelFlags&) = default;
};

inline constexpr std::string_view kVerdictTag = "VERDICT:";

inline std::string render_verdict_line(const ChannelFlags& f) {
  std::string out(kVerdictTag);
  for (std::size_t i = 0; i < f.channels.size(); ++i) {
    out += i ? "; " : " ";
    out += f.channels[i] + (f.flags[i] ? "=ANOMALOUS" : "=NORMAL");
  }
  return out;
}

namespace verdict_detail {

/// Lower-case, trimmed, internal whitespace runs collapsed to one space.
inline std::string normalize_name(std::string_view s) {
  std::string out;
  bool pending_space = false;
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out += ' ';
    pending_space = false;
    out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

inline std::string_view strip_decoration(std::string_view s) {
  auto deco = [](char c) { return std::isspace(static_cast<unsigned char>(c)) || c == '*' || c == '`' || c == '>'; };
  while (!s.empty() && deco(s.front())) s.remove_prefix(1);
  while (!s.empty() && (deco(s.back()) || s.back() == '.')) s.remove_suffix(1);
  return s;
}

inline bool starts_with_tag(std::string_view line) {
  if (line.size() < kVerdictTag.size()) return false;
  for (std::size_t i = 0; i < kVerdictTag.size(); ++i) {
    if (std::toupper(static_cast<unsigned char>(line[i])) != kVerdictTag[i]) return false;
  }
  return true;
}

}  // namespace verdict_detail

/// Parses the last `VERDICT:` line of a model answer. Every prompted channel
/// must appear exactly once; names match case-insensitively after whitespace
/// normalization.
inline ChannelFlags parse_verdict(std::string_view text, std::span<const std::string> channels) {
  std::optional<std::string_view> verdict;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto pos = text.find('\n', start);
    auto line = verdict_detail::strip_decoration(
        text.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (verdict_detail::starts_with_tag(line)) verdict = line.substr(kVerdictTag.size());
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  if (!verdict) fail(ErrorCode::NoVerdictLine, "no line starting with VERDICT:");

  ChannelFlags out;
  out.channels.assign(channels.begin(), channels.end());
  std::vector<int> seen(channels.size(), -1);
  std::vector<std::string> keys;
  for (const auto& c : channels) keys.push_back(verdict_detail::normalize_name(c));

  std::string_view rest = *verdict;
  while (!rest.empty()) {
    auto semi = rest.find(';');
    auto token = rest.substr(0, semi);
    rest = semi == std::string_view::npos ? std::string_view{} : rest.substr(semi + 1);
    if (verdict_detail::normalize_name(token).empty()) continue;
    auto eq = token.rfind('=');
    if (eq == std::string_view::npos) fail(ErrorCode::UnknownToken, "'" + std::string(token) + "'");
    const auto name = verdict_detail::normalize_name(token.substr(0, eq));
    const auto value = verdict_detail::normalize_name(verdict_detail::strip_decoration(token.substr(eq + 1)));
    int flag = -1;
    if (value == "anomalous") flag = 1;
    if (value == "normal") flag = 0;
    if (flag < 0) fail(ErrorCode::UnknownToken, "value '" + std::string(token.substr(eq + 1)) + "'");
    auto it = std::find(keys.begin(), keys.end(), name);
    if (it == keys.end()) fail(ErrorCode::UnknownToken, "channel '" + std::string(token.substr(0, eq)) + "'");
    const auto idx = static_cast<std::size_t>(it - keys.begin());
    if (seen[idx] >= 0) fail(ErrorCode::DuplicateChannel, channels[idx]);
    seen[idx] = flag;
  }
  for (std::size_t i = 0; i < channels.size(); ++i) {
    if (seen[i] < 0) fail(ErrorCode::MissingChannel, channels[i]);
    out.flags.push_back(static_cast<Label>(seen[i]));
  }
  return out;
}

}  // namespace aadllm
