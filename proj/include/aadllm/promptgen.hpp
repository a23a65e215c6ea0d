#pragma once

#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "aadllm/csv_io.hpp"
#include "aadllm/error.hpp"
#include "aadllm/stats.hpp"

namespace aadllm::prompt {

struct NormalRange {
  double low = 0.0;
  double high = 0.0;

  friend bool operator==(const NormalRange&, const NormalRange&) = default;
};

struct CorrelationGroup {
  std::string name;
  std::vector<std::string> members;

  friend bool operator==(const CorrelationGroup&, const CorrelationGroup&) = default;
};

/// Operator knowledge loaded from a context file.
///
/// `raw_text` is the [context] section as written by operators;
/// `restructured_text` is the [restructured_context] section that is actually
/// sent to the model (falls back to the raw text when absent).
struct DomainContext {
  std::string raw_text;
  std::string restructured_text;
  std::vector<CorrelationGroup> correlation_groups;
  std::map<std::string, NormalRange> normal_ranges;
  std::optional<double> z_threshold_hint;

  const std::string& prompt_text() const { return restructured_text.empty() ? raw_text : restructured_text; }

  std::optional<NormalRange> range_for(const std::string& channel) const {
    auto it = normal_ranges.find(channel);
    if (it == normal_ranges.end()) return std::nullopt;
    return it->second;
  }

  friend bool operator==(const DomainContext&, const DomainContext&) = default;
};

namespace detail {

inline std::string trim_copy(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return std::string(s);
}

inline std::vector<std::string> split_list(std::string_view s, char delim) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto pos = s.find(delim, start);
    out.push_back(trim_copy(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::string join_text(const std::vector<std::string>& lines) {
  std::size_t first = 0, last = lines.size();
  while (first < last && trim_copy(lines[first]).empty()) ++first;
  while (last > first && trim_copy(lines[last - 1]).empty()) --last;
  std::string out;
  for (std::size_t i = first; i < last; ++i) {
    if (i > first) out += '\n';
    out += trim_copy(lines[i]);
  }
  return out;
}

}  // namespace detail

/// Grammar (line oriented):
///
///   [context]               free text, required
///   [restructured_context]  free text, optional
///   [correlation_groups]    <group> = <channel>, <channel>[, ...]
///   [normal_ranges]         <channel> = <low>, <high>
///   [settings]              z_threshold_hint = <real>
///
/// Lines starting with '#' are comments outside the free-text sections.
inline DomainContext parse_domain_context(std::string_view text) {
  auto bad = [](std::size_t line, const std::string& m) {
    fail(ErrorCode::MalformedContext, "line " + std::to_string(line) + ": " + m);
  };
  DomainContext ctx;
  std::string section;
  std::map<std::string, std::vector<std::string>> free_text;
  bool saw_context = false;
  std::set<std::string> group_names;

  std::istringstream in{std::string(text)};
  std::string raw_line;
  std::size_t lineno = 0;
  while (std::getline(in, raw_line)) {
    ++lineno;
    if (!raw_line.empty() && raw_line.back() == '\r') raw_line.pop_back();
    const std::string line = detail::trim_copy(raw_line);
    if (line.size() >= 2 && line.front() == '[' && line.back() == ']') {
      section = detail::trim_copy(std::string_view(line).substr(1, line.size() - 2));
      if (section != "context" && section != "restructured_context" && section != "correlation_groups" &&
          section != "normal_ranges" && section != "settings") {
        bad(lineno, "unknown section [" + section + "]");
      }
      if (section == "context") saw_context = true;
      continue;
    }
    const bool free_section = section == "context" || section == "restructured_context";
    if (free_section) {
      free_text[section].push_back(raw_line);
      continue;
    }
    if (line.empty() || line.front() == '#') continue;
    if (section.empty()) bad(lineno, "content before the first section header");

    const auto eq = line.find('=');
    if (eq == std::string::npos) bad(lineno, "expected 'key = value'");
    const std::string key = detail::trim_copy(std::string_view(line).substr(0, eq));
    const std::string value = detail::trim_copy(std::string_view(line).substr(eq + 1));
    if (key.empty()) bad(lineno, "empty key");

    if (section == "correlation_groups") {
      auto members = detail::split_list(value, ',');
      std::set<std::string> uniq;
      for (const auto& m : members) {
        if (m.empty()) bad(lineno, "empty channel name in group '" + key + "'");
        if (!uniq.insert(m).second) bad(lineno, "channel '" + m + "' repeated in group '" + key + "'");
      }
      if (members.size() < 2) bad(lineno, "group '" + key + "' needs at least two channels");
      if (!group_names.insert(key).second) bad(lineno, "duplicate group '" + key + "'");
      ctx.correlation_groups.push_back(CorrelationGroup{key, std::move(members)});
    } else if (section == "normal_ranges") {
      auto parts = detail::split_list(value, ',');
      if (parts.size() != 2) bad(lineno, "range for '" + key + "' needs low, high");
      auto lo = csv_detail::parse_double(parts[0]);
      auto hi = csv_detail::parse_double(parts[1]);
      if (!lo || !hi || *lo > *hi) bad(lineno, "invalid range for '" + key + "'");
      if (!ctx.normal_ranges.emplace(key, NormalRange{*lo, *hi}).second) {
        bad(lineno, "duplicate range for '" + key + "'");
      }
    } else if (section == "settings") {
      if (key != "z_threshold_hint") bad(lineno, "unknown setting '" + key + "'");
      auto v = csv_detail::parse_double(value);
      if (!v || *v <= 0.0) bad(lineno, "z_threshold_hint must be a positive number");
      ctx.z_threshold_hint = *v;
    }
  }
  if (!saw_context) fail(ErrorCode::MalformedContext, "missing [context] section");
  ctx.raw_text = detail::join_text(free_text["context"]);
  ctx.restructured_text = detail::join_text(free_text["restructured_context"]);
  if (ctx.prompt_text().empty()) fail(ErrorCode::MalformedContext, "[context] section is empty");
  return ctx;
}

/// Every channel named by the context must exist in the instance.
inline void validate_for(const DomainContext& ctx, std::span<const std::string> channels) {
  auto known = [&](const std::string& n) {
    for (const auto& c : channels) {
      if (c == n) return true;
    }
    return false;
  };
  for (const auto& g : ctx.correlation_groups) {
    for (const auto& m : g.members) {
      if (!known(m)) {
        fail(ErrorCode::MalformedContext, "correlation group '" + g.name + "' names unknown channel '" + m + "'");
      }
    }
  }
  for (const auto& [name, range] : ctx.normal_ranges) {
    if (!known(name)) fail(ErrorCode::MalformedContext, "normal range names unknown channel '" + name + "'");
  }
}

/// Parses each context file once per process; later loads return the same
/// object. Safe for concurrent callers.
class ContextCache {
 public:
  std::shared_ptr<const DomainContext> load(const std::filesystem::path& path) {
    std::error_code ec;
    auto key = std::filesystem::weakly_canonical(path, ec);
    if (ec) key = path;
    std::lock_guard lock(mutex_);
    if (auto it = entries_.find(key.string()); it != entries_.end()) return it->second;
    if (!std::filesystem::is_regular_file(path)) fail(ErrorCode::FileNotFound, path.string());
    auto ctx = std::make_shared<const DomainContext>(parse_domain_context(read_file(path)));
    ++parse_count_;
    entries_.emplace(key.string(), ctx);
    return ctx;
  }

  std::size_t parse_count() const {
    std::lock_guard lock(mutex_);
    return parse_count_;
  }

 private:
  mutable std::mutex mutex_;
  std::map<std::string, std::shared_ptr<const DomainContext>> entries_;
  std::size_t parse_count_ = 0;
};

inline ContextCache& global_context_cache() {
  static ContextCache cache;
  return cache;
}

inline std::shared_ptr<const DomainContext> load_domain_context(const std::filesystem::path& path) {
  return global_context_cache().load(path);
}

// ---------------------------------------------------------------------------
// Rendering

/// Six significant digits, trailing zeros kept, never a signed zero.
inline std::string format_number(double v) {
  if (v == 0.0) v = 0.0;
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%#.6g", v);
  return buf;
}

inline constexpr std::string_view kChannelTemplate =
    "{channel} has a maximum of {max} and a z-score of {z}. "
    "Normal operating conditions for {channel} is {normal}.";

inline constexpr std::string_view kDataPreamble =
    "The following sensor data was collected {window} and represent current process conditions.";

inline constexpr std::string_view kInstruction =
    "Given the context and data above, determine whether there are any anomalies present.";

namespace detail {

inline std::string substitute(std::string_view tmpl, const std::map<std::string, std::string>& values) {
  std::string out;
  for (std::size_t i = 0; i < tmpl.size();) {
    if (tmpl[i] == '{') {
      auto close = tmpl.find('}', i);
      if (close != std::string_view::npos) {
        auto it = values.find(std::string(tmpl.substr(i + 1, close - i - 1)));
        if (it != values.end()) {
          out += it->second;
          i = close + 1;
          continue;
        }
      }
    }
    out += tmpl[i++];
  }
  return out;
}

}  // namespace detail

/// True when any of the template placeholders survives in `text`.
inline bool has_placeholder(std::string_view text) {
  for (auto p : {"{channel}", "{max}", "{z}", "{normal}", "{window}"}) {
    if (text.find(p) != std::string_view::npos) return true;
  }
  return false;
}

inline std::string normal_descriptor(const stats::StatDerivatives& s, std::optional<NormalRange> range = {}) {
  std::string out = "mean " + format_number(s.baseline_mean) + ", std " + format_number(s.baseline_std);
  if (range) out += ", configured range " + format_number(range->low) + " to " + format_number(range->high);
  return out;
}

inline std::string render_channel_template(const std::string& channel, const stats::StatDerivatives& s,
                                           const std::string& normal_desc) {
  return detail::substitute(kChannelTemplate, {{"channel", channel},
                                               {"max", format_number(s.window_max)},
                                               {"z", format_number(s.z_score)},
                                               {"normal", normal_desc}});
}

// ---------------------------------------------------------------------------
// Assembly

inline constexpr std::size_t kDefaultMaxPromptChars = 32000;

struct PromptOptions {
  std::string window_phrase = "over the last 15 minutes";
  std::size_t max_chars = kDefaultMaxPromptChars;
};

/// Structured per-channel data carried next to the prompt text so local
/// backends can judge without re-parsing prose.
struct ChannelEntry {
  std::string name;
  stats::StatDerivatives stats;
  std::optional<NormalRange> range;
};

struct PromptBundle {
  std::string context_block;
  std::string data_block;
  std::string instruction;
  std::string response_schema;
  std::vector<std::string> channels;
  std::vector<ChannelEntry> entries;

  /// The exact bytes sent to a model.
  std::string text() const {
    return "CONTEXT: " + context_block + "\n\nDATA: " + data_block + "\n\n" + instruction + "\n" + response_schema;
  }
};

inline std::string response_schema_for(std::span<const std::string> channels) {
  std::string names;
  for (std::size_t i = 0; i < channels.size(); ++i) {
    if (i) names += "; ";
    names += channels[i];
  }
  return "Finish your answer with exactly one line of the form\n"
         "VERDICT: <channel>=<ANOMALOUS|NORMAL>; <channel>=<ANOMALOUS|NORMAL>; ...\n"
         "naming every channel exactly once: " + names + ".";
}

inline PromptBundle assemble_prompt(const DomainContext& ctx, std::span<const std::string> channels,
                                    std::span<const std::string> renders, const PromptOptions& opts = {}) {
  if (channels.empty() || renders.size() != channels.size()) {
    fail(ErrorCode::ChannelCountMismatch, std::to_string(renders.size()) + " renders for " +
                                              std::to_string(channels.size()) + " channels");
  }
  PromptBundle b;
  b.context_block = ctx.prompt_text();
  b.data_block = detail::substitute(kDataPreamble, {{"window", opts.window_phrase}});
  for (const auto& r : renders) b.data_block += " " + r;
  b.instruction = std::string(kInstruction);
  b.response_schema = response_schema_for(channels);
  b.channels.assign(channels.begin(), channels.end());
  if (has_placeholder(b.data_block)) fail(ErrorCode::MalformedContext, "unfilled placeholder in data block");
  const auto size = b.text().size();
  if (size > opts.max_chars) {
    fail(ErrorCode::PromptTooLong, std::to_string(size) + " characters exceeds cap " + std::to_string(opts.max_chars));
  }
  return b;
}

/// Renders every channel and assembles one prompt, attaching the structured
/// entries to the bundle.
inline PromptBundle build_prompt(const DomainContext& ctx, std::vector<ChannelEntry> entries,
                                 const PromptOptions& opts = {}) {
  std::vector<std::string> names, renders;
  for (auto& e : entries) {
    if (!e.range) e.range = ctx.range_for(e.name);
    names.push_back(e.name);
    renders.push_back(render_channel_template(e.name, e.stats, normal_descriptor(e.stats, e.range)));
  }
  auto b = assemble_prompt(ctx, names, renders, opts);
  b.entries = std::move(entries);
  return b;
}

}  // namespace aadllm::prompt
