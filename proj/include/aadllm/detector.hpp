#pragma once

#include <algorithm>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "aadllm/backend.hpp"
#include "aadllm/baseline.hpp"
#include "aadllm/core_model.hpp"
#include "aadllm/promptgen.hpp"
#include "aadllm/spc.hpp"
#include "aadllm/stats.hpp"
#include "aadllm/verdict.hpp"

namespace aadllm {

enum class BinarizationMode { Correlated, Any };

inline std::string_view to_string(BinarizationMode m) { return m == BinarizationMode::Correlated ? "correlated" : "any"; }

inline BinarizationMode binarization_mode_from(std::string_view s) {
  if (s == "correlated") return BinarizationMode::Correlated;
  if (s == "any") return BinarizationMode::Any;
  fail(ErrorCode::InvalidConfig, "unknown binarization mode '" + std::string(s) + "'");
}

struct DetectionConfig {
  baseline::WindowingConfig windowing;
  spc::SpcConfig spc;
  backend::BackendConfig backend;
  BinarizationMode mode = BinarizationMode::Correlated;
  std::optional<std::vector<std::string>> selected_channels;
  // Use Mann-Whitney selection when labels with both classes are present and
  // no explicit list is given.
  bool auto_select_features = true;
  double feature_alpha = 0.05;
  prompt::PromptOptions prompt;
};

/// Maps per-channel flags to one label. Correlated: 1 iff some group has at
/// least two flagged members. Any: 1 iff any channel is flagged.
inline Label binarize(const ChannelFlags& flags, std::span<const prompt::CorrelationGroup> groups,
                      BinarizationMode mode) {
  if (mode == BinarizationMode::Any) return flags.flagged_count() > 0 ? 1 : 0;
  if (groups.empty()) fail(ErrorCode::MissingGroups, "correlated binarization needs correlation groups");
  for (const auto& g : groups) {
    std::size_t hits = 0;
    for (const auto& m : g.members) hits += flags.get(m).value_or(0);
    if (hits >= 2) return 1;
  }
  return 0;
}

/// Explicit list if configured, else Mann-Whitney selection when both label
/// classes exist, else every channel.
inline std::vector<std::string> choose_channels(const TimeSeriesInstance& inst, const DetectionConfig& cfg) {
  if (cfg.selected_channels) {
    for (const auto& n : *cfg.selected_channels) {
      if (!inst.find_channel(n)) fail(ErrorCode::MissingColumn, "selected channel '" + n + "' not in instance");
    }
    return *cfg.selected_channels;
  }
  if (cfg.auto_select_features && inst.labels) {
    const auto ones = std::count(inst.labels->begin(), inst.labels->end(), Label{1});
    if (ones > 0 && static_cast<std::size_t>(ones) < inst.length()) {
      auto chosen = stats::select_features(inst, cfg.feature_alpha).selected();
      if (!chosen.empty()) return chosen;
    }
  }
  return channel_names(inst);
}

/// SPC output, windows and baseline for one channel of one instance.
struct ChannelState {
  std::string name;
  spc::SpcResult spc;
  baseline::ComparisonDataset baseline;
  std::vector<baseline::QueryWindow> queries;  // windows 1..P-1
};

namespace baseline {

/// Discards any previous state and rebuilds every channel's baseline from
/// scratch: SPC filter, partition, first window as C.
inline std::vector<ChannelState> reinitialize_for_instance(const TimeSeriesInstance& inst,
                                                           std::span<const std::string> channels,
                                                           const DetectionConfig& cfg) {
  std::vector<ChannelState> out;
  for (const auto& name : channels) {
    const auto* ch = inst.find_channel(name);
    if (!ch) fail(ErrorCode::MissingColumn, "channel '" + name + "'");
    try {
      ChannelState st;
      st.name = name;
      st.spc = spc::spc_filter(ch->values, cfg.spc);
      auto windows = partition_windows(name, st.spc.stable_values, cfg.windowing, st.spc.stable_indices);
      auto [c, rest] = init_comparison(std::move(windows));
      st.baseline = std::move(c);
      st.queries = std::move(rest);
      out.push_back(std::move(st));
    } catch (const Error& e) {
      throw e.with_context("channel '" + name + "'");
    }
  }
  return out;
}

}  // namespace baseline

struct ChannelAudit {
  std::string channel;
  stats::StatDerivatives stats;
  std::size_t baseline_size = 0;
  std::size_t origin_first = 0;
  std::size_t origin_last = 0;
};

struct WindowVerdict {
  std::size_t window = 0;  // ordinal in the stable partition (first query is 1)
  ChannelFlags flags;
  Label final_label = 0;
  std::string prompt_hash;
  std::string prompt_text;
  std::string raw_text;
  int queries = 1;
  std::vector<ChannelAudit> channels;
};

struct DetectionOutput {
  std::string instance_id;
  std::vector<std::string> channels;
  std::size_t length = 0;
  std::vector<WindowVerdict> windows;
  LabelVector point_labels;
  std::vector<std::size_t> spc_removed;  // union over channels
  std::vector<std::vector<std::size_t>> spc_removed_by_channel;
  std::vector<std::size_t> final_baseline_sizes;
  std::size_t dropped_query_windows = 0;  // windows beyond the shortest channel
};

/// Called after every window is decided, before the next one is queried.
using VerdictSink = std::function<void(const WindowVerdict&)>;

/// The per-window loop. Window p across channels is paired by ordinal
/// position; the number of queries is the smallest channel window count.
inline std::vector<WindowVerdict> detect_windows(std::vector<ChannelState>& states,
                                                 const prompt::DomainContext& context,
                                                 const DetectionConfig& cfg,
                                                 const backend::VerdictBackend& backend,
                                                 const VerdictSink& on_verdict = {}) {
  if (states.empty()) fail(ErrorCode::ChannelCountMismatch, "no channels to detect on");
  if (cfg.mode == BinarizationMode::Correlated && context.correlation_groups.empty()) {
    fail(ErrorCode::MissingGroups, "correlated mode needs [correlation_groups] in the context");
  }
  std::size_t steps = states.front().queries.size();
  for (const auto& s : states) steps = std::min(steps, s.queries.size());
  std::vector<std::string> names;
  for (const auto& s : states) names.push_back(s.name);

  std::vector<WindowVerdict> verdicts;
  for (std::size_t p = 0; p < steps; ++p) {
    const std::size_t ordinal = states.front().queries[p].index;
    const std::string where = "window " + std::to_string(ordinal);
    WindowVerdict wv;
    wv.window = ordinal;
    std::vector<prompt::ChannelEntry> entries;
    for (const auto& s : states) {
      const auto& q = s.queries[p];
      try {
        entries.push_back(prompt::ChannelEntry{s.name, stats::derive(q.values, s.baseline.values()), std::nullopt});
      } catch (const Error& e) {
        throw e.with_context("channel '" + s.name + "', " + where);
      }
      wv.channels.push_back(ChannelAudit{s.name, entries.back().stats, s.baseline.size(), q.origin_first, q.origin_last});
    }
    try {
      const auto bundle = prompt::build_prompt(context, std::move(entries), cfg.prompt);
      auto raw = backend.query(bundle);
      std::optional<ChannelFlags> flags;
      try {
        flags = parse_verdict(raw.text, names);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::NoVerdictLine) throw;
        raw = backend.query(bundle);
        wv.queries = 2;
        flags = parse_verdict(raw.text, names);
      }
      wv.flags = std::move(*flags);
      wv.final_label = binarize(wv.flags, context.correlation_groups, cfg.mode);
      wv.prompt_hash = raw.prompt_hash.empty() ? sha256_hex(bundle.text()) : raw.prompt_hash;
      wv.prompt_text = bundle.text();
      wv.raw_text = std::move(raw.text);
    } catch (const Error& e) {
      throw e.with_context(where);
    }
    for (auto& s : states) s.baseline = baseline::update_comparison(std::move(s.baseline), s.queries[p], wv.final_label);
    if (on_verdict) on_verdict(wv);
    verdicts.push_back(std::move(wv));
  }
  return verdicts;
}

inline DetectionOutput detect_instance(const TimeSeriesInstance& inst, const prompt::DomainContext& context,
                                       const DetectionConfig& cfg, const backend::VerdictBackend& backend,
                                       const VerdictSink& on_verdict = {}) {
  validate(inst);
  const auto names = choose_channels(inst, cfg);
  const auto all_names = channel_names(inst);
  prompt::validate_for(context, all_names);

  auto states = baseline::reinitialize_for_instance(inst, names, cfg);

  DetectionOutput out;
  out.instance_id = inst.id;
  out.channels = names;
  out.length = inst.length();
  out.windows = detect_windows(states, context, cfg, backend, on_verdict);

  out.point_labels.assign(inst.length(), 0);
  std::vector<bool> removed(inst.length(), false);
  for (const auto& s : states) {
    out.spc_removed_by_channel.push_back(s.spc.removed_indices);
    for (auto i : s.spc.removed_indices) removed[i] = true;
    out.final_baseline_sizes.push_back(s.baseline.size());
    out.dropped_query_windows += s.queries.size() - out.windows.size();
  }
  for (std::size_t i = 0; i < removed.size(); ++i) {
    if (removed[i]) {
      out.spc_removed.push_back(i);
      out.point_labels[i] = 1;
    }
  }
  for (const auto& w : out.windows) {
    if (!w.final_label) continue;
    for (const auto& c : w.channels) {
      std::fill(out.point_labels.begin() + static_cast<std::ptrdiff_t>(c.origin_first),
                out.point_labels.begin() + static_cast<std::ptrdiff_t>(c.origin_last + 1), Label{1});
    }
  }
  return out;
}

}  // namespace aadllm
