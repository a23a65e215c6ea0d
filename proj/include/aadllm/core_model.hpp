#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "aadllm/error.hpp"

namespace aadllm {

using Label = std::uint8_t;
using LabelVector = std::vector<Label>;

struct ChannelSeries {
  std::string name;
  std::optional<std::string> unit;
  std::vector<double> values;

  friend bool operator==(const ChannelSeries&, const ChannelSeries&) = default;
};

/// A multivariate instance: N named channels aligned over T timestamps.
///
/// Timestamps are stored both as the source text (for lossless dumps) and as
/// seconds on an arbitrary monotone axis. Only their ordering is used by the
/// detection math.
struct TimeSeriesInstance {
  std::string id;
  std::vector<ChannelSeries> channels;
  std::vector<double> timestamps;
  std::vector<std::string> timestamp_text;
  std::optional<LabelVector> labels;
  std::optional<LabelVector> changepoints;

  std::size_t length() const { return timestamps.size(); }
  std::size_t channel_count() const { return channels.size(); }

  const ChannelSeries* find_channel(const std::string& name) const {
    for (const auto& c : channels) {
      if (c.name == name) return &c;
    }
    return nullptr;
  }

  friend bool operator==(const TimeSeriesInstance&, const TimeSeriesInstance&) = default;
};

namespace detail {

inline void check_binary(const LabelVector& v, std::size_t n, const char* what,
                         const std::string& id) {
  if (v.size() != n) {
    fail(ErrorCode::InvalidInstance, std::string(what) + " length " + std::to_string(v.size()) +
                                         " != " + std::to_string(n) + " in instance '" + id + "'");
  }
  for (auto x : v) {
    if (x > 1) fail(ErrorCode::InvalidInstance, std::string(what) + " must be 0/1 in '" + id + "'");
  }
}

}  // namespace detail

/// Throws InvalidInstance when any structural invariant is violated.
inline void validate(const TimeSeriesInstance& inst) {
  const std::size_t t = inst.timestamps.size();
  if (!inst.timestamp_text.empty() && inst.timestamp_text.size() != t) {
    fail(ErrorCode::InvalidInstance, "timestamp text/axis length mismatch in '" + inst.id + "'");
  }
  for (std::size_t i = 1; i < t; ++i) {
    if (!(inst.timestamps[i] > inst.timestamps[i - 1])) {
      fail(ErrorCode::InvalidInstance, "timestamps not strictly increasing at row " +
                                           std::to_string(i) + " in '" + inst.id + "'");
    }
  }
  for (const auto& ch : inst.channels) {
    if (ch.values.size() != t) {
      fail(ErrorCode::InvalidInstance, "channel '" + ch.name + "' has " +
                                           std::to_string(ch.values.size()) + " values, expected " +
                                           std::to_string(t));
    }
    for (double v : ch.values) {
      if (!std::isfinite(v)) fail(ErrorCode::InvalidInstance, "non-finite value in '" + ch.name + "'");
    }
  }
  if (inst.labels) detail::check_binary(*inst.labels, t, "labels", inst.id);
  if (inst.changepoints) detail::check_binary(*inst.changepoints, t, "changepoints", inst.id);
}

inline std::vector<ChannelSeries> split_channels(const TimeSeriesInstance& inst) {
  return inst.channels;
}

inline std::vector<std::string> channel_names(const TimeSeriesInstance& inst) {
  std::vector<std::string> names;
  names.reserve(inst.channels.size());
  for (const auto& c : inst.channels) names.push_back(c.name);
  return names;
}

/// Returns a copy restricted to the named channels, in the order given.
inline TimeSeriesInstance select_channels(const TimeSeriesInstance& inst,
                                          const std::vector<std::string>& names) {
  TimeSeriesInstance out = inst;
  out.channels.clear();
  for (const auto& n : names) {
    const auto* ch = inst.find_channel(n);
    if (!ch) fail(ErrorCode::MissingColumn, "channel '" + n + "' not in instance '" + inst.id + "'");
    out.channels.push_back(*ch);
  }
  return out;
}

}  // namespace aadllm
