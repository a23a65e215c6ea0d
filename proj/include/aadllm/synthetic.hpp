#pragma once

#include <algorithm>
#include <cstdint>
#include <ctime>
#include <random>
#include <string>
#include <vector>

#include "aadllm/core_model.hpp"
#include "aadllm/csv_io.hpp"

namespace aadllm {

enum class AnomalyKind { Spike, Drift, CorrelatedSpike };

inline std::string_view to_string(AnomalyKind k) {
  switch (k) {
    case AnomalyKind::Spike: return "spike";
    case AnomalyKind::Drift: return "drift";
    case AnomalyKind::CorrelatedSpike: return "correlated_spike";
  }
  return "?";
}

inline AnomalyKind anomaly_kind_from(std::string_view s) {
  if (s == "spike") return AnomalyKind::Spike;
  if (s == "drift") return AnomalyKind::Drift;
  if (s == "correlated_spike") return AnomalyKind::CorrelatedSpike;
  fail(ErrorCode::InvalidConfig, "unknown anomaly kind '" + std::string(s) + "'");
}

/// One injected anomaly over [start, start + duration). Magnitude is in units
/// of each affected channel's base_std.
struct AnomalySpec {
  AnomalyKind kind = AnomalyKind::Spike;
  std::vector<std::size_t> channels;
  std::size_t start = 0;
  std::size_t duration = 1;
  double magnitude = 1.0;
};

struct SyntheticConfig {
  std::size_t n_channels = 1;
  std::size_t length = 100;
  std::vector<double> base_mean;  // one per channel
  std::vector<double> base_std;   // one per channel
  std::vector<AnomalySpec> anomalies;
  std::vector<std::string> channel_names;  // optional; defaults to ch0, ch1, ...
  std::uint64_t seed = 0;
  std::string id = "synthetic";
};

inline void validate(const SyntheticConfig& cfg) {
  auto bad = [](const std::string& m) { fail(ErrorCode::InvalidConfig, m); };
  if (cfg.n_channels == 0) bad("n_channels must be positive");
  if (cfg.length == 0) bad("length must be positive");
  if (cfg.base_mean.size() != cfg.n_channels || cfg.base_std.size() != cfg.n_channels) {
    bad("base_mean/base_std need one entry per channel");
  }
  for (double s : cfg.base_std) {
    if (!(s >= 0.0) || !std::isfinite(s)) bad("base_std must be finite and non-negative");
  }
  if (!cfg.channel_names.empty() && cfg.channel_names.size() != cfg.n_channels) {
    bad("channel_names must be empty or one per channel");
  }
  for (const auto& a : cfg.anomalies) {
    if (a.start >= cfg.length) bad("anomaly start outside [0, length)");
    if (a.duration == 0) bad("anomaly duration must be positive");
    if (!(a.magnitude > 0.0)) bad("anomaly magnitude must be > 0");
    if (a.channels.empty()) bad("anomaly needs at least one channel");
    for (auto c : a.channels) {
      if (c >= cfg.n_channels) bad("anomaly channel index out of range");
    }
    if (a.kind == AnomalyKind::Spike && a.channels.size() != 1) {
      bad("spike applies to exactly one channel; use correlated_spike for several");
    }
  }
}

inline std::string format_utc(std::int64_t seconds) {
  std::time_t t = static_cast<std::time_t>(seconds);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%d %H:%M:%S", &tm);
  return buf;
}

/// Gaussian noise around per-channel means with injected, labeled anomalies.
/// Deterministic for a fixed seed on a given standard library.
inline TimeSeriesInstance generate_synthetic(const SyntheticConfig& cfg) {
  validate(cfg);
  std::mt19937_64 rng(cfg.seed);
  TimeSeriesInstance inst;
  inst.id = cfg.id;
  constexpr std::int64_t kEpoch = 1704067200;  // 2024-01-01 00:00:00 UTC
  for (std::size_t t = 0; t < cfg.length; ++t) {
    inst.timestamp_text.push_back(format_utc(kEpoch + static_cast<std::int64_t>(t)));
    inst.timestamps.push_back(*parse_timestamp(inst.timestamp_text.back()));
  }
  for (std::size_t c = 0; c < cfg.n_channels; ++c) {
    ChannelSeries ch;
    ch.name = cfg.channel_names.empty() ? "ch" + std::to_string(c) : cfg.channel_names[c];
    std::normal_distribution<double> noise(cfg.base_mean[c], cfg.base_std[c]);
    ch.values.reserve(cfg.length);
    for (std::size_t t = 0; t < cfg.length; ++t) {
      ch.values.push_back(cfg.base_std[c] > 0.0 ? noise(rng) : cfg.base_mean[c]);
    }
    inst.channels.push_back(std::move(ch));
  }

  LabelVector labels(cfg.length, 0);
  for (const auto& a : cfg.anomalies) {
    const std::size_t end = std::min(cfg.length, a.start + a.duration);
    for (auto c : a.channels) {
      auto& values = inst.channels[c].values;
      const double unit = cfg.base_std[c];
      for (std::size_t t = a.start; t < end; ++t) {
        double offset = a.magnitude * unit;
        if (a.kind == AnomalyKind::Drift) {
          offset *= static_cast<double>(t - a.start + 1) / static_cast<double>(a.duration);
        }
        values[t] += offset;
      }
    }
    std::fill(labels.begin() + static_cast<std::ptrdiff_t>(a.start),
              labels.begin() + static_cast<std::ptrdiff_t>(end), Label{1});
  }
  inst.labels = std::move(labels);
  return inst;
}

}  // namespace aadllm
