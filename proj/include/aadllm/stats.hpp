#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "aadllm/core_model.hpp"
#include "aadllm/error.hpp"

namespace aadllm::stats {

inline double mean(std::span<const double> v) {
  if (v.empty()) fail(ErrorCode::EmptyWindow, "mean of empty sequence");
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

/// Sample (n - 1) standard deviation, two-pass.
inline double sample_std(std::span<const double> v) {
  if (v.size() < 2) fail(ErrorCode::DegenerateBaseline, "standard deviation needs at least 2 points");
  const double m = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

inline double window_max(std::span<const double> window) {
  if (window.empty()) fail(ErrorCode::EmptyWindow, "maximum of empty window");
  return *std::max_element(window.begin(), window.end());
}

/// (mean(window) - mean(baseline)) / sample_std(baseline).
inline double z_score(std::span<const double> window, std::span<const double> baseline) {
  if (window.empty()) fail(ErrorCode::EmptyWindow, "z-score of empty window");
  if (baseline.size() < 2) fail(ErrorCode::DegenerateBaseline, "baseline needs at least 2 points");
  const double sd = sample_std(baseline);
  if (!(sd > 0.0)) fail(ErrorCode::DegenerateBaseline, "baseline has zero variance");
  return (mean(window) - mean(baseline)) / sd;
}

/// Per-channel numbers injected into the prompt for one query window.
struct StatDerivatives {
  double window_mean = 0.0;
  double window_max = 0.0;
  double z_score = 0.0;
  double baseline_mean = 0.0;
  double baseline_std = 0.0;

  friend bool operator==(const StatDerivatives&, const StatDerivatives&) = default;
};

inline StatDerivatives derive(std::span<const double> window, std::span<const double> baseline) {
  StatDerivatives d;
  d.z_score = z_score(window, baseline);
  d.window_mean = mean(window);
  d.window_max = stats::window_max(window);
  d.baseline_mean = mean(baseline);
  d.baseline_std = sample_std(baseline);
  return d;
}

// ---------------------------------------------------------------------------
// Mann-Whitney U

inline constexpr std::size_t kExactProductLimit = 64;

struct MannWhitneyResult {
  double u_a = 0.0;  // pairs (a, b) with a > b, ties counted 1/2
  double u_b = 0.0;
  double p_value = 1.0;  // two-sided
  bool exact = false;
};

namespace detail {

/// Doubled midranks (integers) of the pooled sample, in input order: first
/// the elements of a, then those of b.
inline std::vector<std::int64_t> doubled_midranks(std::span<const double> a, std::span<const double> b,
                                                  double* tie_term) {
  const std::size_t n = a.size() + b.size();
  std::vector<double> pooled;
  pooled.reserve(n);
  pooled.insert(pooled.end(), a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return pooled[i] < pooled[j]; });
  std::vector<std::int64_t> r2(n);
  double ties = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && pooled[order[j + 1]] == pooled[order[i]]) ++j;
    // 1-based ranks i+1 .. j+1, midrank doubled = i + j + 2
    for (std::size_t k = i; k <= j; ++k) r2[order[k]] = static_cast<std::int64_t>(i + j + 2);
    const double t = static_cast<double>(j - i + 1);
    ties += t * t * t - t;
    i = j + 1;
  }
  if (tie_term) *tie_term = ties;
  return r2;
}

/// Exact two-sided p conditional on the observed tie pattern: the fraction of
/// all C(n+m, n) rank assignments whose |2U - nm| is at least the observed one.
/// Counts subsets by dynamic programming over doubled rank sums.
inline double exact_p(const std::vector<std::int64_t>& r2, std::size_t n, std::size_t m,
                      std::int64_t observed_dev) {
  const std::size_t total = n + m;
  std::int64_t max_sum = 0;
  for (auto r : r2) max_sum += r;
  // ways[k][s]: subsets of size k with doubled rank sum s
  std::vector<std::vector<std::uint64_t>> ways(n + 1, std::vector<std::uint64_t>(max_sum + 1, 0));
  ways[0][0] = 1;
  for (std::size_t i = 0; i < total; ++i) {
    const auto r = r2[i];
    for (std::size_t k = std::min(n, i + 1); k >= 1; --k) {
      auto& dst = ways[k];
      const auto& src = ways[k - 1];
      for (std::int64_t s = max_sum; s >= r; --s) dst[s] += src[s - r];
    }
  }
  const auto nn1 = static_cast<std::int64_t>(n * (n + 1));
  const auto nm = static_cast<std::int64_t>(n * m);
  std::uint64_t extreme = 0, all = 0;
  for (std::int64_t s = 0; s <= max_sum; ++s) {
    const auto c = ways[n][s];
    if (c == 0) continue;
    all += c;
    if (std::llabs((s - nn1) - nm) >= observed_dev) extreme += c;
  }
  return static_cast<double>(extreme) / static_cast<double>(all);
}

}  // namespace detail

/// Two-sided Mann-Whitney U test with midranks for ties. Exact permutation
/// p-value when n*m <= 64, otherwise the normal approximation with tie and
/// continuity corrections. All-identical input yields p = 1.
inline MannWhitneyResult mann_whitney_u(std::span<const double> group_a, std::span<const double> group_b) {
  if (group_a.empty() || group_b.empty()) fail(ErrorCode::EmptyGroup, "Mann-Whitney needs two non-empty groups");
  const std::size_t n = group_a.size(), m = group_b.size();
  double tie_term = 0.0;
  const auto r2 = detail::doubled_midranks(group_a, group_b, &tie_term);
  std::int64_t r2_a = 0;
  for (std::size_t i = 0; i < n; ++i) r2_a += r2[i];
  const auto two_u_a = r2_a - static_cast<std::int64_t>(n * (n + 1));
  const auto nm = static_cast<std::int64_t>(n * m);

  MannWhitneyResult res;
  res.u_a = static_cast<double>(two_u_a) / 2.0;
  res.u_b = static_cast<double>(2 * nm - two_u_a) / 2.0;
  const auto dev = std::llabs(two_u_a - nm);

  if (n * m <= kExactProductLimit) {
    res.exact = true;
    res.p_value = detail::exact_p(r2, n, m, dev);
    return res;
  }
  const double big_n = static_cast<double>(n + m);
  const double var = static_cast<double>(nm) / 12.0 *
                     ((big_n + 1.0) - tie_term / (big_n * (big_n - 1.0)));
  if (!(var > 0.0)) {
    res.p_value = 1.0;
    return res;
  }
  const double z = std::max(0.0, static_cast<double>(dev) / 2.0 - 0.5) / std::sqrt(var);
  res.p_value = std::min(1.0, std::erfc(z / std::sqrt(2.0)));
  return res;
}

// ---------------------------------------------------------------------------
// Feature selection

struct FeatureEntry {
  std::string channel;
  double u = 0.0;  // U of the label-0 group
  double p_value = 1.0;
  bool selected = false;
  std::size_t n_normal = 0;
  std::size_t n_anomalous = 0;
};

struct FeatureSelection {
  double alpha = 0.05;
  std::vector<FeatureEntry> entries;

  std::vector<std::string> selected() const {
    std::vector<std::string> out;
    for (const auto& e : entries) {
      if (e.selected) out.push_back(e.channel);
    }
    return out;
  }
};

/// Per channel, compares values at label 0 against values at label 1, pooling
/// rows across all given instances. Channels are taken from the first
/// instance; later instances must contain them.
inline FeatureSelection select_features(std::span<const TimeSeriesInstance> instances, double alpha = 0.05) {
  if (instances.empty()) fail(ErrorCode::SingleClassLabels, "no instances given");
  FeatureSelection sel;
  sel.alpha = alpha;
  for (const auto& proto : instances.front().channels) {
    std::vector<double> normal, anomalous;
    for (const auto& inst : instances) {
      if (!inst.labels) fail(ErrorCode::SingleClassLabels, "instance '" + inst.id + "' has no labels");
      const auto* ch = inst.find_channel(proto.name);
      if (!ch) fail(ErrorCode::MissingColumn, "channel '" + proto.name + "' missing in '" + inst.id + "'");
      for (std::size_t t = 0; t < inst.length(); ++t) {
        ((*inst.labels)[t] ? anomalous : normal).push_back(ch->values[t]);
      }
    }
    if (normal.empty() || anomalous.empty()) {
      fail(ErrorCode::SingleClassLabels, "labels contain a single class");
    }
    const auto mw = mann_whitney_u(normal, anomalous);
    sel.entries.push_back(FeatureEntry{proto.name, mw.u_a, mw.p_value, mw.p_value < alpha,
                                       normal.size(), anomalous.size()});
  }
  return sel;
}

inline FeatureSelection select_features(const TimeSeriesInstance& instance, double alpha = 0.05) {
  return select_features(std::span<const TimeSeriesInstance>(&instance, 1), alpha);
}

}  // namespace aadllm::stats
