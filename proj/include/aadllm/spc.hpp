#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <ostream>
#include <span>
#include <vector>

#include "aadllm/error.hpp"

namespace aadllm::spc {

inline constexpr double kDefaultXMultiplier = 2.66;
inline constexpr double kDefaultMrMultiplier = 3.27;

struct SpcConfig {
  std::size_t span = 1;  // 1 = individuals chart
  double x_multiplier = kDefaultXMultiplier;
  double mr_multiplier = kDefaultMrMultiplier;
};

/// Center lines and limits of the moving-average (X) and moving-range (mR)
/// charts.
struct ControlLimits {
  double x_bar = 0.0;
  double r_bar = 0.0;
  double x_ucl = 0.0;
  double x_lcl = 0.0;
  double mr_ucl = 0.0;
  double x_multiplier = kDefaultXMultiplier;
  double mr_multiplier = kDefaultMrMultiplier;
};

struct SpcResult {
  std::vector<double> stable_values;
  // Original index of every stable value, same length as stable_values.
  std::vector<std::size_t> stable_indices;
  std::vector<std::size_t> removed_indices;
  ControlLimits limits_pass1;
  ControlLimits limits_pass2;
};

/// Element j is the mean of values[j, j + span).
inline std::vector<double> moving_average(std::span<const double> values, std::size_t span) {
  if (span == 0) fail(ErrorCode::InvalidConfig, "moving average span must be >= 1");
  if (values.size() < span) {
    fail(ErrorCode::SeriesTooShort, "series of length " + std::to_string(values.size()) +
                                        " shorter than span " + std::to_string(span));
  }
  std::vector<double> out;
  out.reserve(values.size() - span + 1);
  for (std::size_t j = 0; j + span <= values.size(); ++j) {
    double sum = 0.0;
    for (std::size_t k = j; k < j + span; ++k) sum += values[k];
    out.push_back(span == 1 ? sum : sum / static_cast<double>(span));
  }
  return out;
}

/// Element j is |values[j+1] - values[j]|.
inline std::vector<double> moving_range(std::span<const double> values) {
  if (values.size() < 2) fail(ErrorCode::SeriesTooShort, "moving range needs at least 2 points");
  std::vector<double> out;
  out.reserve(values.size() - 1);
  for (std::size_t j = 0; j + 1 < values.size(); ++j) out.push_back(std::abs(values[j + 1] - values[j]));
  return out;
}

namespace detail {

inline double mean(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace detail

inline ControlLimits control_limits(std::span<const double> values,
                                    double x_mult = kDefaultXMultiplier,
                                    double mr_mult = kDefaultMrMultiplier, std::size_t span = 1) {
  if (values.size() < span + 1) {
    fail(ErrorCode::SeriesTooShort, "control limits need at least span + 1 = " +
                                        std::to_string(span + 1) + " points, got " +
                                        std::to_string(values.size()));
  }
  const auto ma = moving_average(values, span);
  const auto mr = moving_range(ma);
  ControlLimits lim;
  lim.x_multiplier = x_mult;
  lim.mr_multiplier = mr_mult;
  lim.x_bar = detail::mean(ma);
  lim.r_bar = detail::mean(mr);
  lim.x_ucl = lim.x_bar + x_mult * lim.r_bar;
  lim.x_lcl = lim.x_bar - x_mult * lim.r_bar;
  lim.mr_ucl = mr_mult * lim.r_bar;
  return lim;
}

inline ControlLimits control_limits(std::span<const double> values, const SpcConfig& cfg) {
  return control_limits(values, cfg.x_multiplier, cfg.mr_multiplier, cfg.span);
}

/// Maps out-of-control chart points back to positions in `values`.
///
/// An X-chart point strictly outside [x_lcl, x_ucl] flags every raw index its
/// averaging window covers. An mR point strictly above mr_ucl is charged to
/// whichever of its two moving-average endpoints lies farther from x_bar
/// (both on a tie), and flags that endpoint's window.
inline std::vector<std::size_t> flag_out_of_control(std::span<const double> values,
                                                    const ControlLimits& limits,
                                                    std::size_t span = 1) {
  if (values.size() < span) return {};
  const auto ma = moving_average(values, span);
  std::vector<bool> flagged(values.size(), false);
  auto flag_window = [&](std::size_t j) {
    for (std::size_t k = j; k < j + span; ++k) flagged[k] = true;
  };
  for (std::size_t j = 0; j < ma.size(); ++j) {
    if (ma[j] > limits.x_ucl || ma[j] < limits.x_lcl) flag_window(j);
  }
  for (std::size_t j = 0; j + 1 < ma.size(); ++j) {
    if (std::abs(ma[j + 1] - ma[j]) > limits.mr_ucl) {
      const double d0 = std::abs(ma[j] - limits.x_bar);
      const double d1 = std::abs(ma[j + 1] - limits.x_bar);
      if (d0 >= d1) flag_window(j);
      if (d1 >= d0) flag_window(j + 1);
    }
  }
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < flagged.size(); ++i) {
    if (flagged[i]) out.push_back(i);
  }
  return out;
}

/// Two-pass stabilization: flag and drop, recompute limits on the remainder,
/// flag and drop again.
inline SpcResult spc_filter(std::span<const double> values, const SpcConfig& cfg = {}) {
  SpcResult res;
  res.limits_pass1 = control_limits(values, cfg);
  const auto flags1 = flag_out_of_control(values, res.limits_pass1, cfg.span);

  std::vector<double> remainder;
  std::vector<std::size_t> remainder_idx;
  {
    std::size_t f = 0;
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (f < flags1.size() && flags1[f] == i) {
        ++f;
        continue;
      }
      remainder.push_back(values[i]);
      remainder_idx.push_back(i);
    }
  }
  if (remainder.empty()) fail(ErrorCode::AllPointsRemoved, "pass 1 removed every point");

  res.limits_pass2 = control_limits(remainder, cfg);
  const auto flags2 = flag_out_of_control(remainder, res.limits_pass2, cfg.span);

  std::vector<bool> removed(values.size(), false);
  for (auto i : flags1) removed[i] = true;
  for (auto k : flags2) removed[remainder_idx[k]] = true;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (removed[i]) {
      res.removed_indices.push_back(i);
    } else {
      res.stable_values.push_back(values[i]);
      res.stable_indices.push_back(i);
    }
  }
  if (res.stable_values.empty()) fail(ErrorCode::AllPointsRemoved, "pass 2 removed every point");
  return res;
}

/// One row per raw index: trailing moving average, its moving range, pass-1
/// limits, and whether the index was removed by the filter.
inline void write_chart_csv(std::ostream& out, std::span<const double> values, const SpcResult& res,
                            std::size_t span = 1) {
  const auto ma = moving_average(values, span);
  const auto& lim = res.limits_pass1;
  std::vector<bool> removed(values.size(), false);
  for (auto i : res.removed_indices) removed[i] = true;
  out << "index,moving_average,moving_range,x_ucl,x_lcl,mr_ucl,flagged\n";
  auto num = [&](double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return std::string(buf);
  };
  for (std::size_t i = 0; i < values.size(); ++i) {
    out << i << ',';
    if (i + 1 >= span) {
      const std::size_t j = i + 1 - span;
      out << num(ma[j]) << ',';
      if (j > 0) out << num(std::abs(ma[j] - ma[j - 1]));
    } else {
      out << ',';
    }
    out << ',' << num(lim.x_ucl) << ',' << num(lim.x_lcl) << ',' << num(lim.mr_ucl) << ','
        << (removed[i] ? 1 : 0) << '\n';
  }
}

}  // namespace aadllm::spc
