#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "aadllm/error.hpp"

namespace aadllm::baseline {

inline constexpr std::size_t kDefaultWindowLength = 60;

struct WindowingConfig {
  std::size_t window_length = kDefaultWindowLength;
  // Trailing partial windows are always dropped.
};

/// One non-overlapping segment of a channel's stable series.
struct QueryWindow {
  std::string channel;
  std::size_t index = 0;
  std::vector<double> values;
  // First and last original (pre-SPC) index covered, inclusive.
  std::size_t origin_first = 0;
  std::size_t origin_last = 0;

  friend bool operator==(const QueryWindow&, const QueryWindow&) = default;
};

/// The evolving sample of normal behaviour for one channel.
class ComparisonDataset {
 public:
  ComparisonDataset() = default;
  ComparisonDataset(std::string channel, std::vector<double> initial, std::size_t window_length)
      : channel_(std::move(channel)), values_(std::move(initial)), window_length_(window_length) {}

  const std::string& channel() const { return channel_; }
  std::span<const double> values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  std::size_t windows_absorbed() const { return absorbed_; }
  std::size_t window_length() const { return window_length_; }

  void absorb(std::span<const double> window) {
    values_.insert(values_.end(), window.begin(), window.end());
    ++absorbed_;
  }

  friend bool operator==(const ComparisonDataset&, const ComparisonDataset&) = default;

 private:
  std::string channel_;
  std::vector<double> values_;
  std::size_t window_length_ = 0;
  std::size_t absorbed_ = 0;
};

/// Cuts floor(len / L) consecutive windows; the remainder is dropped.
/// `origin` maps each stable position to its original index; when empty the
/// identity mapping is used.
inline std::vector<QueryWindow> partition_windows(const std::string& channel, std::span<const double> stable,
                                                  const WindowingConfig& cfg,
                                                  std::span<const std::size_t> origin = {}) {
  const std::size_t len = cfg.window_length;
  if (len < 2) fail(ErrorCode::InvalidConfig, "window length must be >= 2");
  if (!origin.empty() && origin.size() != stable.size()) {
    fail(ErrorCode::InvalidConfig, "origin map length differs from series length");
  }
  if (stable.size() < len) {
    fail(ErrorCode::SeriesShorterThanWindow, "channel '" + channel + "': " + std::to_string(stable.size()) +
                                                 " stable points < window length " + std::to_string(len));
  }
  const std::size_t count = stable.size() / len;
  std::vector<QueryWindow> out;
  out.reserve(count);
  for (std::size_t p = 0; p < count; ++p) {
    QueryWindow w;
    w.channel = channel;
    w.index = p;
    w.values.assign(stable.begin() + static_cast<std::ptrdiff_t>(p * len),
                    stable.begin() + static_cast<std::ptrdiff_t>((p + 1) * len));
    w.origin_first = origin.empty() ? p * len : origin[p * len];
    w.origin_last = origin.empty() ? (p + 1) * len - 1 : origin[(p + 1) * len - 1];
    out.push_back(std::move(w));
  }
  return out;
}

/// Window 0 seeds the baseline; windows 1.. are returned for querying.
inline std::pair<ComparisonDataset, std::vector<QueryWindow>> init_comparison(std::vector<QueryWindow> windows) {
  if (windows.size() < 2) {
    fail(ErrorCode::InsufficientWindows,
         "need at least 2 windows (baseline + query), got " + std::to_string(windows.size()));
  }
  ComparisonDataset c(windows.front().channel, windows.front().values, windows.front().values.size());
  windows.erase(windows.begin());
  return {std::move(c), std::move(windows)};
}

/// Absorbs the window when final_label is 0; otherwise returns c unchanged.
inline ComparisonDataset update_comparison(ComparisonDataset c, const QueryWindow& window, int final_label) {
  if (window.channel != c.channel()) {
    fail(ErrorCode::ChannelMismatch, "window of '" + window.channel + "' offered to baseline of '" +
                                         c.channel() + "'");
  }
  if (final_label == 0) c.absorb(window.values);
  return c;
}

}  // namespace aadllm::baseline
