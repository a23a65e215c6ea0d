#pragma once

#include <cstdio>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "aadllm/core_model.hpp"
#include "aadllm/error.hpp"

namespace aadllm::eval {

enum class CountingMode { IncludeSpcPoints, ExcludeSpcPoints };

inline std::string_view to_string(CountingMode m) {
  return m == CountingMode::IncludeSpcPoints ? "include_spc_points" : "exclude_spc_points";
}

struct ConfusionCounts {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;

  std::size_t total() const { return tp + fp + tn + fn; }
  ConfusionCounts& operator+=(const ConfusionCounts& o) {
    tp += o.tp, fp += o.fp, tn += o.tn, fn += o.fn;
    return *this;
  }
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

/// Point-wise counts. In ExcludeSpcPoints mode the indices in `spc_removed`
/// are left out of scoring.
inline ConfusionCounts confusion(std::span<const Label> predicted, std::span<const Label> truth,
                                 CountingMode mode = CountingMode::IncludeSpcPoints,
                                 std::span<const std::size_t> spc_removed = {}) {
  if (predicted.size() != truth.size()) {
    fail(ErrorCode::LengthMismatch, "predicted " + std::to_string(predicted.size()) + " vs truth " +
                                        std::to_string(truth.size()));
  }
  std::vector<bool> skip(predicted.size(), false);
  if (mode == CountingMode::ExcludeSpcPoints) {
    for (auto i : spc_removed) {
      if (i < skip.size()) skip[i] = true;
    }
  }
  ConfusionCounts c;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    if (skip[i]) continue;
    const bool p = predicted[i] != 0, t = truth[i] != 0;
    if (p && t) ++c.tp;
    else if (p) ++c.fp;
    else if (t) ++c.fn;
    else ++c.tn;
  }
  return c;
}

inline double f1_score(double precision, double recall) {
  return precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
}

/// A ratio whose denominator was zero is reported as 0 and flagged.
struct Metrics {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double far_percent = 0.0;
  double mar_percent = 0.0;
  ConfusionCounts counts;
  bool precision_degenerate = false;
  bool recall_degenerate = false;
  bool far_degenerate = false;
  bool mar_degenerate = false;
};

inline Metrics metrics(const ConfusionCounts& c) {
  if (c.total() == 0) fail(ErrorCode::EmptyEvaluation, "no points to score");
  auto ratio = [](std::size_t num, std::size_t den, bool& degenerate) {
    degenerate = den == 0;
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
  };
  Metrics m;
  m.counts = c;
  m.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
  m.precision = ratio(c.tp, c.tp + c.fp, m.precision_degenerate);
  m.recall = ratio(c.tp, c.tp + c.fn, m.recall_degenerate);
  m.f1 = f1_score(m.precision, m.recall);
  m.far_percent = 100.0 * ratio(c.fp, c.fp + c.tn, m.far_degenerate);
  m.mar_percent = 100.0 * ratio(c.fn, c.fn + c.tp, m.mar_degenerate);
  return m;
}

/// Unweighted mean of each metric across files; counts are summed. The F1
/// field is the mean of per-file F1 values, not the harmonic mean of the
/// averaged precision and recall.
inline Metrics macro_average(std::span<const Metrics> per_file) {
  if (per_file.empty()) fail(ErrorCode::EmptyEvaluation, "no files to average");
  Metrics m;
  const double n = static_cast<double>(per_file.size());
  for (const auto& f : per_file) {
    m.accuracy += f.accuracy / n;
    m.precision += f.precision / n;
    m.recall += f.recall / n;
    m.f1 += f.f1 / n;
    m.far_percent += f.far_percent / n;
    m.mar_percent += f.mar_percent / n;
    m.counts += f.counts;
    m.precision_degenerate |= f.precision_degenerate;
    m.recall_degenerate |= f.recall_degenerate;
    m.far_degenerate |= f.far_degenerate;
    m.mar_degenerate |= f.mar_degenerate;
  }
  return m;
}

struct EvalReport {
  Metrics metrics;
  CountingMode counting_mode = CountingMode::IncludeSpcPoints;
  std::string aggregation = "pooled";  // pooled | macro
  std::map<std::string, std::string> metadata;
};

inline nlohmann::ordered_json to_json(const EvalReport& r) {
  const auto& m = r.metrics;
  nlohmann::ordered_json j;
  j["counting_mode"] = std::string(to_string(r.counting_mode));
  j["aggregation"] = r.aggregation;
  j["accuracy"] = m.accuracy;
  j["precision"] = m.precision;
  j["recall"] = m.recall;
  j["f1"] = m.f1;
  j["far_percent"] = m.far_percent;
  j["mar_percent"] = m.mar_percent;
  j["counts"] = {{"tp", m.counts.tp}, {"fp", m.counts.fp}, {"tn", m.counts.tn}, {"fn", m.counts.fn}};
  j["degenerate"] = {{"precision", m.precision_degenerate},
                     {"recall", m.recall_degenerate},
                     {"far", m.far_degenerate},
                     {"mar", m.mar_degenerate}};
  j["metadata"] = r.metadata;
  return j;
}

/// Aligned table: accuracy/precision/recall/F1 block followed by the
/// F1 / FAR / MAR block.
inline std::string to_text(const EvalReport& r) {
  const auto& m = r.metrics;
  char buf[160];
  std::string out;
  auto row = [&](const char* name, double v, bool degenerate) {
    std::snprintf(buf, sizeof(buf), "| %-10s | %10.6f |%s\n", name, v, degenerate ? " (degenerate)" : "");
    out += buf;
  };
  out += "counting mode: " + std::string(to_string(r.counting_mode)) + ", aggregation: " + r.aggregation + "\n";
  for (const auto& [k, v] : r.metadata) out += k + ": " + v + "\n";
  out += "| Metric     |      Value |\n|------------|------------|\n";
  row("Accuracy", m.accuracy, false);
  row("Precision", m.precision, m.precision_degenerate);
  row("Recall", m.recall, m.recall_degenerate);
  row("F1 score", m.f1, false);
  out += "\n|     F1 |  FAR, % |  MAR, % |\n|--------|---------|---------|\n";
  std::snprintf(buf, sizeof(buf), "| %6.2f | %7.2f | %7.2f |\n", m.f1, m.far_percent, m.mar_percent);
  out += buf;
  std::snprintf(buf, sizeof(buf), "\ntp=%zu fp=%zu tn=%zu fn=%zu\n", m.counts.tp, m.counts.fp, m.counts.tn, m.counts.fn);
  out += buf;
  return out;
}

}  // namespace aadllm::eval
