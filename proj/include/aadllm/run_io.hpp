#pragma once

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "aadllm/csv_io.hpp"
#include "aadllm/detector.hpp"
#include "aadllm/digest.hpp"
#include "aadllm/eval.hpp"

namespace aadllm::io {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

/// Everything a run needs besides its inputs.
struct RunConfig {
  DetectionConfig detection;
  ColumnMapping columns;
};

// ---------------------------------------------------------------------------
// Config <-> JSON

inline json to_json(const RunConfig& rc) {
  const auto& d = rc.detection;
  const auto& b = d.backend;
  json j;
  j["window_length"] = d.windowing.window_length;
  j["spc"] = {{"span", d.spc.span}, {"x_multiplier", d.spc.x_multiplier}, {"mr_multiplier", d.spc.mr_multiplier}};
  j["mode"] = std::string(to_string(d.mode));
  j["selected_channels"] = d.selected_channels ? json(*d.selected_channels) : json(nullptr);
  j["auto_select_features"] = d.auto_select_features;
  j["feature_alpha"] = d.feature_alpha;
  j["prompt"] = {{"window_phrase", d.prompt.window_phrase}, {"max_chars", d.prompt.max_chars}};
  j["backend"] = {{"kind", std::string(backend::to_string(b.kind))},
                  {"endpoint_url", b.endpoint_url},
                  {"model_name", b.model_name},
                  {"temperature", b.temperature},
                  {"max_output_tokens", b.max_output_tokens},
                  {"timeout_ms", b.timeout.count()},
                  {"max_retries", b.max_retries},
                  {"initial_backoff_ms", b.initial_backoff.count()},
                  {"api_key_env_var", b.api_key_env_var},
                  {"oracle_z_threshold", b.oracle_z_threshold},
                  {"replay_store_path", b.replay_store_path},
                  {"record_store_path", b.record_store_path}};
  const auto& c = rc.columns;
  j["columns"] = {{"datetime", c.datetime_column},
                  {"label", c.label_column},
                  {"changepoint", c.changepoint_column},
                  {"require_labels", c.require_labels},
                  {"sensors", c.sensor_columns},
                  {"delimiter", c.delimiter ? std::string(1, c.delimiter) : std::string()}};
  return j;
}

/// Overlays the keys present in `j` onto `rc`; absent keys keep their value.
inline void apply_json(RunConfig& rc, const nlohmann::json& j) {
  try {
    auto& d = rc.detection;
    if (j.contains("window_length")) d.windowing.window_length = j["window_length"].get<std::size_t>();
    if (j.contains("spc")) {
      const auto& s = j["spc"];
      d.spc.span = s.value("span", d.spc.span);
      d.spc.x_multiplier = s.value("x_multiplier", d.spc.x_multiplier);
      d.spc.mr_multiplier = s.value("mr_multiplier", d.spc.mr_multiplier);
    }
    if (j.contains("mode")) d.mode = binarization_mode_from(j["mode"].get<std::string>());
    if (j.contains("selected_channels")) {
      if (j["selected_channels"].is_null()) d.selected_channels.reset();
      else d.selected_channels = j["selected_channels"].get<std::vector<std::string>>();
    }
    d.auto_select_features = j.value("auto_select_features", d.auto_select_features);
    d.feature_alpha = j.value("feature_alpha", d.feature_alpha);
    if (j.contains("prompt")) {
      d.prompt.window_phrase = j["prompt"].value("window_phrase", d.prompt.window_phrase);
      d.prompt.max_chars = j["prompt"].value("max_chars", d.prompt.max_chars);
    }
    if (j.contains("backend")) {
      const auto& jb = j["backend"];
      auto& b = d.backend;
      if (jb.contains("kind")) b.kind = backend::backend_kind_from(jb["kind"].get<std::string>());
      b.endpoint_url = jb.value("endpoint_url", b.endpoint_url);
      b.model_name = jb.value("model_name", b.model_name);
      b.temperature = jb.value("temperature", b.temperature);
      b.max_output_tokens = jb.value("max_output_tokens", b.max_output_tokens);
      b.timeout = std::chrono::milliseconds(jb.value("timeout_ms", b.timeout.count()));
      b.max_retries = jb.value("max_retries", b.max_retries);
      b.initial_backoff = std::chrono::milliseconds(jb.value("initial_backoff_ms", b.initial_backoff.count()));
      b.api_key_env_var = jb.value("api_key_env_var", b.api_key_env_var);
      b.oracle_z_threshold = jb.value("oracle_z_threshold", b.oracle_z_threshold);
      b.replay_store_path = jb.value("replay_store_path", b.replay_store_path);
      b.record_store_path = jb.value("record_store_path", b.record_store_path);
    }
    if (j.contains("columns")) {
      const auto& jc = j["columns"];
      auto& c = rc.columns;
      c.datetime_column = jc.value("datetime", c.datetime_column);
      c.label_column = jc.value("label", c.label_column);
      c.changepoint_column = jc.value("changepoint", c.changepoint_column);
      c.require_labels = jc.value("require_labels", c.require_labels);
      if (jc.contains("sensors")) c.sensor_columns = jc["sensors"].get<std::vector<std::string>>();
      if (jc.contains("delimiter")) {
        const auto s = jc["delimiter"].get<std::string>();
        c.delimiter = s.empty() ? 0 : s.front();
      }
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::InvalidConfig, e.what());
  }
}

inline RunConfig load_run_config(const fs::path& path) {
  auto j = nlohmann::json::parse(read_file(path), nullptr, false, true);
  if (j.is_discarded() || !j.is_object()) fail(ErrorCode::InvalidConfig, "config is not a JSON object: " + path.string());
  RunConfig rc;
  apply_json(rc, j);
  return rc;
}

// ---------------------------------------------------------------------------
// Detection output

inline json stats_json(const stats::StatDerivatives& s) {
  return {{"window_mean", s.window_mean},
          {"window_max", s.window_max},
          {"z_score", s.z_score},
          {"baseline_mean", s.baseline_mean},
          {"baseline_std", s.baseline_std}};
}

/// One audit line per decided window: prompt, raw answer, per-channel inputs.
inline json audit_json(const WindowVerdict& w) {
  json channels = json::array();
  for (const auto& c : w.channels) {
    channels.push_back({{"channel", c.channel},
                        {"baseline_size", c.baseline_size},
                        {"origin_first", c.origin_first},
                        {"origin_last", c.origin_last},
                        {"stats", stats_json(c.stats)}});
  }
  return {{"window", w.window},
          {"prompt_hash", w.prompt_hash},
          {"queries", w.queries},
          {"final_label", w.final_label},
          {"prompt", w.prompt_text},
          {"response", w.raw_text},
          {"channels", channels}};
}

inline json to_json(const DetectionOutput& out) {
  json windows = json::array();
  for (const auto& w : out.windows) {
    json flags = json::object();
    for (std::size_t i = 0; i < w.flags.channels.size(); ++i) flags[w.flags.channels[i]] = w.flags.flags[i];
    json spans = json::array();
    for (const auto& c : w.channels) spans.push_back({c.origin_first, c.origin_last});
    windows.push_back({{"window", w.window},
                       {"flags", flags},
                       {"final_label", w.final_label},
                       {"prompt_hash", w.prompt_hash},
                       {"origin_spans", spans}});
  }
  json j;
  j["instance_id"] = out.instance_id;
  j["channels"] = out.channels;
  j["length"] = out.length;
  j["windows"] = windows;
  j["spc_removed"] = out.spc_removed;
  j["spc_removed_by_channel"] = out.spc_removed_by_channel;
  j["final_baseline_sizes"] = out.final_baseline_sizes;
  j["dropped_query_windows"] = out.dropped_query_windows;
  j["point_labels"] = out.point_labels;
  return j;
}

/// The fields eval needs, read back from detection.json.
struct StoredDetection {
  std::string instance_id;
  LabelVector point_labels;
  std::vector<std::size_t> spc_removed;
};

inline StoredDetection read_detection(const fs::path& path) {
  auto j = nlohmann::json::parse(read_file(path), nullptr, false);
  if (j.is_discarded()) fail(ErrorCode::Io, "cannot parse " + path.string());
  try {
    return {j.at("instance_id").get<std::string>(), j.at("point_labels").get<LabelVector>(),
            j.at("spc_removed").get<std::vector<std::size_t>>()};
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Io, path.string() + ": " + e.what());
  }
}

inline void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
  out << text;
}

inline std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline std::string file_digest(const fs::path& path) { return sha256_hex(read_file(path)); }

/// Per-instance output directory: <run>/instances/<id>.
inline fs::path instance_dir(const fs::path& run_dir, const std::string& id) { return run_dir / "instances" / id; }

inline void write_point_labels_csv(const fs::path& path, const TimeSeriesInstance& inst, const DetectionOutput& out) {
  std::ofstream f(path, std::ios::binary);
  if (!f) fail(ErrorCode::Io, "cannot write " + path.string());
  f << "index,datetime,label\n";
  for (std::size_t i = 0; i < out.point_labels.size(); ++i) {
    f << i << ',' << (inst.timestamp_text.empty() ? format_exact(inst.timestamps[i]) : inst.timestamp_text[i]) << ','
      << int(out.point_labels[i]) << '\n';
  }
}

}  // namespace aadllm::io
