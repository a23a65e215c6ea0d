#pragma once

#include <charconv>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "aadllm/core_model.hpp"
#include "aadllm/error.hpp"

namespace aadllm {

/// Which CSV columns play which role. Sensor columns default to every column
/// that is not the datetime, label, or changepoint column, in file order.
struct ColumnMapping {
  std::string datetime_column = "datetime";
  std::string label_column = "anomaly";
  std::string changepoint_column = "changepoint";
  // When true a missing label column is an error instead of "no labels".
  bool require_labels = false;
  std::vector<std::string> sensor_columns;
  // 0 = auto-detect among ',' and ';' from the header row.
  char delimiter = 0;
};

namespace csv_detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '"')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '"' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

inline std::vector<std::string> split(std::string_view line, char delim) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(delim, start);
    auto cell = line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start);
    out.emplace_back(trim(cell));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline char detect_delimiter(std::string_view header) {
  std::size_t commas = 0, semis = 0;
  for (char c : header) {
    commas += c == ',';
    semis += c == ';';
  }
  return semis > commas ? ';' : ',';
}

inline std::optional<double> parse_double(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

}  // namespace csv_detail

/// Parses a timestamp cell into seconds. Accepts plain numbers and
/// "YYYY-MM-DD[ T]HH:MM:SS[.fff]" / "YYYY-MM-DD" interpreted as UTC.
inline std::optional<double> parse_timestamp(std::string_view text) {
  text = csv_detail::trim(text);
  if (auto num = csv_detail::parse_double(text)) return num;
  std::tm tm{};
  std::string s(text);
  for (auto& c : s) {
    if (c == 'T') c = ' ';
  }
  std::istringstream in(s);
  in >> std::get_time(&tm, "%Y-%m-%d %H:%M:%S");
  double frac = 0.0;
  if (in.fail()) {
    tm = {};
    std::istringstream date_only(s);
    date_only >> std::get_time(&tm, "%Y-%m-%d");
    if (date_only.fail()) return std::nullopt;
    std::string rest;
    std::getline(date_only, rest);
    if (!csv_detail::trim(rest).empty()) return std::nullopt;
  } else {
    std::string rest;
    std::getline(in, rest);
    auto r = csv_detail::trim(rest);
    if (!r.empty() && r.back() == 'Z') r.remove_suffix(1);
    if (!r.empty()) {
      if (r.front() != '.') return std::nullopt;
      std::string frac_text = "0" + std::string(r);
      auto f = csv_detail::parse_double(frac_text);
      if (!f) return std::nullopt;
      frac = *f;
    }
  }
  return static_cast<double>(timegm(&tm)) + frac;
}

/// Parses CSV text. `id` becomes the instance id.
inline TimeSeriesInstance parse_labeled_csv(std::string_view text, const ColumnMapping& mapping,
                                            std::string id) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    auto pos = text.find('\n', start);
    auto line = text.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start);
    if (!csv_detail::trim(line).empty()) lines.push_back(line);
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  if (lines.empty()) fail(ErrorCode::EmptyFile, "no header row in '" + id + "'");
  if (lines.size() == 1) fail(ErrorCode::EmptyFile, "no data rows in '" + id + "'");

  const char delim = mapping.delimiter ? mapping.delimiter : csv_detail::detect_delimiter(lines[0]);
  auto header = csv_detail::split(lines[0], delim);
  auto column_of = [&](const std::string& name) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return i;
    }
    return std::nullopt;
  };

  auto dt_col = column_of(mapping.datetime_column);
  if (!dt_col) fail(ErrorCode::MissingColumn, "datetime column '" + mapping.datetime_column + "'");
  std::optional<std::size_t> label_col;
  if (!mapping.label_column.empty()) label_col = column_of(mapping.label_column);
  if (!label_col && mapping.require_labels) {
    fail(ErrorCode::MissingColumn, "label column '" + mapping.label_column + "'");
  }
  std::optional<std::size_t> cp_col;
  if (!mapping.changepoint_column.empty()) cp_col = column_of(mapping.changepoint_column);

  std::vector<std::size_t> sensor_cols;
  if (mapping.sensor_columns.empty()) {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (i == *dt_col || (label_col && i == *label_col) || (cp_col && i == *cp_col)) continue;
      sensor_cols.push_back(i);
    }
  } else {
    for (const auto& name : mapping.sensor_columns) {
      auto c = column_of(name);
      if (!c) fail(ErrorCode::MissingColumn, "sensor column '" + name + "'");
      sensor_cols.push_back(*c);
    }
  }

  TimeSeriesInstance inst;
  inst.id = std::move(id);
  for (auto c : sensor_cols) inst.channels.push_back(ChannelSeries{header[c], std::nullopt, {}});
  if (label_col) inst.labels.emplace();
  if (cp_col) inst.changepoints.emplace();

  auto bad = [&](std::size_t row, std::size_t col) {
    fail(ErrorCode::UnparseableValue,
         "row " + std::to_string(row) + ", column '" + header[col] + "' in '" + inst.id + "'");
  };
  auto parse_flag = [&](const std::string& cell, std::size_t row, std::size_t col) -> Label {
    auto v = csv_detail::parse_double(cell);
    if (!v || (*v != 0.0 && *v != 1.0)) bad(row, col);
    return static_cast<Label>(*v);
  };

  for (std::size_t r = 1; r < lines.size(); ++r) {
    auto cells = csv_detail::split(lines[r], delim);
    if (cells.size() != header.size()) {
      fail(ErrorCode::UnparseableValue, "row " + std::to_string(r) + " has " +
                                            std::to_string(cells.size()) + " cells, header has " +
                                            std::to_string(header.size()));
    }
    auto ts = parse_timestamp(cells[*dt_col]);
    if (!ts) bad(r, *dt_col);
    inst.timestamps.push_back(*ts);
    inst.timestamp_text.push_back(cells[*dt_col]);
    for (std::size_t k = 0; k < sensor_cols.size(); ++k) {
      auto v = csv_detail::parse_double(cells[sensor_cols[k]]);
      if (!v) bad(r, sensor_cols[k]);
      inst.channels[k].values.push_back(*v);
    }
    if (label_col) inst.labels->push_back(parse_flag(cells[*label_col], r, *label_col));
    if (cp_col) inst.changepoints->push_back(parse_flag(cells[*cp_col], r, *cp_col));
  }
  validate(inst);
  return inst;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::FileNotFound, path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline TimeSeriesInstance load_labeled_csv(const std::filesystem::path& path,
                                           const ColumnMapping& mapping = {}) {
  return parse_labeled_csv(read_file(path), mapping, path.stem().string());
}

/// Shortest decimal text that parses back to the same double.
inline std::string format_exact(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

/// Writes an instance in the same CSV schema the loader reads.
inline void write_instance_csv(std::ostream& out, const TimeSeriesInstance& inst, char delim = ',') {
  out << "datetime";
  for (const auto& ch : inst.channels) out << delim << ch.name;
  if (inst.labels) out << delim << "anomaly";
  if (inst.changepoints) out << delim << "changepoint";
  out << '\n';
  for (std::size_t t = 0; t < inst.length(); ++t) {
    out << (inst.timestamp_text.empty() ? format_exact(inst.timestamps[t]) : inst.timestamp_text[t]);
    for (const auto& ch : inst.channels) out << delim << format_exact(ch.values[t]);
    if (inst.labels) out << delim << int((*inst.labels)[t]);
    if (inst.changepoints) out << delim << int((*inst.changepoints)[t]);
    out << '\n';
  }
}

inline void write_instance_csv(const std::filesystem::path& path, const TimeSeriesInstance& inst,
                               char delim = ',') {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
  write_instance_csv(out, inst, delim);
}

}  // namespace aadllm
