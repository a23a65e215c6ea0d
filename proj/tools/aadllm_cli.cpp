// aadllm command-line entry point: detect, eval, spc, features, gen.

#include <CLI11.hpp>

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "aadllm/aadllm.hpp"

namespace fs = std::filesystem;
using namespace aadllm;
using io::json;

namespace {

constexpr const char* kVersion = "0.1.0";

int exit_code_for(ErrorCode code) { return 10 + static_cast<int>(code); }

const char* module_of(ErrorCode code) {
  switch (code) {
    case ErrorCode::MissingColumn:
    case ErrorCode::UnparseableValue:
    case ErrorCode::EmptyFile:
    case ErrorCode::InvalidInstance: return "core_model";
    case ErrorCode::SeriesTooShort:
    case ErrorCode::AllPointsRemoved: return "spc";
    case ErrorCode::DegenerateBaseline:
    case ErrorCode::EmptyWindow:
    case ErrorCode::EmptyGroup:
    case ErrorCode::SingleClassLabels: return "stats";
    case ErrorCode::SeriesShorterThanWindow:
    case ErrorCode::InsufficientWindows:
    case ErrorCode::ChannelMismatch: return "baseline";
    case ErrorCode::FileNotFound:
    case ErrorCode::MalformedContext:
    case ErrorCode::ChannelCountMismatch:
    case ErrorCode::PromptTooLong: return "promptgen";
    case ErrorCode::Timeout:
    case ErrorCode::HttpError:
    case ErrorCode::ReplayMiss:
    case ErrorCode::AuthMissing:
    case ErrorCode::NoVerdictLine:
    case ErrorCode::MissingChannel:
    case ErrorCode::DuplicateChannel:
    case ErrorCode::UnknownToken: return "llm_backend";
    case ErrorCode::MissingGroups: return "detector";
    case ErrorCode::LengthMismatch:
    case ErrorCode::EmptyEvaluation: return "eval";
    case ErrorCode::InvalidConfig:
    case ErrorCode::Io: return "cli";
  }
  return "cli";
}

std::string diagnostic(const Error& e) { return std::string("[") + module_of(e.code()) + "] " + e.what(); }

void ensure_dir(const fs::path& p) {
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) fail(ErrorCode::Io, "cannot create " + p.string() + ": " + ec.message());
}

std::vector<TimeSeriesInstance> load_instances(const std::vector<std::string>& paths, const ColumnMapping& columns) {
  std::vector<TimeSeriesInstance> out;
  std::set<std::string> ids;
  for (const auto& p : paths) {
    auto inst = load_labeled_csv(p, columns);
    // ids name output directories, so they must be unique within a run
    std::string id = inst.id;
    for (int k = 2; !ids.insert(id).second; ++k) id = inst.id + "_" + std::to_string(k);
    inst.id = id;
    out.push_back(std::move(inst));
  }
  return out;
}

// ---------------------------------------------------------------------------
// detect

struct DetectArgs {
  std::vector<std::string> data;
  std::string context;
  std::string config;
  std::string backend;
  std::string store;
  std::string record;
  std::size_t window_length = 0;
  std::string mode;
  std::vector<std::string> channels;
  std::string out;
  unsigned jobs = 1;
};

io::RunConfig resolve_config(const DetectArgs& a) {
  io::RunConfig rc = a.config.empty() ? io::RunConfig{} : io::load_run_config(a.config);
  auto& d = rc.detection;
  if (!a.backend.empty()) d.backend.kind = backend::backend_kind_from(a.backend);
  if (!a.store.empty()) d.backend.replay_store_path = fs::absolute(a.store).string();
  if (!a.record.empty()) d.backend.record_store_path = fs::absolute(a.record).string();
  if (a.window_length) d.windowing.window_length = a.window_length;
  if (!a.mode.empty()) d.mode = binarization_mode_from(a.mode);
  if (!a.channels.empty()) d.selected_channels = a.channels;
  if (d.backend.kind == backend::BackendKind::Replay && d.backend.replay_store_path.empty()) {
    fail(ErrorCode::InvalidConfig, "--backend replay needs --store <path>");
  }
  return rc;
}

int cmd_detect(const DetectArgs& a) {
  const auto rc = resolve_config(a);
  const fs::path run_dir = a.out;
  ensure_dir(run_dir);

  const auto context = prompt::load_domain_context(a.context);
  auto instances = load_instances(a.data, rc.columns);

  json manifest;
  manifest["tool"] = "aadllm";
  manifest["version"] = kVersion;
  manifest["created_utc"] = io::utc_now();
  manifest["resolved_config"] = io::to_json(rc);
  manifest["backend"] = {{"kind", std::string(backend::to_string(rc.detection.backend.kind))},
                         {"model_name", rc.detection.backend.model_name}};
  json inputs = json::array();
  for (std::size_t i = 0; i < instances.size(); ++i) {
    inputs.push_back({{"path", fs::absolute(a.data[i]).string()},
                      {"sha256", io::file_digest(a.data[i])},
                      {"instance_id", instances[i].id},
                      {"output_dir", io::instance_dir(run_dir, instances[i].id).lexically_relative(run_dir).string()}});
  }
  manifest["inputs"] = inputs;
  manifest["context"] = {{"path", fs::absolute(a.context).string()},
                         {"sha256", io::file_digest(a.context)},
                         {"raw_text", context->raw_text},
                         {"restructured_text", context->restructured_text},
                         {"sent_text", context->prompt_text()}};
  if (!rc.detection.backend.replay_store_path.empty()) {
    manifest["replay_store"] = {{"path", rc.detection.backend.replay_store_path},
                                {"sha256", io::file_digest(rc.detection.backend.replay_store_path)}};
  }
  manifest["status"] = "running";
  io::write_text(run_dir / "manifest.json", manifest.dump(2) + "\n");

  const auto backend = backend::make_backend(rc.detection.backend);

  std::vector<std::string> errors(instances.size());
  std::vector<int> codes(instances.size(), 0);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < instances.size(); i = next++) {
      const auto& inst = instances[i];
      const auto dir = io::instance_dir(run_dir, inst.id);
      try {
        ensure_dir(dir);
        write_instance_csv(dir / "instance.csv", inst);
        std::ofstream audit(dir / "audit.jsonl", std::ios::binary);
        auto out = detect_instance(inst, *context, rc.detection, *backend, [&](const WindowVerdict& w) {
          audit << io::audit_json(w).dump() << '\n';
          audit.flush();
        });
        io::write_text(dir / "detection.json", io::to_json(out).dump(2) + "\n");
        io::write_point_labels_csv(dir / "point_labels.csv", inst, out);
      } catch (const Error& e) {
        errors[i] = diagnostic(e.with_context("instance '" + inst.id + "'"));
        codes[i] = exit_code_for(e.code());
        io::write_text(dir / "error.txt", errors[i] + "\n");
      }
    }
  };
  const unsigned jobs = std::max(1u, std::min<unsigned>(a.jobs, static_cast<unsigned>(instances.size())));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < jobs; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  json status = json::array();
  for (std::size_t i = 0; i < instances.size(); ++i) {
    status.push_back({{"instance_id", instances[i].id}, {"ok", errors[i].empty()}, {"error", errors[i]}});
    if (!errors[i].empty()) std::cerr << errors[i] << '\n';
  }
  manifest["instances"] = status;
  manifest["finished_utc"] = io::utc_now();
  manifest["status"] = std::all_of(errors.begin(), errors.end(), [](auto& s) { return s.empty(); }) ? "ok" : "failed";
  io::write_text(run_dir / "manifest.json", manifest.dump(2) + "\n");
  if (manifest["status"] != "ok") {
    for (int c : codes) {
      if (c) return c;
    }
    return 1;
  }
  std::cout << "run directory: " << run_dir.string() << " (" << instances.size() << " instance(s))\n";
  return 0;
}

// ---------------------------------------------------------------------------
// eval

struct EvalArgs {
  std::string run;
  std::vector<std::string> truth;
  std::string config;
};

int cmd_eval(const EvalArgs& a) {
  const fs::path run_dir = a.run;
  const auto manifest_text = read_file(run_dir / "manifest.json");
  auto manifest = nlohmann::json::parse(manifest_text, nullptr, false);
  if (manifest.is_discarded()) fail(ErrorCode::Io, "manifest.json is not valid JSON");

  io::RunConfig rc;
  if (manifest.contains("resolved_config")) io::apply_json(rc, manifest["resolved_config"]);
  std::map<std::string, TimeSeriesInstance> truth_by_id;
  for (const auto& t : a.truth) {
    auto inst = load_labeled_csv(t, rc.columns);
    truth_by_id.emplace(inst.id, std::move(inst));
  }

  std::vector<std::string> ids;
  for (const auto& in : manifest.at("inputs")) ids.push_back(in.at("instance_id").get<std::string>());

  json report;
  report["run"] = fs::absolute(run_dir).string();
  report["mann_whitney_sidedness"] = "two-sided";
  std::string text;
  for (auto mode : {eval::CountingMode::IncludeSpcPoints, eval::CountingMode::ExcludeSpcPoints}) {
    std::vector<eval::Metrics> per_file;
    eval::ConfusionCounts pooled;
    json per_instance = json::object();
    for (const auto& id : ids) {
      const auto dir = io::instance_dir(run_dir, id);
      const auto det = io::read_detection(dir / "detection.json");
      TimeSeriesInstance truth;
      if (auto it = truth_by_id.find(id); it != truth_by_id.end()) {
        truth = it->second;
      } else if (!a.truth.empty() && a.truth.size() == 1 && ids.size() == 1) {
        truth = truth_by_id.begin()->second;
      } else {
        truth = load_labeled_csv(dir / "instance.csv", rc.columns);
      }
      if (!truth.labels) fail(ErrorCode::EmptyEvaluation, "truth for '" + id + "' has no label column");
      const auto counts = eval::confusion(det.point_labels, *truth.labels, mode, det.spc_removed);
      pooled += counts;
      if (counts.total() > 0) {
        per_file.push_back(eval::metrics(counts));
        eval::EvalReport r{per_file.back(), mode, "instance", {}};
        per_instance[id] = eval::to_json(r);
      }
    }
    eval::EvalReport pooled_report{eval::metrics(pooled), mode, "pooled", {{"instances", std::to_string(ids.size())}}};
    eval::EvalReport macro_report{eval::macro_average(per_file), mode, "macro", {{"instances", std::to_string(per_file.size())}}};
    const auto key = std::string(eval::to_string(mode));
    report[key] = {{"pooled", eval::to_json(pooled_report)},
                   {"macro", eval::to_json(macro_report)},
                   {"per_instance", per_instance}};
    text += eval::to_text(pooled_report) + "\n" + eval::to_text(macro_report) + "\n";
  }
  io::write_text(run_dir / "eval.json", report.dump(2) + "\n");
  io::write_text(run_dir / "eval.txt", text);
  std::cout << text;
  return 0;
}

// ---------------------------------------------------------------------------
// spc

struct SpcArgs {
  std::string data;
  std::string config;
  std::string out;
  std::size_t span = 0;
  double x_mult = 0.0;
  double mr_mult = 0.0;
};

int cmd_spc(const SpcArgs& a) {
  io::RunConfig rc = a.config.empty() ? io::RunConfig{} : io::load_run_config(a.config);
  auto cfg = rc.detection.spc;
  if (a.span) cfg.span = a.span;
  if (a.x_mult > 0) cfg.x_multiplier = a.x_mult;
  if (a.mr_mult > 0) cfg.mr_multiplier = a.mr_mult;
  const auto inst = load_labeled_csv(a.data, rc.columns);
  const fs::path out = a.out;
  ensure_dir(out);
  json summary = json::array();
  for (const auto& ch : inst.channels) {
    try {
      const auto res = spc::spc_filter(ch.values, cfg);
      std::ostringstream csv;
      spc::write_chart_csv(csv, ch.values, res, cfg.span);
      io::write_text(out / (ch.name + ".chart.csv"), csv.str());
      auto lim = [](const spc::ControlLimits& l) {
        return json{{"x_bar", l.x_bar}, {"r_bar", l.r_bar}, {"x_ucl", l.x_ucl}, {"x_lcl", l.x_lcl}, {"mr_ucl", l.mr_ucl}};
      };
      summary.push_back({{"channel", ch.name},
                         {"removed", res.removed_indices.size()},
                         {"stable", res.stable_values.size()},
                         {"limits_pass1", lim(res.limits_pass1)},
                         {"limits_pass2", lim(res.limits_pass2)}});
      std::cout << ch.name << ": removed " << res.removed_indices.size() << " of " << ch.values.size() << '\n';
    } catch (const Error& e) {
      throw e.with_context("channel '" + ch.name + "'");
    }
  }
  io::write_text(out / "spc_summary.json", summary.dump(2) + "\n");
  return 0;
}

// ---------------------------------------------------------------------------
// features

struct FeaturesArgs {
  std::vector<std::string> data;
  std::string config;
  double alpha = 0.05;
  std::string out;
};

int cmd_features(const FeaturesArgs& a) {
  io::RunConfig rc = a.config.empty() ? io::RunConfig{} : io::load_run_config(a.config);
  rc.columns.require_labels = true;
  const auto instances = load_instances(a.data, rc.columns);
  const auto sel = stats::select_features(instances, a.alpha);

  std::ostringstream table;
  char buf[256];
  std::snprintf(buf, sizeof(buf), "Mann-Whitney U (two-sided), alpha = %g, files = %zu\n", a.alpha, instances.size());
  table << buf;
  std::snprintf(buf, sizeof(buf), "%-24s %16s %14s %9s\n", "channel", "U", "p", "selected");
  table << buf;
  json j;
  j["alpha"] = a.alpha;
  j["sidedness"] = "two-sided";
  j["files"] = a.data;
  json rows = json::array();
  for (const auto& e : sel.entries) {
    std::snprintf(buf, sizeof(buf), "%-24s %16.1f %14.6g %9s\n", e.channel.c_str(), e.u, e.p_value,
                  e.selected ? "yes" : "no");
    table << buf;
    rows.push_back({{"channel", e.channel},
                    {"U", e.u},
                    {"p_value", e.p_value},
                    {"selected", e.selected},
                    {"n_normal", e.n_normal},
                    {"n_anomalous", e.n_anomalous}});
  }
  j["channels"] = rows;
  j["selected"] = sel.selected();
  std::cout << table.str();
  if (!a.out.empty()) {
    const fs::path out = a.out;
    ensure_dir(out);
    io::write_text(out / "features.txt", table.str());
    io::write_text(out / "features.json", j.dump(2) + "\n");
  }
  return 0;
}

// ---------------------------------------------------------------------------
// gen

struct GenArgs {
  std::string spec;
  std::string out;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::size_t channels = 3;
  std::size_t length = 600;
  double std_dev = 1.0;
  double mean = 0.0;
  std::vector<std::string> anomalies;
};

AnomalySpec parse_anomaly(const std::string& text) {
  // kind:ch[,ch...]:start:duration:magnitude
  std::vector<std::string> parts;
  std::stringstream ss(text);
  for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
  if (parts.size() != 5) fail(ErrorCode::InvalidConfig, "anomaly '" + text + "' is not kind:channels:start:duration:magnitude");
  AnomalySpec a;
  a.kind = anomaly_kind_from(parts[0]);
  std::stringstream cs(parts[1]);
  try {
    for (std::string c; std::getline(cs, c, ',');) a.channels.push_back(std::stoul(c));
    a.start = std::stoul(parts[2]);
    a.duration = std::stoul(parts[3]);
    a.magnitude = std::stod(parts[4]);
  } catch (const std::exception&) {
    fail(ErrorCode::InvalidConfig, "anomaly '" + text + "' has a non-numeric field");
  }
  return a;
}

SyntheticConfig synthetic_from_json(const nlohmann::json& j) {
  SyntheticConfig c;
  try {
    c.n_channels = j.value("n_channels", c.n_channels);
    c.length = j.value("length", c.length);
    c.seed = j.value("seed", c.seed);
    c.id = j.value("id", c.id);
    c.base_mean = j.value("base_mean", std::vector<double>(c.n_channels, 0.0));
    c.base_std = j.value("base_std", std::vector<double>(c.n_channels, 1.0));
    c.channel_names = j.value("channel_names", std::vector<std::string>{});
    for (const auto& ja : j.value("anomalies", nlohmann::json::array())) {
      AnomalySpec a;
      a.kind = anomaly_kind_from(ja.at("kind").get<std::string>());
      a.channels = ja.at("channels").get<std::vector<std::size_t>>();
      a.start = ja.at("start").get<std::size_t>();
      a.duration = ja.at("duration").get<std::size_t>();
      a.magnitude = ja.at("magnitude").get<double>();
      c.anomalies.push_back(a);
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::InvalidConfig, e.what());
  }
  return c;
}

int cmd_gen(const GenArgs& a) {
  SyntheticConfig cfg;
  if (!a.spec.empty()) {
    auto j = nlohmann::json::parse(read_file(a.spec), nullptr, false);
    if (j.is_discarded()) fail(ErrorCode::InvalidConfig, "generator spec is not JSON");
    cfg = synthetic_from_json(j);
  } else {
    cfg.n_channels = a.channels;
    cfg.length = a.length;
    cfg.base_mean.assign(a.channels, a.mean);
    cfg.base_std.assign(a.channels, a.std_dev);
    for (const auto& s : a.anomalies) cfg.anomalies.push_back(parse_anomaly(s));
  }
  if (a.seed_set) cfg.seed = a.seed;
  cfg.id = fs::path(a.out).stem().string();
  const auto inst = generate_synthetic(cfg);
  if (fs::path(a.out).has_parent_path()) ensure_dir(fs::path(a.out).parent_path());
  write_instance_csv(a.out, inst);
  std::cout << "wrote " << a.out << " (" << inst.channel_count() << " channels, " << inst.length() << " rows)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive anomaly detection with SPC-stabilized windows and language-model verdicts"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  DetectArgs detect;
  auto* d = app.add_subcommand("detect", "Run detection over one or more instances");
  d->add_option("--data", detect.data, "Input CSV file(s)")->required()->check(CLI::ExistingFile);
  d->add_option("--context", detect.context, "Domain-context file")->required();
  d->add_option("--config", detect.config, "JSON run config");
  d->add_option("--backend", detect.backend, "Verdict backend")->check(CLI::IsMember({"remote", "oracle", "replay"}));
  d->add_option("--store", detect.store, "Replay store to read (with --backend replay)");
  d->add_option("--record", detect.record, "Append every answer to this replay store");
  d->add_option("--window-length", detect.window_length, "Window length L")->check(CLI::Range(2, 1 << 30));
  d->add_option("--mode", detect.mode, "Binarization mode")->check(CLI::IsMember({"correlated", "any"}));
  d->add_option("--channels", detect.channels, "Explicit channel list");
  d->add_option("--jobs", detect.jobs, "Instances processed in parallel")->check(CLI::PositiveNumber);
  d->add_option("--out", detect.out, "Run directory")->required();

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Score a run directory against ground truth");
  e->add_option("--run,--out", ev.run, "Run directory written by detect")->required();
  e->add_option("--truth", ev.truth, "Ground-truth CSV(s); defaults to the instance dumps in the run");

  SpcArgs sp;
  auto* s = app.add_subcommand("spc", "Export MAMR control charts per channel");
  s->add_option("--data", sp.data, "Input CSV")->required()->check(CLI::ExistingFile);
  s->add_option("--config", sp.config, "JSON run config");
  s->add_option("--span", sp.span, "Moving-average span");
  s->add_option("--x-mult", sp.x_mult, "X-chart multiplier");
  s->add_option("--mr-mult", sp.mr_mult, "mR-chart multiplier");
  s->add_option("--out", sp.out, "Output directory")->required();

  FeaturesArgs fe;
  auto* f = app.add_subcommand("features", "Mann-Whitney feature selection table");
  f->add_option("--data", fe.data, "Labeled CSV file(s), pooled")->required()->check(CLI::ExistingFile);
  f->add_option("--config", fe.config, "JSON run config (column mapping)");
  f->add_option("--alpha", fe.alpha, "Significance level")->check(CLI::Range(0.0, 1.0));
  f->add_option("--out", fe.out, "Directory for features.txt / features.json");

  GenArgs gn;
  auto* g = app.add_subcommand("gen", "Generate a synthetic labeled instance");
  g->add_option("--spec", gn.spec, "JSON generator spec");
  g->add_option("--seed", gn.seed, "RNG seed")->each([&](const std::string&) { gn.seed_set = true; });
  g->add_option("--n-channels", gn.channels, "Number of channels");
  g->add_option("--length", gn.length, "Number of rows");
  g->add_option("--mean", gn.mean, "Base mean of every channel");
  g->add_option("--std", gn.std_dev, "Base standard deviation of every channel");
  g->add_option("--anomaly", gn.anomalies, "kind:channels:start:duration:magnitude (repeatable)");
  g->add_option("--out", gn.out, "Output CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    return app.exit(err);
  }

  try {
    if (*d) return cmd_detect(detect);
    if (*e) return cmd_eval(ev);
    if (*s) return cmd_spc(sp);
    if (*f) return cmd_features(fe);
    if (*g) return cmd_gen(gn);
  } catch (const Error& err) {
    std::cerr << "error: " << diagnostic(err) << '\n';
    return exit_code_for(err.code());
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 1;
  }
  return 0;
}
