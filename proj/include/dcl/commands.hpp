#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "dcl/checkpoint.hpp"
#include "dcl/config.hpp"
#include "dcl/data.hpp"
#include "dcl/errors.hpp"
#include "dcl/pipeline.hpp"

namespace dcl {

// ---------------------------------------------------------------------------
// convert

struct ConvertOptions {
  std::string input;
  std::string format;  // banking77-csv | clinc150-json | jsonl
  std::string output;
  std::string text_column = "text";
  std::string label_column = "category";
  std::string split = "all";  // clinc150-json only
};

/// Converts a source corpus into the canonical JSONL sample format and prints
/// the record count. Inputs are never modified.
inline void cmd_convert(const ConvertOptions& opt, std::ostream& out) {
  std::vector<RawRecord> records;
  if (opt.format == "banking77-csv") {
    records = ingest_csv(opt.input, opt.text_column, opt.label_column);
  } else if (opt.format == "clinc150-json") {
    records = ingest_clinc_json(opt.input, opt.split);
  } else if (opt.format == "jsonl") {
    records = ingest_jsonl(opt.input);
  } else {
    throw usage_error("unknown format '" + opt.format + "' (expected banking77-csv|clinc150-json|jsonl)");
  }
  emit_jsonl(records, opt.output);
  out << "wrote " << records.size() << " records to " << opt.output << "\n";
}

// ---------------------------------------------------------------------------
// train

struct TrainOptions {
  std::string config_path;
  std::vector<std::pair<std::string, std::string>> overrides;  // applied after the file
};

namespace detail {

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot write " + path.string());
  out << content;
}

inline void write_level_error_csv(const std::filesystem::path& path,
                                  const std::map<int, LevelError>& per_level) {
  std::string csv = "level,count,errors,error_rate\n";
  for (const auto& [level, e] : per_level) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "%d,%lld,%lld,%.6f\n", level, e.count, e.errors, e.error_rate);
    csv += buf;
  }
  write_text_file(path, csv);
}

}  // namespace detail

inline RunConfig resolve_train_config(const TrainOptions& opt) {
  RunConfig cfg = parse_config_file(opt.config_path);
  for (const auto& [key, value] : opt.overrides) apply_config_entry(cfg, key, value);
  cfg.validate();
  return cfg;
}

/// Runs a full training job and writes the run directory: manifest.json,
/// metrics.json, checkpoint.json, epochs.jsonl and, for curriculum runs,
/// schedule.jsonl and assignment.jsonl. Prints the final test metrics to
/// `out` as a single JSON line.
inline RunResult cmd_train(const TrainOptions& opt, std::ostream& out) {
  const RunConfig cfg = resolve_train_config(opt);
  const std::string hash = config_hash(cfg);
  const LoadedData data = load_dataset(cfg);
  RunResult result = run(cfg, data);

  const std::filesystem::path dir(cfg.out_dir);
  std::filesystem::create_directories(dir);

  // metrics.json: deterministic for a fixed config and seed (no timestamps).
  nlohmann::ordered_json metrics;
  metrics["mode"] = cfg.mode == RunMode::baseline ? "baseline" : "curriculum";
  metrics["config_hash"] = hash;
  metrics["seed"] = cfg.seed;
  metrics["best_epoch"] = result.best_epoch;
  metrics["best_valid_accuracy"] = result.best_valid_accuracy;
  metrics["test"] = result.test_metrics.to_json(data.label_vocab.id_to_label);
  detail::write_text_file(dir / "metrics.json", metrics.dump(2) + "\n");

  nlohmann::ordered_json manifest;
  manifest["config"] = config_to_json(cfg);
  manifest["config_hash"] = hash;
  manifest["dataset"] = data.manifest;
  manifest["best_epoch"] = result.best_epoch;
  manifest["best_valid_accuracy"] = result.best_valid_accuracy;
  {
    nlohmann::ordered_json final_metrics;
    final_metrics["accuracy"] = as_percent(result.test_metrics.accuracy);
    final_metrics["precision"] = as_percent(result.test_metrics.macro_precision);
    final_metrics["recall"] = as_percent(result.test_metrics.macro_recall);
    final_metrics["f1"] = as_percent(result.test_metrics.macro_f1);
    manifest["metrics"] = std::move(final_metrics);
  }
  detail::write_text_file(dir / "manifest.json", manifest.dump(2) + "\n");

  {
    std::ofstream log(dir / "epochs.jsonl", std::ios::binary);
    for (const auto& e : result.epoch_logs) {
      nlohmann::ordered_json j;
      j["epoch"] = e.epoch;
      j["round"] = e.round;
      j["loss"] = e.loss;
      j["trained_on"] = e.trained_on;
      j["valid_accuracy"] = e.valid_accuracy;
      j["timestamp"] = e.timestamp;
      log << j.dump() << '\n';
    }
  }

  if (cfg.mode == RunMode::curriculum) {
    std::ofstream log(dir / "schedule.jsonl", std::ios::binary);
    for (const auto& s : result.schedule_logs) {
      nlohmann::ordered_json j;
      j["round"] = s.round;
      j["epoch"] = s.epoch;
      j["omegas"] = s.omegas;
      j["avail"] = s.avail;
      j["targets"] = s.targets;
      j["frozen"] = s.frozen;
      j["selected_total"] = s.selected_total;
      log << j.dump() << '\n';
    }
    if (result.assignment) {
      std::ofstream dump(dir / "assignment.jsonl", std::ios::binary);
      dump_assignment(*result.assignment, data.train, data.label_vocab, dump);
    }
  }

  Checkpoint ckpt;
  ckpt.config_hash = hash;
  ckpt.tokenizer = cfg.tokenizer;
  ckpt.encoder = result.encoder;
  ckpt.classifier = result.classifier;
  ckpt.token_vocab = data.token_vocab;
  ckpt.label_vocab = data.label_vocab;
  ckpt.save((dir / "checkpoint.json").string());

  out << metrics_summary_line(result.test_metrics) << "\n";
  return result;
}

// ---------------------------------------------------------------------------
// analyze

struct AnalyzeOptions {
  std::string checkpoint_path;
  std::string dataset_path;  // canonical JSONL
  std::vector<int> k_sweep = {2, 3, 4, 7, 10};
  double theta = 60.0;
  std::string out_dir = ".";
  std::string embeddings_path;  // required when the checkpoint is external
  int threads = 1;
};

/// Error-rate-by-level analysis: for each K in the sweep, writes
/// level_error_K<k>.csv and assignment_K<k>.jsonl to out_dir and prints a
/// summary table.
inline std::vector<LevelAnalysis> cmd_analyze(const AnalyzeOptions& opt, std::ostream& out) {
  Checkpoint ckpt = Checkpoint::load(opt.checkpoint_path);
  if (!ckpt.encoder.trainable()) {
    if (opt.embeddings_path.empty())
      throw usage_error("checkpoint uses external embedding vectors; pass --embeddings (ids are line numbers of the dataset)");
    int dim = 0;
    ckpt.encoder.external = load_external_embeddings(opt.embeddings_path, &dim);
    if (dim != ckpt.encoder.dim)
      throw io_error("embedding dimension " + std::to_string(dim) + " does not match checkpoint dim " +
                     std::to_string(ckpt.encoder.dim));
  }

  const auto records = ingest_jsonl(opt.dataset_path);
  if (records.empty()) throw io_error(opt.dataset_path + ": empty evaluation set");
  const TokenizerMode mode = tokenizer_mode_from_string(ckpt.tokenizer);
  const auto samples = detail::make_samples(records, 0, mode, ckpt.token_vocab, ckpt.label_vocab);

  const auto analyses = analyze_levels(ckpt, samples, opt.k_sweep, opt.theta, opt.threads);

  const std::filesystem::path dir(opt.out_dir);
  std::filesystem::create_directories(dir);
  for (const auto& a : analyses) {
    detail::write_level_error_csv(dir / ("level_error_K" + std::to_string(a.k) + ".csv"), a.per_level);
    std::ofstream dump(dir / ("assignment_K" + std::to_string(a.k) + ".jsonl"), std::ios::binary);
    dump_assignment(a.assignment, samples, ckpt.label_vocab, dump);
  }

  out << "K  level  count  errors  error_rate\n";
  for (const auto& a : analyses) {
    for (const auto& [level, e] : a.per_level) {
      char buf[96];
      std::snprintf(buf, sizeof(buf), "%-2d %-6d %-6lld %-7lld %.2f%%\n", a.k, level, e.count, e.errors,
                    e.error_rate * 100.0);
      out << buf;
    }
  }
  return analyses;
}

// ---------------------------------------------------------------------------
// report

struct ReportOptions {
  std::string dir;
};

/// Summarizes a finished run directory from its manifest and logs. Corrupt
/// log lines are flagged but do not abort the report; a directory with none
/// of the expected files is an error naming them.
inline nlohmann::ordered_json cmd_report(const ReportOptions& opt, std::ostream& out) {
  const std::filesystem::path dir(opt.dir);
  const auto manifest_path = dir / "manifest.json";
  const auto metrics_path = dir / "metrics.json";
  const auto epochs_path = dir / "epochs.jsonl";
  const auto schedule_path = dir / "schedule.jsonl";

  std::vector<std::string> missing;
  for (const auto& p : {manifest_path, metrics_path, epochs_path}) {
    if (!std::filesystem::exists(p)) missing.push_back(p.filename().string());
  }
  if (missing.size() == 3) {
    std::string msg = opt.dir + ": not a run directory; missing files:";
    for (const auto& m : missing) msg += " " + m;
    throw io_error(msg);
  }

  nlohmann::ordered_json report;
  std::vector<std::string> flags;
  for (const auto& m : missing) flags.push_back("missing file: " + m);

  auto try_parse_file = [&](const std::filesystem::path& p) -> nlohmann::json {
    std::ifstream in(p, std::ios::binary);
    if (!in) return nlohmann::json();
    try {
      return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      flags.push_back(p.filename().string() + ": corrupt (" + e.what() + ")");
      return nlohmann::json();
    }
  };

  if (std::filesystem::exists(manifest_path)) {
    const auto manifest = try_parse_file(manifest_path);
    if (manifest.is_object()) {
      report["config_hash"] = manifest.value("config_hash", "");
      if (manifest.contains("config") && manifest["config"].is_object()) {
        report["mode"] = manifest["config"].value("mode", "");
        report["seed"] = manifest["config"].value("seed", 0);
      }
      report["best_epoch"] = manifest.value("best_epoch", -1);
    }
  }
  if (std::filesystem::exists(metrics_path)) {
    const auto metrics = try_parse_file(metrics_path);
    if (metrics.is_object() && metrics.contains("test")) {
      const auto& t = metrics["test"];
      nlohmann::ordered_json summary;
      summary["accuracy"] = as_percent(t.value("accuracy", 0.0));
      summary["precision"] = as_percent(t.value("macro_precision", 0.0));
      summary["recall"] = as_percent(t.value("macro_recall", 0.0));
      summary["f1"] = as_percent(t.value("macro_f1", 0.0));
      report["test"] = summary;
    }
  }

  // Epoch log: count entries, pick up the best-accuracy epoch as a cross-check.
  if (std::filesystem::exists(epochs_path)) {
    std::ifstream in(epochs_path, std::ios::binary);
    std::string line;
    std::size_t lineno = 0, corrupt = 0, entries = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (detail::is_blank(line)) continue;
      try {
        const auto j = nlohmann::json::parse(line);
        (void)j.at("epoch");
        ++entries;
      } catch (const nlohmann::json::exception&) {
        ++corrupt;
      }
    }
    if (corrupt > 0) flags.push_back("epochs.jsonl: " + std::to_string(corrupt) + " corrupt line(s)");
    report["epochs_logged"] = entries;
  }

  // Schedule log: per-round summary plus the complex-level count trajectory.
  if (std::filesystem::exists(schedule_path)) {
    std::ifstream in(schedule_path, std::ios::binary);
    std::string line;
    std::size_t corrupt = 0;
    std::vector<long long> complex_used;
    long long rounds = 0;
    while (std::getline(in, line)) {
      if (detail::is_blank(line)) continue;
      try {
        const auto j = nlohmann::json::parse(line);
        const auto targets = j.at("targets").get<std::vector<long long>>();
        if (!targets.empty()) complex_used.push_back(targets.back());
        rounds = std::max<long long>(rounds, j.value("round", 0) + 1);
      } catch (const nlohmann::json::exception&) {
        ++corrupt;
      }
    }
    if (corrupt > 0) flags.push_back("schedule.jsonl: " + std::to_string(corrupt) + " corrupt line(s)");
    bool non_increasing = true;
    for (std::size_t i = 1; i < complex_used.size(); ++i) {
      if (complex_used[i] > complex_used[i - 1]) non_increasing = false;
    }
    nlohmann::ordered_json sched;
    sched["rounds"] = rounds;
    if (!complex_used.empty()) {
      sched["complex_used_first"] = complex_used.front();
      sched["complex_used_last"] = complex_used.back();
    }
    sched["complex_non_increasing"] = non_increasing;
    report["schedule"] = sched;
  }
  report["flags"] = flags;

  // Human-readable rendering.
  out << "run directory: " << opt.dir << "\n";
  if (report.contains("config_hash")) out << "config hash:  " << report["config_hash"].get<std::string>() << "\n";
  if (report.contains("mode")) out << "mode:         " << report["mode"].get<std::string>() << "\n";
  if (report.contains("best_epoch")) out << "best epoch:   " << report["best_epoch"].get<int>() << "\n";
  if (report.contains("test")) {
    const auto& t = report["test"];
    char buf[160];
    std::snprintf(buf, sizeof(buf), "test:         acc=%.2f%% P=%.2f%% R=%.2f%% F1=%.2f%%\n",
                  t["accuracy"].get<double>(), t["precision"].get<double>(), t["recall"].get<double>(),
                  t["f1"].get<double>());
    out << buf;
  }
  if (report.contains("schedule")) {
    const auto& s = report["schedule"];
    out << "schedule:     rounds=" << s["rounds"].get<long long>();
    if (s.contains("complex_used_first")) {
      out << " complex_used " << s["complex_used_first"].get<long long>() << " -> "
          << s["complex_used_last"].get<long long>();
    }
    out << " non_increasing=" << (s["complex_non_increasing"].get<bool>() ? "yes" : "no") << "\n";
  }
  for (const auto& f : flags) out << "flag:         " << f << "\n";

  detail::write_text_file(dir / "report.json", report.dump(2) + "\n");
  return report;
}

}  // namespace dcl
