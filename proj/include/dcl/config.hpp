#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "dcl/errors.hpp"
#include "dcl/rng.hpp"
#include "dcl/text.hpp"

namespace dcl {

enum class RunMode { baseline, curriculum };

/// Resolved configuration of one training run. Defaults are the documented
/// desk-scale settings; every field can come from the key=value config file
/// or a CLI override.
struct RunConfig {
  RunMode mode = RunMode::baseline;

  std::string train_path;
  std::string valid_path;  // optional; carved from train when empty
  std::string test_path;   // optional; falls back to valid when empty

  double valid_fraction = 0.1;
  long long valid_count = -1;  // >= 0 overrides valid_fraction

  std::string tokenizer = "word";
  int min_count = 2;

  int dim = 64;
  std::string embeddings_path;  // optional external embedding vectors

  double learning_rate = 20.0;  // batch-mean gradient; see TrainConfig
  int batch_size = 256;
  int epochs = 15;
  double l2 = 1e-5;

  std::uint64_t seed = 1;

  int k_levels = 3;
  double theta = 60.0;
  double lambda = 2.0;
  double omega_floor = 0.1;
  int reassign_period = 1;

  std::string out_dir = "run";
  int threads = 1;

  void validate() const {
    if (train_path.empty()) throw usage_error("config: train_path is required");
    if (!(valid_fraction > 0.0 && valid_fraction < 1.0))
      throw usage_error("config: valid_fraction must be in (0, 1)");
    if (tokenizer != "word" && tokenizer != "char")
      throw usage_error("config: tokenizer must be word or char");
    if (min_count < 1) throw usage_error("config: min_count must be >= 1");
    if (dim < 1) throw usage_error("config: dim must be >= 1");
    if (!(learning_rate > 0.0)) throw usage_error("config: lr must be positive");
    if (batch_size < 1) throw usage_error("config: batch_size must be >= 1");
    if (epochs < 0) throw usage_error("config: epochs must be >= 0");
    if (l2 < 0.0) throw usage_error("config: l2 must be >= 0");
    if (k_levels < 1) throw usage_error("config: k must be >= 1");
    if (!(theta > 0.0 && theta <= 100.0)) throw usage_error("config: theta must be in (0, 100]");
    if (!(lambda > 1.0)) throw usage_error("config: lambda must be > 1");
    if (!(omega_floor >= 0.0 && omega_floor < 1.0))
      throw usage_error("config: omega_floor must be in [0, 1)");
    if (reassign_period < 1) throw usage_error("config: reassign_period must be >= 1");
    if (threads < 1) throw usage_error("config: threads must be >= 1");
  }
};

namespace detail {

inline long long parse_int(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw usage_error("config: key '" + key + "' expects an integer, got '" + value + "'");
  }
}

inline double parse_real(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw usage_error("config: key '" + key + "' expects a number, got '" + value + "'");
  }
}

}  // namespace detail

/// Applies one key=value pair onto the config. Unknown keys are rejected by
/// name so typos cannot silently change a run.
inline void apply_config_entry(RunConfig& cfg, const std::string& key, const std::string& value) {
  if (key == "mode") {
    if (value == "baseline")
      cfg.mode = RunMode::baseline;
    else if (value == "curriculum")
      cfg.mode = RunMode::curriculum;
    else
      throw usage_error("config: mode must be baseline or curriculum, got '" + value + "'");
  } else if (key == "train_path") {
    cfg.train_path = value;
  } else if (key == "valid_path") {
    cfg.valid_path = value;
  } else if (key == "test_path") {
    cfg.test_path = value;
  } else if (key == "valid_fraction") {
    cfg.valid_fraction = detail::parse_real(key, value);
  } else if (key == "valid_count") {
    cfg.valid_count = detail::parse_int(key, value);
  } else if (key == "tokenizer") {
    cfg.tokenizer = value;
  } else if (key == "min_count") {
    cfg.min_count = static_cast<int>(detail::parse_int(key, value));
  } else if (key == "dim") {
    cfg.dim = static_cast<int>(detail::parse_int(key, value));
  } else if (key == "embeddings") {
    cfg.embeddings_path = value;
  } else if (key == "lr") {
    cfg.learning_rate = detail::parse_real(key, value);
  } else if (key == "batch_size") {
    cfg.batch_size = static_cast<int>(detail::parse_int(key, value));
  } else if (key == "epochs") {
    cfg.epochs = static_cast<int>(detail::parse_int(key, value));
  } else if (key == "l2") {
    cfg.l2 = detail::parse_real(key, value);
  } else if (key == "seed") {
    cfg.seed = static_cast<std::uint64_t>(detail::parse_int(key, value));
  } else if (key == "k") {
    cfg.k_levels = static_cast<int>(detail::parse_int(key, value));
  } else if (key == "theta") {
    cfg.theta = detail::parse_real(key, value);
  } else if (key == "lambda") {
    cfg.lambda = detail::parse_real(key, value);
  } else if (key == "omega_floor") {
    cfg.omega_floor = detail::parse_real(key, value);
  } else if (key == "reassign_period") {
    cfg.reassign_period = static_cast<int>(detail::parse_int(key, value));
  } else if (key == "out_dir") {
    cfg.out_dir = value;
  } else if (key == "threads") {
    cfg.threads = static_cast<int>(detail::parse_int(key, value));
  } else {
    throw usage_error("config: unknown key '" + key + "'");
  }
}

/// Parses the plain-text config format: one key = value per line, blank
/// lines and #-comments skipped.
inline RunConfig parse_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open config file: " + path);
  RunConfig cfg;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string stripped = detail::trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos)
      throw usage_error(path + ": line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = detail::trim(stripped.substr(0, eq));
    const std::string value = detail::trim(stripped.substr(eq + 1));
    apply_config_entry(cfg, key, value);
  }
  return cfg;
}

/// Stable key-order JSON of the resolved configuration (manifest material).
inline nlohmann::ordered_json config_to_json(const RunConfig& cfg) {
  nlohmann::ordered_json j;
  j["mode"] = cfg.mode == RunMode::baseline ? "baseline" : "curriculum";
  j["train_path"] = cfg.train_path;
  j["valid_path"] = cfg.valid_path;
  j["test_path"] = cfg.test_path;
  j["valid_fraction"] = cfg.valid_fraction;
  j["valid_count"] = cfg.valid_count;
  j["tokenizer"] = cfg.tokenizer;
  j["min_count"] = cfg.min_count;
  j["dim"] = cfg.dim;
  j["embeddings"] = cfg.embeddings_path;
  j["lr"] = cfg.learning_rate;
  j["batch_size"] = cfg.batch_size;
  j["epochs"] = cfg.epochs;
  j["l2"] = cfg.l2;
  j["seed"] = cfg.seed;
  j["k"] = cfg.k_levels;
  j["theta"] = cfg.theta;
  j["lambda"] = cfg.lambda;
  j["omega_floor"] = cfg.omega_floor;
  j["reassign_period"] = cfg.reassign_period;
  j["out_dir"] = cfg.out_dir;
  j["threads"] = cfg.threads;
  return j;
}

/// FNV-1a hash of the canonical resolved config, as 16 hex digits. Identifies
/// a run setup in manifests and checkpoints. out_dir and threads do not
/// change results, so they are excluded: runs differing only there hash the
/// same.
inline std::string config_hash(const RunConfig& cfg) {
  auto j = config_to_json(cfg);
  j.erase("out_dir");
  j.erase("threads");
  const std::string canonical = j.dump();
  const std::uint64_t h = detail::fnv1a64(canonical);
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

}  // namespace dcl
