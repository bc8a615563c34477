#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <ctime>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "dcl/checkpoint.hpp"
#include "dcl/config.hpp"
#include "dcl/data.hpp"
#include "dcl/difficulty.hpp"
#include "dcl/encoder.hpp"
#include "dcl/errors.hpp"
#include "dcl/metrics.hpp"
#include "dcl/model.hpp"
#include "dcl/parallel.hpp"
#include "dcl/scheduler.hpp"

namespace dcl {

namespace detail {

inline std::string file_checksum(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open file for checksum: " + path);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[1 << 16];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    const std::streamsize got = in.gcount();
    for (std::streamsize i = 0; i < got; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
  }
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(h));
  return std::string(hex);
}

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return std::string(buf);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Dataset loading

/// A fully prepared dataset: tokenized samples with ids unique across the
/// three splits, plus the vocabularies built from train only.
struct LoadedData {
  std::vector<Sample> train;
  std::vector<Sample> valid;
  std::vector<Sample> test;
  TokenVocab token_vocab;
  LabelVocab label_vocab;
  TokenizerMode tok_mode = TokenizerMode::word;
  std::vector<std::string> warnings;
  nlohmann::ordered_json manifest;  // paths, counts, checksums, vocab sizes
};

namespace detail {

inline std::vector<Sample> make_samples(const std::vector<RawRecord>& records, int first_id,
                                        TokenizerMode mode, const TokenVocab& tvocab,
                                        const LabelVocab& lvocab) {
  std::vector<Sample> out;
  out.reserve(records.size());
  int id = first_id;
  for (const auto& r : records) {
    Sample s;
    s.id = id++;
    s.text = r.text;
    s.label_id = lvocab.id_of(r.label);
    for (const auto& tok : tokenize(r.text, mode)) s.tokens.push_back(tvocab.id_of(tok));
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace detail

/// Loads the canonical JSONL corpora named in the config and prepares splits:
///   - test = test_path if given, else the valid_path file (validation-as-test
///     protocol), else an error;
///   - valid = valid_path file when test_path is also given, otherwise carved
///     from train, stratified and seeded (valid_count wins over
///     valid_fraction).
/// Vocabularies come from the training split only.
inline LoadedData load_dataset(const RunConfig& cfg) {
  if (cfg.train_path.empty()) throw usage_error("load_dataset: train_path is required");
  const auto train_records = ingest_jsonl(cfg.train_path);
  if (train_records.empty()) throw io_error(cfg.train_path + ": training set is empty");

  std::vector<RawRecord> valid_records, test_records;
  bool carve_valid = true;
  if (!cfg.test_path.empty()) {
    test_records = ingest_jsonl(cfg.test_path);
    if (!cfg.valid_path.empty()) {
      valid_records = ingest_jsonl(cfg.valid_path);
      carve_valid = false;
    }
  } else if (!cfg.valid_path.empty()) {
    // No test set: evaluate on the provided validation file and carve a fresh
    // validation split from train.
    test_records = ingest_jsonl(cfg.valid_path);
  } else {
    throw usage_error("load_dataset: need test_path or valid_path for evaluation");
  }

  LoadedData data;
  data.tok_mode = tokenizer_mode_from_string(cfg.tokenizer);
  data.label_vocab = build_label_vocab(train_records);

  std::vector<std::vector<std::string>> train_tokens;
  train_tokens.reserve(train_records.size());
  for (const auto& r : train_records) train_tokens.push_back(tokenize(r.text, data.tok_mode));
  data.token_vocab = build_vocab(train_tokens, cfg.min_count);

  std::vector<Sample> train_all =
      detail::make_samples(train_records, 0, data.tok_mode, data.token_vocab, data.label_vocab);
  int next_id = static_cast<int>(train_all.size());

  if (carve_valid) {
    SplitResult sr;
    if (cfg.valid_count >= 0) {
      sr = split_by_count(train_all, static_cast<std::size_t>(cfg.valid_count),
                          derive_seed(cfg.seed, "split"));
    } else {
      sr = split(train_all, cfg.valid_fraction, derive_seed(cfg.seed, "split"));
    }
    data.train = std::move(sr.train);
    data.valid = std::move(sr.valid);
    for (auto& w : sr.warnings) data.warnings.push_back(std::move(w));
  } else {
    data.train = std::move(train_all);
    data.valid = detail::make_samples(valid_records, next_id, data.tok_mode, data.token_vocab,
                                      data.label_vocab);
    next_id += static_cast<int>(data.valid.size());
  }
  data.test =
      detail::make_samples(test_records, next_id, data.tok_mode, data.token_vocab, data.label_vocab);

  nlohmann::ordered_json m;
  m["train_path"] = cfg.train_path;
  m["train_checksum"] = detail::file_checksum(cfg.train_path);
  if (!cfg.valid_path.empty()) {
    m["valid_path"] = cfg.valid_path;
    m["valid_checksum"] = detail::file_checksum(cfg.valid_path);
  }
  if (!cfg.test_path.empty()) {
    m["test_path"] = cfg.test_path;
    m["test_checksum"] = detail::file_checksum(cfg.test_path);
  }
  m["train_count"] = data.train.size();
  m["valid_count"] = data.valid.size();
  m["test_count"] = data.test.size();
  m["token_vocab_size"] = data.token_vocab.size();
  m["num_classes"] = data.label_vocab.size();
  m["warnings"] = data.warnings;
  data.manifest = std::move(m);
  return data;
}

// ---------------------------------------------------------------------------
// Run loop

struct EpochLogEntry {
  int epoch = 0;
  int round = 0;
  double loss = 0.0;
  long long trained_on = 0;
  double valid_accuracy = 0.0;
  std::string timestamp;
};

struct ScheduleLogEntry {
  int round = 0;
  int epoch = 0;
  std::vector<double> omegas;
  std::vector<long long> avail;
  std::vector<long long> targets;
  bool frozen = false;
  long long selected_total = 0;
};

struct RunResult {
  MetricsReport test_metrics;
  int best_epoch = -1;
  double best_valid_accuracy = 0.0;
  std::vector<EpochLogEntry> epoch_logs;
  std::vector<ScheduleLogEntry> schedule_logs;
  Encoder encoder;               // parameters of the selected (best) epoch
  LinearClassifier classifier;   // parameters of the selected (best) epoch
  std::optional<DifficultyAssignment> assignment;  // last round's, curriculum only
};

namespace detail {

inline std::vector<int> predictions(const std::vector<Sample>& samples, const Encoder& encoder,
                                    const LinearClassifier& clf, int threads) {
  std::vector<int> preds(samples.size());
  parallel_for(samples.size(), threads, [&](std::size_t i) { preds[i] = predict(samples[i], encoder, clf); });
  return preds;
}

inline MetricsReport evaluate_split(const std::vector<Sample>& samples, const Encoder& encoder,
                                    const LinearClassifier& clf, int num_classes, int threads) {
  std::vector<int> golds(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) golds[i] = samples[i].label_id;
  return evaluate(golds, predictions(samples, encoder, clf, threads), num_classes);
}

inline double split_accuracy(const std::vector<Sample>& samples, const Encoder& encoder,
                             const LinearClassifier& clf, int num_classes, int threads) {
  if (samples.empty()) return 0.0;
  std::vector<int> golds(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) golds[i] = samples[i].label_id;
  return accuracy(confusion(golds, predictions(samples, encoder, clf, threads), num_classes));
}

inline Encoder make_encoder(const RunConfig& cfg, const LoadedData& data) {
  if (!cfg.embeddings_path.empty()) {
    int dim = 0;
    auto vectors = load_external_embeddings(cfg.embeddings_path, &dim);
    for (const auto* split : {&data.train, &data.valid, &data.test}) {
      for (const auto& s : *split) {
        if (!vectors.count(s.id))
          throw io_error(cfg.embeddings_path + ": no embedding for sample id " + std::to_string(s.id));
      }
    }
    return Encoder::from_external(std::move(vectors), dim);
  }
  return Encoder::from_table(data.token_vocab.size(), cfg.dim, derive_seed(cfg.seed, "table-init"));
}

inline void check_id_disjointness(const LoadedData& data) {
  std::unordered_set<int> seen;
  for (const auto* split : {&data.train, &data.valid, &data.test}) {
    for (const auto& s : *split) {
      if (!seen.insert(s.id).second)
        throw io_error("duplicate sample id across splits: " + std::to_string(s.id));
    }
  }
}

}  // namespace detail

/// Plain training on the full training set every epoch; the reported test
/// metrics come from the epoch with the best validation accuracy.
inline RunResult run_baseline(const RunConfig& cfg, const LoadedData& data) {
  detail::check_id_disjointness(data);
  const int C = data.label_vocab.size();
  Encoder encoder = detail::make_encoder(cfg, data);
  LinearClassifier clf(C, encoder.dim);
  TrainConfig tcfg{cfg.learning_rate, cfg.batch_size, cfg.epochs, cfg.seed, cfg.l2};

  std::vector<const Sample*> train_ptrs;
  train_ptrs.reserve(data.train.size());
  for (const auto& s : data.train) train_ptrs.push_back(&s);

  RunResult result;
  result.encoder = encoder;
  result.classifier = clf;
  result.best_epoch = -1;

  for (int e = 0; e < cfg.epochs; ++e) {
    const double loss = train_epoch(train_ptrs, encoder, clf, tcfg, derive_seed(cfg.seed, "epoch", static_cast<std::uint64_t>(e)));
    const double acc = detail::split_accuracy(data.valid, encoder, clf, C, cfg.threads);
    const bool improved = data.valid.empty() || acc > result.best_valid_accuracy || result.best_epoch < 0;
    if (improved) {
      result.best_valid_accuracy = acc;
      result.best_epoch = e;
      result.encoder = encoder;
      result.classifier = clf;
    }
    result.epoch_logs.push_back({e, e, loss, static_cast<long long>(train_ptrs.size()), acc,
                                 detail::utc_timestamp()});
  }

  result.test_metrics =
      detail::evaluate_split(data.test, result.encoder, result.classifier, C, cfg.threads);
  return result;
}

/// The dynamic curriculum loop: encode the training set with the current
/// model, define per-category difficulty levels, schedule per-level counts
/// (attention weights + freeze rule), train on the seeded selection, and
/// re-define difficulty every reassign_period epochs so the definition tracks
/// the model's current capability.
inline RunResult run_curriculum(const RunConfig& cfg, const LoadedData& data) {
  detail::check_id_disjointness(data);
  const int C = data.label_vocab.size();
  Encoder encoder = detail::make_encoder(cfg, data);
  LinearClassifier clf(C, encoder.dim);
  TrainConfig tcfg{cfg.learning_rate, cfg.batch_size, cfg.epochs, cfg.seed, cfg.l2};
  SchedulerConfig scfg{cfg.k_levels, cfg.lambda, cfg.omega_floor};
  SchedulerState state;

  std::unordered_map<int, const Sample*> train_by_id;
  std::unordered_set<int> eval_ids;
  for (const auto& s : data.train) train_by_id.emplace(s.id, &s);
  for (const auto& s : data.valid) eval_ids.insert(s.id);
  for (const auto& s : data.test) eval_ids.insert(s.id);

  RunResult result;
  result.encoder = encoder;
  result.classifier = clf;
  result.best_epoch = -1;

  DifficultyAssignment assignment;
  std::vector<long long> avail;

  for (int e = 0; e < cfg.epochs; ++e) {
    const int round = e / cfg.reassign_period;
    if (e % cfg.reassign_period == 0) {
      // (Re)define difficulty with the model as it stands right now; at
      // e == 0 that is the initial seeded encoder.
      const auto embeddings = encoder.encode_all(data.train, cfg.threads);
      assignment = assign_difficulty(embeddings, data.train, cfg.theta, cfg.k_levels, cfg.threads, round);
      avail = assignment.level_counts();
    }

    const auto omegas = weights(e, scfg);
    const auto proposed = target_counts(avail, omegas);
    bool frozen = false;
    const auto final_targets = apply_freeze_rule(state, avail, proposed, &frozen);
    const auto selected_ids = select_samples(assignment, data.train, final_targets, cfg.seed, round);

    std::vector<const Sample*> selection;
    selection.reserve(selected_ids.size());
    for (int id : selected_ids) {
      auto it = train_by_id.find(id);
      if (it == train_by_id.end() || eval_ids.count(id))
        throw io_error("selection leaked outside the training set: sample id " + std::to_string(id));
      selection.push_back(it->second);
    }

    const double loss =
        train_epoch(selection, encoder, clf, tcfg, derive_seed(cfg.seed, "epoch", static_cast<std::uint64_t>(e)));
    state.prev_used_counts = final_targets;
    state.has_prev = true;
    state.epoch = e + 1;

    const double acc = detail::split_accuracy(data.valid, encoder, clf, C, cfg.threads);
    const bool improved = data.valid.empty() || acc > result.best_valid_accuracy || result.best_epoch < 0;
    if (improved) {
      result.best_valid_accuracy = acc;
      result.best_epoch = e;
      result.encoder = encoder;
      result.classifier = clf;
    }

    result.schedule_logs.push_back({round, e, omegas, avail, final_targets, frozen,
                                    static_cast<long long>(selected_ids.size())});
    result.epoch_logs.push_back({e, round, loss, static_cast<long long>(selected_ids.size()), acc,
                                 detail::utc_timestamp()});
  }

  if (cfg.epochs > 0) result.assignment = std::move(assignment);
  result.test_metrics =
      detail::evaluate_split(data.test, result.encoder, result.classifier, C, cfg.threads);
  return result;
}

inline RunResult run(const RunConfig& cfg, const LoadedData& data) {
  return cfg.mode == RunMode::baseline ? run_baseline(cfg, data) : run_curriculum(cfg, data);
}

// ---------------------------------------------------------------------------
// Per-level error analysis

struct LevelAnalysis {
  int k = 0;
  std::map<int, LevelError> per_level;
  DifficultyAssignment assignment;
};

/// Error-rate-by-level analysis: for each K in the sweep, define difficulty on the
/// evaluation split from the checkpoint's embeddings and report the error
/// rate per level under the checkpoint's predictions.
inline std::vector<LevelAnalysis> analyze_levels(const Checkpoint& ckpt,
                                                 const std::vector<Sample>& eval_samples,
                                                 const std::vector<int>& k_sweep, double theta,
                                                 int threads) {
  if (eval_samples.empty()) throw usage_error("analyze_levels: empty evaluation split");
  const auto embeddings = ckpt.encoder.encode_all(eval_samples, threads);
  const auto preds = detail::predictions(eval_samples, ckpt.encoder, ckpt.classifier, threads);
  std::vector<int> golds(eval_samples.size());
  for (std::size_t i = 0; i < eval_samples.size(); ++i) golds[i] = eval_samples[i].label_id;

  std::vector<LevelAnalysis> out;
  for (int k : k_sweep) {
    LevelAnalysis a;
    a.k = k;
    a.assignment = assign_difficulty(embeddings, eval_samples, theta, k, threads, 0);
    std::vector<int> levels(eval_samples.size());
    for (std::size_t i = 0; i < eval_samples.size(); ++i)
      levels[i] = a.assignment.at(eval_samples[i].id).level;
    a.per_level = per_level_error(golds, preds, levels);
    out.push_back(std::move(a));
  }
  return out;
}

/// Writes the assignment dump format: one {"id", "label", "density", "level",
/// "round"} line per sample, ordered by id.
inline void dump_assignment(const DifficultyAssignment& assignment,
                            const std::vector<Sample>& samples, const LabelVocab& labels,
                            std::ostream& out) {
  std::vector<const Sample*> ordered;
  ordered.reserve(samples.size());
  for (const auto& s : samples) ordered.push_back(&s);
  std::sort(ordered.begin(), ordered.end(), [](const Sample* a, const Sample* b) { return a->id < b->id; });
  for (const Sample* s : ordered) {
    const auto& e = assignment.at(s->id);
    nlohmann::ordered_json j;
    j["id"] = s->id;
    j["label"] = labels.id_to_label[static_cast<std::size_t>(s->label_id)];
    j["density"] = e.density;
    j["level"] = e.level;
    j["round"] = assignment.round;
    out << j.dump() << '\n';
  }
}

}  // namespace dcl
