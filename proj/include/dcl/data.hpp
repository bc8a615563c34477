#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "dcl/errors.hpp"
#include "dcl/rng.hpp"
#include "dcl/text.hpp"

namespace dcl {

/// One labeled utterance. Ids are unique within a dataset (train, valid and
/// test share one id space) but need not be dense.
struct Sample {
  int id = 0;
  std::string text;
  std::vector<int> tokens;  // token ids; empty only when text has no tokens
  int label_id = 0;
};

struct RawRecord {
  std::string text;
  std::string label;
};

/// Frequency-thresholded token map. Id 0 is reserved for unknown tokens; real
/// tokens occupy 1..size().
struct TokenVocab {
  std::unordered_map<std::string, int> token_to_id;
  std::vector<std::string> id_to_token;  // index 0 is the unknown placeholder
  int min_count = 1;

  int size() const { return static_cast<int>(id_to_token.size()) - 1; }

  int id_of(const std::string& token) const {
    auto it = token_to_id.find(token);
    return it == token_to_id.end() ? 0 : it->second;
  }
};

/// Label string -> category index, lexicographically ordered so the mapping
/// is reproducible regardless of corpus order.
struct LabelVocab {
  std::map<std::string, int> label_to_id;
  std::vector<std::string> id_to_label;

  int size() const { return static_cast<int>(id_to_label.size()); }

  int id_of(const std::string& label) const {
    auto it = label_to_id.find(label);
    if (it == label_to_id.end()) throw io_error("label not in training vocabulary: " + label);
    return it->second;
  }
};

struct DatasetSplit {
  std::vector<Sample> train;
  std::vector<Sample> valid;
  std::vector<Sample> test;
};

// ---------------------------------------------------------------------------
// Ingestion

namespace detail {

// One CSV record, RFC 4180 quoting. Returns false at end of input.
inline bool read_csv_record(std::istream& in, std::vector<std::string>& fields) {
  fields.clear();
  std::string field;
  bool in_quotes = false;
  bool saw_any = false;
  int c;
  while ((c = in.get()) != EOF) {
    saw_any = true;
    const char ch = static_cast<char>(c);
    if (in_quotes) {
      if (ch == '"') {
        if (in.peek() == '"') {
          field.push_back('"');
          in.get();
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(ch);
      }
    } else if (ch == '"') {
      in_quotes = true;
    } else if (ch == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (ch == '\n') {
      break;
    } else if (ch == '\r') {
      if (in.peek() == '\n') in.get();
      break;
    } else {
      field.push_back(ch);
    }
  }
  if (!saw_any) return false;
  fields.push_back(std::move(field));
  return true;
}

inline std::string trim(std::string_view s) {
  std::size_t lo = 0, hi = s.size();
  while (lo < hi && (s[lo] == ' ' || s[lo] == '\t' || s[lo] == '\r' || s[lo] == '\n')) ++lo;
  while (hi > lo && (s[hi - 1] == ' ' || s[hi - 1] == '\t' || s[hi - 1] == '\r' || s[hi - 1] == '\n')) --hi;
  return std::string(s.substr(lo, hi - lo));
}

inline bool is_blank(const std::string& line) {
  for (char c : line) {
    if (c != ' ' && c != '\t' && c != '\r' && c != '\n') return false;
  }
  return true;
}

}  // namespace detail

/// Reads a CSV file with a header row and returns (text, label) records from
/// the two named columns, in file order. Fields keep interior whitespace;
/// only surrounding whitespace is trimmed.
inline std::vector<RawRecord> ingest_csv(const std::string& path, const std::string& text_column,
                                         const std::string& label_column) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open CSV file: " + path);

  std::vector<std::string> fields;
  if (!detail::read_csv_record(in, fields)) throw io_error(path + ": empty file, expected a header row");

  int text_idx = -1, label_idx = -1;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    const std::string name = detail::trim(fields[i]);
    if (name == text_column) text_idx = static_cast<int>(i);
    if (name == label_column) label_idx = static_cast<int>(i);
  }
  if (text_idx < 0) throw io_error(path + ": header has no column named '" + text_column + "'");
  if (label_idx < 0) throw io_error(path + ": header has no column named '" + label_column + "'");
  const std::size_t arity = fields.size();

  std::vector<RawRecord> records;
  std::size_t row = 1;  // header was row 1
  while (detail::read_csv_record(in, fields)) {
    ++row;
    if (fields.size() == 1 && fields[0].empty()) continue;  // trailing blank line
    if (fields.size() != arity) {
      throw io_error(path + ": row " + std::to_string(row) + ": expected " + std::to_string(arity) +
                     " fields, got " + std::to_string(fields.size()));
    }
    records.push_back({detail::trim(fields[static_cast<std::size_t>(text_idx)]),
                       detail::trim(fields[static_cast<std::size_t>(label_idx)])});
  }
  return records;
}

/// Reads the canonical JSONL sample format: one {"text": ..., "label": ...}
/// object per line. Blank lines are ignored; anything else malformed is fatal
/// with its line number.
inline std::vector<RawRecord> ingest_jsonl(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open JSONL file: " + path);

  std::vector<RawRecord> records;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::is_blank(line)) continue;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw io_error(path + ": line " + std::to_string(lineno) + ": " + e.what());
    }
    if (!obj.is_object() || !obj.contains("text") || !obj.contains("label") ||
        !obj["text"].is_string() || !obj["label"].is_string()) {
      throw io_error(path + ": line " + std::to_string(lineno) +
                     ": expected an object with string fields \"text\" and \"label\"");
    }
    records.push_back({obj["text"].get<std::string>(), obj["label"].get<std::string>()});
  }
  return records;
}

/// Writes records in the canonical JSONL format ({"text", "label"}, UTF-8).
inline void emit_jsonl(const std::vector<RawRecord>& records, std::ostream& out) {
  for (const auto& r : records) {
    nlohmann::ordered_json obj;
    obj["text"] = r.text;
    obj["label"] = r.label;
    out << obj.dump() << '\n';
  }
}

inline void emit_jsonl(const std::vector<RawRecord>& records, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot write JSONL file: " + path);
  emit_jsonl(records, out);
}

/// Extracts (text, label) records from a CLINC-style JSON file: a top-level
/// object mapping split names to arrays of [text, label] pairs. `split` picks
/// one of the in-scope keys (train/val/test) or "all" for their concatenation;
/// out-of-scope keys (oos_*) are ignored.
inline std::vector<RawRecord> ingest_clinc_json(const std::string& path, const std::string& split) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open JSON file: " + path);
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw io_error(path + ": " + e.what());
  }
  if (!root.is_object()) throw io_error(path + ": expected a top-level JSON object keyed by split");

  std::vector<std::string> keys;
  if (split == "all") {
    keys = {"train", "val", "test"};
  } else if (split == "train" || split == "val" || split == "test") {
    keys = {split};
  } else {
    throw usage_error("unknown split '" + split + "' (expected train|val|test|all)");
  }

  std::vector<RawRecord> records;
  for (const auto& key : keys) {
    if (!root.contains(key)) throw io_error(path + ": missing split key '" + key + "'");
    const auto& arr = root[key];
    if (!arr.is_array()) throw io_error(path + ": split '" + key + "' is not an array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const auto& pair = arr[i];
      if (!pair.is_array() || pair.size() != 2 || !pair[0].is_string() || !pair[1].is_string()) {
        throw io_error(path + ": split '" + key + "' entry " + std::to_string(i) +
                       ": expected [text, label]");
      }
      records.push_back({pair[0].get<std::string>(), pair[1].get<std::string>()});
    }
  }
  return records;
}

// ---------------------------------------------------------------------------
// Vocabularies

/// Builds the token vocabulary from token strings of the training corpus.
/// Tokens with frequency >= min_count get ids 1..V ordered by descending
/// frequency, ties broken lexicographically; everything else maps to 0.
inline TokenVocab build_vocab(const std::vector<std::vector<std::string>>& corpus_tokens, int min_count) {
  if (min_count < 1) throw usage_error("min_count must be >= 1");
  std::unordered_map<std::string, std::int64_t> freq;
  for (const auto& toks : corpus_tokens) {
    for (const auto& t : toks) ++freq[t];
  }
  std::vector<std::pair<std::string, std::int64_t>> kept;
  kept.reserve(freq.size());
  for (auto& kv : freq) {
    if (kv.second >= min_count) kept.emplace_back(kv.first, kv.second);
  }
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  TokenVocab vocab;
  vocab.min_count = min_count;
  vocab.id_to_token.push_back("<unk>");
  vocab.token_to_id.reserve(kept.size());
  for (const auto& [tok, _] : kept) {
    vocab.token_to_id.emplace(tok, static_cast<int>(vocab.id_to_token.size()));
    vocab.id_to_token.push_back(tok);
  }
  return vocab;
}

inline LabelVocab build_label_vocab(const std::vector<RawRecord>& records) {
  LabelVocab vocab;
  for (const auto& r : records) vocab.label_to_id.emplace(r.label, 0);
  for (auto& kv : vocab.label_to_id) {
    kv.second = static_cast<int>(vocab.id_to_label.size());
    vocab.id_to_label.push_back(kv.first);
  }
  return vocab;
}

// ---------------------------------------------------------------------------
// Splitting

struct SplitResult {
  std::vector<Sample> train;
  std::vector<Sample> valid;
  std::vector<std::string> warnings;
};

namespace detail {

// Largest-remainder allocation of `total` validation slots across labels,
// proportional to label frequency. Labels with fewer than 2 samples get no
// slots (they go entirely to train); no label may lose all of its samples.
inline std::vector<std::size_t> stratified_quotas(const std::vector<std::size_t>& label_counts,
                                                  std::size_t total) {
  const std::size_t num_labels = label_counts.size();
  std::size_t eligible = 0;
  for (std::size_t c : label_counts) {
    if (c >= 2) eligible += c;
  }
  std::vector<std::size_t> quota(num_labels, 0);
  if (eligible == 0 || total == 0) return quota;

  std::vector<std::pair<double, std::size_t>> remainders;  // (fraction, label)
  std::size_t assigned = 0;
  for (std::size_t l = 0; l < num_labels; ++l) {
    if (label_counts[l] < 2) continue;
    const double share = static_cast<double>(total) * static_cast<double>(label_counts[l]) /
                         static_cast<double>(eligible);
    quota[l] = static_cast<std::size_t>(share);
    quota[l] = std::min(quota[l], label_counts[l] - 1);
    assigned += quota[l];
    remainders.emplace_back(share - static_cast<double>(quota[l]), l);
  }
  // Hand out the remaining slots by largest fractional part, label index as
  // the deterministic tie-break. Repeat sweeps until filled or saturated.
  std::sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  while (assigned < total) {
    bool grew = false;
    for (const auto& [frac, l] : remainders) {
      if (assigned >= total) break;
      if (quota[l] < label_counts[l] - 1) {
        ++quota[l];
        ++assigned;
        grew = true;
      }
    }
    if (!grew) break;
  }
  return quota;
}

}  // namespace detail

/// Stratified validation split: exactly `valid_count` samples overall,
/// allocated across labels proportionally (largest remainder) and drawn
/// uniformly without replacement within each label. Deterministic for a fixed
/// seed. Labels with fewer than 2 samples stay in train and are reported as
/// warnings.
inline SplitResult split_by_count(const std::vector<Sample>& samples, std::size_t valid_count,
                                  std::uint64_t seed) {
  if (samples.empty()) throw usage_error("split: sample list is empty");
  if (valid_count >= samples.size())
    throw usage_error("split: validation count " + std::to_string(valid_count) +
                      " must be smaller than the sample count " + std::to_string(samples.size()));

  int max_label = 0;
  for (const auto& s : samples) max_label = std::max(max_label, s.label_id);
  const std::size_t num_labels = static_cast<std::size_t>(max_label) + 1;

  std::vector<std::vector<std::size_t>> by_label(num_labels);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    by_label[static_cast<std::size_t>(samples[i].label_id)].push_back(i);
  }
  std::vector<std::size_t> counts(num_labels);
  for (std::size_t l = 0; l < num_labels; ++l) counts[l] = by_label[l].size();

  SplitResult result;
  for (std::size_t l = 0; l < num_labels; ++l) {
    if (counts[l] == 1) {
      result.warnings.push_back("label id " + std::to_string(l) +
                                " has fewer than 2 samples; keeping all in train");
    }
  }

  const std::vector<std::size_t> quota = detail::stratified_quotas(counts, valid_count);

  std::vector<bool> to_valid(samples.size(), false);
  for (std::size_t l = 0; l < num_labels; ++l) {
    if (quota[l] == 0) continue;
    SplitMix64 rng(derive_seed(seed, "split", l));
    const auto chosen = sample_without_replacement(by_label[l].size(), quota[l], rng);
    for (std::size_t c : chosen) to_valid[by_label[l][c]] = true;
  }

  for (std::size_t i = 0; i < samples.size(); ++i) {
    (to_valid[i] ? result.valid : result.train).push_back(samples[i]);
  }
  return result;
}

/// Fraction-based wrapper: the validation size is round-half-up of
/// |samples| * valid_fraction.
inline SplitResult split(const std::vector<Sample>& samples, double valid_fraction, std::uint64_t seed) {
  if (!(valid_fraction > 0.0 && valid_fraction < 1.0))
    throw usage_error("split: valid_fraction must be in (0, 1)");
  const auto count = static_cast<std::size_t>(
      static_cast<double>(samples.size()) * valid_fraction + 0.5);
  return split_by_count(samples, count, seed);
}

}  // namespace dcl
