#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "dcl/data.hpp"
#include "dcl/errors.hpp"
#include "dcl/parallel.hpp"
#include "dcl/rng.hpp"

namespace dcl {

/// A sample's encoded feature vector plus bookkeeping. `degenerate` marks
/// vectors produced from an empty token list (all-zero by definition).
struct EmbeddingVector {
  int sample_id = 0;
  std::vector<double> values;
  bool degenerate = false;

  int dim() const { return static_cast<int>(values.size()); }
};

/// Trainable embedding matrix of shape (vocab_size + 1) x dim, row-major.
/// Row 0 is the unknown token and participates like any other row.
struct EmbeddingTable {
  int dim = 0;
  int rows = 0;
  std::vector<double> data;  // rows * dim

  EmbeddingTable() = default;
  EmbeddingTable(int vocab_size, int dim_) : dim(dim_), rows(vocab_size + 1), data(static_cast<std::size_t>(rows) * dim_, 0.0) {}

  double* row(int r) { return data.data() + static_cast<std::size_t>(r) * dim; }
  const double* row(int r) const { return data.data() + static_cast<std::size_t>(r) * dim; }

  /// Seeded uniform init in [-0.5/dim, +0.5/dim).
  void init(std::uint64_t seed) {
    SplitMix64 rng(seed);
    const double scale = 1.0 / dim;
    for (auto& v : data) v = (rng.next_double() - 0.5) * scale;
  }
};

/// Produces sample embedding vectors either from the trainable table (mean pooling over
/// token embeddings) or from a fixed externally supplied embedding file.
struct Encoder {
  int dim = 0;
  bool has_table = false;
  EmbeddingTable table;
  std::unordered_map<int, std::vector<double>> external;  // sample id -> vector

  bool trainable() const { return has_table; }

  static Encoder from_table(int vocab_size, int dim, std::uint64_t seed) {
    Encoder e;
    e.dim = dim;
    e.has_table = true;
    e.table = EmbeddingTable(vocab_size, dim);
    e.table.init(seed);
    return e;
  }

  static Encoder from_external(std::unordered_map<int, std::vector<double>> vectors, int dim) {
    Encoder e;
    e.dim = dim;
    e.has_table = false;
    e.external = std::move(vectors);
    return e;
  }

  /// Mean of the embedding rows of the sample's tokens. An empty token list
  /// yields the zero vector, flagged degenerate.
  EmbeddingVector encode(const Sample& sample) const {
    EmbeddingVector out;
    out.sample_id = sample.id;
    out.values.assign(static_cast<std::size_t>(dim), 0.0);
    if (!has_table) {
      auto it = external.find(sample.id);
      if (it == external.end())
        throw io_error("no external embedding for sample id " + std::to_string(sample.id));
      out.values = it->second;
      return out;
    }
    if (sample.tokens.empty()) {
      out.degenerate = true;
      return out;
    }
    for (int tok : sample.tokens) {
      const double* r = table.row(tok);
      for (int j = 0; j < dim; ++j) out.values[static_cast<std::size_t>(j)] += r[j];
    }
    const double inv = 1.0 / static_cast<double>(sample.tokens.size());
    for (auto& v : out.values) v *= inv;
    return out;
  }

  /// Pointwise encode, order preserved. Safe to fan out: each slot is written
  /// exactly once and the table is read-only here.
  std::vector<EmbeddingVector> encode_all(const std::vector<Sample>& samples, int threads = 1) const {
    std::vector<EmbeddingVector> out(samples.size());
    parallel_for(samples.size(), threads, [&](std::size_t i) { out[i] = encode(samples[i]); });
    return out;
  }
};

/// Loads the embedding exchange format: JSONL lines {"id": int, "vector":
/// [reals]}. Duplicate ids, ragged dimensions and non-finite values are fatal
/// with their line number. Returns the map and reports the dimension.
inline std::unordered_map<int, std::vector<double>> load_external_embeddings(const std::string& path,
                                                                             int* dim_out = nullptr) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open embeddings file: " + path);

  std::unordered_map<int, std::vector<double>> out;
  std::string line;
  std::size_t lineno = 0;
  int dim = -1;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::is_blank(line)) continue;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw io_error(path + ": line " + std::to_string(lineno) + ": " + e.what());
    }
    if (!obj.is_object() || !obj.contains("id") || !obj.contains("vector") ||
        !obj["id"].is_number_integer() || !obj["vector"].is_array()) {
      throw io_error(path + ": line " + std::to_string(lineno) +
                     ": expected {\"id\": int, \"vector\": [reals]}");
    }
    const int id = obj["id"].get<int>();
    std::vector<double> vec;
    vec.reserve(obj["vector"].size());
    for (const auto& v : obj["vector"]) {
      if (!v.is_number()) throw io_error(path + ": line " + std::to_string(lineno) + ": vector entry is not a number");
      const double d = v.get<double>();
      if (!std::isfinite(d)) throw io_error(path + ": line " + std::to_string(lineno) + ": non-finite vector entry");
      vec.push_back(d);
    }
    if (dim < 0) dim = static_cast<int>(vec.size());
    if (static_cast<int>(vec.size()) != dim) {
      throw io_error(path + ": line " + std::to_string(lineno) + ": vector dimension " +
                     std::to_string(vec.size()) + " differs from " + std::to_string(dim));
    }
    if (!out.emplace(id, std::move(vec)).second) {
      throw io_error(path + ": line " + std::to_string(lineno) + ": duplicate sample id " + std::to_string(id));
    }
  }
  if (dim_out) *dim_out = dim < 0 ? 0 : dim;
  return out;
}

/// Writes embeddings in the exchange format. nlohmann serializes doubles as
/// shortest round-trip decimals, so export -> load is bit-exact.
inline void export_embeddings(const std::vector<EmbeddingVector>& vectors, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot write embeddings file: " + path);
  for (const auto& v : vectors) {
    nlohmann::ordered_json obj;
    obj["id"] = v.sample_id;
    obj["vector"] = v.values;
    out << obj.dump() << '\n';
  }
}

}  // namespace dcl
