#pragma once

#include <fstream>
#include <string>

#include <json.hpp>

#include "dcl/data.hpp"
#include "dcl/encoder.hpp"
#include "dcl/errors.hpp"
#include "dcl/model.hpp"

namespace dcl {

/// A self-contained trained model: encoder parameters (or a marker that
/// embedding vectors come from an external file), classifier parameters and both
/// vocabularies, so a checkpoint alone can process raw JSONL datasets.
/// Serialized as versioned JSON; doubles round-trip bit-exactly.
struct Checkpoint {
  static constexpr int kVersion = 1;

  std::string config_hash;
  std::string tokenizer = "word";
  Encoder encoder;
  LinearClassifier classifier;
  TokenVocab token_vocab;
  LabelVocab label_vocab;

  void save(const std::string& path) const {
    nlohmann::ordered_json j;
    j["format"] = "dcl-checkpoint";
    j["version"] = kVersion;
    j["config_hash"] = config_hash;
    j["tokenizer"] = tokenizer;
    j["dim"] = encoder.dim;
    if (encoder.trainable()) {
      j["encoder_type"] = "table";
      j["table_rows"] = encoder.table.rows;
      j["table_data"] = encoder.table.data;
    } else {
      j["encoder_type"] = "external";
    }
    j["num_classes"] = classifier.num_classes;
    j["weights"] = classifier.weights;
    j["bias"] = classifier.bias;
    j["min_count"] = token_vocab.min_count;
    auto tokens = nlohmann::ordered_json::array();
    for (std::size_t i = 1; i < token_vocab.id_to_token.size(); ++i)
      tokens.push_back(token_vocab.id_to_token[i]);
    j["tokens"] = std::move(tokens);
    j["labels"] = label_vocab.id_to_label;

    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot write checkpoint: " + path);
    out << j.dump() << '\n';
  }

  static Checkpoint load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open checkpoint: " + path);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw io_error(path + ": " + e.what());
    }
    if (!j.is_object() || j.value("format", "") != "dcl-checkpoint")
      throw io_error(path + ": not a checkpoint file");
    if (j.value("version", 0) != kVersion)
      throw io_error(path + ": unsupported checkpoint version " + std::to_string(j.value("version", 0)));

    Checkpoint ckpt;
    ckpt.config_hash = j.value("config_hash", "");
    ckpt.tokenizer = j.value("tokenizer", "word");
    const int dim = j.at("dim").get<int>();
    const std::string encoder_type = j.at("encoder_type").get<std::string>();
    if (encoder_type == "table") {
      const int rows = j.at("table_rows").get<int>();
      ckpt.encoder.dim = dim;
      ckpt.encoder.has_table = true;
      ckpt.encoder.table.dim = dim;
      ckpt.encoder.table.rows = rows;
      ckpt.encoder.table.data = j.at("table_data").get<std::vector<double>>();
      if (ckpt.encoder.table.data.size() != static_cast<std::size_t>(rows) * static_cast<std::size_t>(dim))
        throw io_error(path + ": table size does not match rows*dim");
    } else if (encoder_type == "external") {
      ckpt.encoder.dim = dim;
      ckpt.encoder.has_table = false;
    } else {
      throw io_error(path + ": unknown encoder_type '" + encoder_type + "'");
    }

    ckpt.classifier.num_classes = j.at("num_classes").get<int>();
    ckpt.classifier.dim = dim;
    ckpt.classifier.weights = j.at("weights").get<std::vector<double>>();
    ckpt.classifier.bias = j.at("bias").get<std::vector<double>>();
    if (ckpt.classifier.weights.size() !=
            static_cast<std::size_t>(ckpt.classifier.num_classes) * static_cast<std::size_t>(dim) ||
        ckpt.classifier.bias.size() != static_cast<std::size_t>(ckpt.classifier.num_classes))
      throw io_error(path + ": classifier size does not match num_classes*dim");

    ckpt.token_vocab.min_count = j.value("min_count", 1);
    ckpt.token_vocab.id_to_token.push_back("<unk>");
    for (const auto& t : j.at("tokens")) {
      const std::string tok = t.get<std::string>();
      ckpt.token_vocab.token_to_id.emplace(tok, static_cast<int>(ckpt.token_vocab.id_to_token.size()));
      ckpt.token_vocab.id_to_token.push_back(tok);
    }
    for (const auto& l : j.at("labels")) {
      const std::string label = l.get<std::string>();
      ckpt.label_vocab.label_to_id.emplace(label, static_cast<int>(ckpt.label_vocab.id_to_label.size()));
      ckpt.label_vocab.id_to_label.push_back(label);
    }
    if (ckpt.encoder.trainable() &&
        ckpt.encoder.table.rows != ckpt.token_vocab.size() + 1)
      throw io_error(path + ": vocab mismatch: table rows " + std::to_string(ckpt.encoder.table.rows) +
                     " vs tokens " + std::to_string(ckpt.token_vocab.size()));
    return ckpt;
  }
};

}  // namespace dcl
