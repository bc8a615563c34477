#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "dcl/difficulty.hpp"
#include "dcl/errors.hpp"

namespace dcl {

/// Rows are gold labels, columns are predictions.
struct ConfusionMatrix {
  int num_classes = 0;
  std::vector<long long> counts;  // num_classes * num_classes

  explicit ConfusionMatrix(int num_classes_ = 0)
      : num_classes(num_classes_),
        counts(static_cast<std::size_t>(num_classes_) * static_cast<std::size_t>(num_classes_), 0) {}

  long long& at(int gold, int pred) {
    return counts[static_cast<std::size_t>(gold) * num_classes + static_cast<std::size_t>(pred)];
  }
  long long at(int gold, int pred) const {
    return counts[static_cast<std::size_t>(gold) * num_classes + static_cast<std::size_t>(pred)];
  }
  long long total() const {
    long long t = 0;
    for (long long c : counts) t += c;
    return t;
  }
};

inline ConfusionMatrix confusion(const std::vector<int>& golds, const std::vector<int>& preds,
                                 int num_classes) {
  if (golds.size() != preds.size()) throw usage_error("confusion: gold/pred length mismatch");
  ConfusionMatrix m(num_classes);
  for (std::size_t i = 0; i < golds.size(); ++i) {
    if (golds[i] < 0 || golds[i] >= num_classes || preds[i] < 0 || preds[i] >= num_classes)
      throw usage_error("confusion: label id out of range at position " + std::to_string(i));
    ++m.at(golds[i], preds[i]);
  }
  return m;
}

inline double accuracy(const ConfusionMatrix& m) {
  const long long total = m.total();
  if (total == 0) return 0.0;
  long long correct = 0;
  for (int c = 0; c < m.num_classes; ++c) correct += m.at(c, c);
  return static_cast<double>(correct) / static_cast<double>(total);
}

struct ClassPRF {
  int label_id = 0;
  long long support = 0;  // gold count
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Per-class precision/recall/F1 with the zero-denominator convention
/// (metric = 0 when undefined). The macro average is the unweighted mean over
/// classes present in gold; classes absent from gold are excluded.
struct PRFReport {
  std::vector<ClassPRF> per_class;  // every class id, including absent ones
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
};

inline PRFReport macro_prf(const ConfusionMatrix& m) {
  PRFReport report;
  report.per_class.resize(static_cast<std::size_t>(m.num_classes));
  double sum_p = 0.0, sum_r = 0.0, sum_f = 0.0;
  int present = 0;
  for (int c = 0; c < m.num_classes; ++c) {
    long long tp = m.at(c, c), gold = 0, pred = 0;
    for (int j = 0; j < m.num_classes; ++j) {
      gold += m.at(c, j);
      pred += m.at(j, c);
    }
    auto& entry = report.per_class[static_cast<std::size_t>(c)];
    entry.label_id = c;
    entry.support = gold;
    entry.precision = pred > 0 ? static_cast<double>(tp) / static_cast<double>(pred) : 0.0;
    entry.recall = gold > 0 ? static_cast<double>(tp) / static_cast<double>(gold) : 0.0;
    entry.f1 = (entry.precision + entry.recall) > 0.0
                   ? 2.0 * entry.precision * entry.recall / (entry.precision + entry.recall)
                   : 0.0;
    if (gold > 0) {
      sum_p += entry.precision;
      sum_r += entry.recall;
      sum_f += entry.f1;
      ++present;
    }
  }
  if (present > 0) {
    report.macro_precision = sum_p / present;
    report.macro_recall = sum_r / present;
    report.macro_f1 = sum_f / present;
  }
  return report;
}

struct LevelError {
  long long count = 0;
  long long errors = 0;
  double error_rate = 0.0;
};

/// Error rate per difficulty level: misclassified / total within the level.
/// Levels with no samples are omitted.
inline std::map<int, LevelError> per_level_error(const std::vector<int>& golds,
                                                 const std::vector<int>& preds,
                                                 const std::vector<int>& levels) {
  if (golds.size() != preds.size() || golds.size() != levels.size())
    throw usage_error("per_level_error: input length mismatch");
  std::map<int, LevelError> out;
  for (std::size_t i = 0; i < golds.size(); ++i) {
    auto& e = out[levels[i]];
    ++e.count;
    if (golds[i] != preds[i]) ++e.errors;
  }
  for (auto& [level, e] : out) {
    e.error_rate = static_cast<double>(e.errors) / static_cast<double>(e.count);
  }
  return out;
}

/// Everything one evaluation produces. Values live in [0, 1]; the 2-decimal
/// percent rendering is presentation only.
struct MetricsReport {
  double accuracy = 0.0;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
  std::vector<ClassPRF> per_class;
  std::map<int, LevelError> per_level;  // optional; empty when not computed

  nlohmann::ordered_json to_json(const std::vector<std::string>& label_names = {}) const {
    nlohmann::ordered_json j;
    j["accuracy"] = accuracy;
    j["macro_precision"] = macro_precision;
    j["macro_recall"] = macro_recall;
    j["macro_f1"] = macro_f1;
    auto classes = nlohmann::ordered_json::array();
    for (const auto& c : per_class) {
      nlohmann::ordered_json e;
      e["label_id"] = c.label_id;
      if (static_cast<std::size_t>(c.label_id) < label_names.size())
        e["label"] = label_names[static_cast<std::size_t>(c.label_id)];
      e["support"] = c.support;
      e["precision"] = c.precision;
      e["recall"] = c.recall;
      e["f1"] = c.f1;
      classes.push_back(std::move(e));
    }
    j["per_class"] = std::move(classes);
    if (!per_level.empty()) {
      auto levels = nlohmann::ordered_json::array();
      for (const auto& [level, e] : per_level) {
        nlohmann::ordered_json le;
        le["level"] = level;
        le["count"] = e.count;
        le["errors"] = e.errors;
        le["error_rate"] = e.error_rate;
        levels.push_back(std::move(le));
      }
      j["per_level"] = std::move(levels);
    }
    return j;
  }
};

inline MetricsReport evaluate(const std::vector<int>& golds, const std::vector<int>& preds,
                              int num_classes) {
  const auto m = confusion(golds, preds, num_classes);
  const auto prf = macro_prf(m);
  MetricsReport report;
  report.accuracy = accuracy(m);
  report.macro_precision = prf.macro_precision;
  report.macro_recall = prf.macro_recall;
  report.macro_f1 = prf.macro_f1;
  report.per_class = prf.per_class;
  return report;
}

/// Fraction in [0, 1] -> percentage rounded to 2 decimals.
inline double as_percent(double v) { return std::round(v * 10000.0) / 100.0; }

/// One-line JSON summary with percentages at 2 decimals, e.g. for stdout.
inline std::string metrics_summary_line(const MetricsReport& r) {
  nlohmann::ordered_json j;
  j["accuracy"] = as_percent(r.accuracy);
  j["precision"] = as_percent(r.macro_precision);
  j["recall"] = as_percent(r.macro_recall);
  j["f1"] = as_percent(r.macro_f1);
  return j.dump();
}

}  // namespace dcl
