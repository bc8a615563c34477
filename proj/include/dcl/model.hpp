#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "dcl/encoder.hpp"
#include "dcl/errors.hpp"
#include "dcl/rng.hpp"

namespace dcl {

/// Softmax head over encoded sample vectors. Zero-initialized, so an untrained model
/// is the uniform predictor.
struct LinearClassifier {
  int num_classes = 0;
  int dim = 0;
  std::vector<double> weights;  // num_classes * dim, class-major
  std::vector<double> bias;     // num_classes

  LinearClassifier() = default;
  LinearClassifier(int num_classes_, int dim_)
      : num_classes(num_classes_),
        dim(dim_),
        weights(static_cast<std::size_t>(num_classes_) * dim_, 0.0),
        bias(static_cast<std::size_t>(num_classes_), 0.0) {}

  double* weight_row(int c) { return weights.data() + static_cast<std::size_t>(c) * dim; }
  const double* weight_row(int c) const { return weights.data() + static_cast<std::size_t>(c) * dim; }
};

struct TrainConfig {
  // Batch-mean gradients: the rate plays the role of (per-example rate x
  // batch size), so 20.0 at batch 256 corresponds to a per-example 0.08.
  double learning_rate = 20.0;
  int batch_size = 256;
  int epochs = 15;
  std::uint64_t seed = 1;
  double l2 = 1e-5;  // classifier weights only
};

/// Softmax probabilities with max-subtraction, so huge logits do not
/// overflow. Entries are positive and sum to 1 within 1e-9.
inline std::vector<double> forward(const std::vector<double>& vector, const LinearClassifier& clf) {
  if (static_cast<int>(vector.size()) != clf.dim)
    throw usage_error("forward: input dimension " + std::to_string(vector.size()) +
                      " does not match classifier dimension " + std::to_string(clf.dim));
  std::vector<double> logits(static_cast<std::size_t>(clf.num_classes));
  for (int c = 0; c < clf.num_classes; ++c) {
    const double* w = clf.weight_row(c);
    double z = clf.bias[static_cast<std::size_t>(c)];
    for (int j = 0; j < clf.dim; ++j) z += w[j] * vector[static_cast<std::size_t>(j)];
    logits[static_cast<std::size_t>(c)] = z;
  }
  double zmax = -std::numeric_limits<double>::infinity();
  for (double z : logits) zmax = std::max(zmax, z);
  double denom = 0.0;
  for (auto& z : logits) {
    z = std::exp(z - zmax);
    denom += z;
  }
  const double inv = 1.0 / denom;
  for (auto& z : logits) z *= inv;
  return logits;
}

/// Cross-entropy: -ln p[label], with p clamped at 1e-12.
inline double loss(const std::vector<double>& probabilities, int label_id) {
  const double p = std::max(probabilities[static_cast<std::size_t>(label_id)], 1e-12);
  return -std::log(p);
}

/// Argmax prediction; exact ties go to the lowest label id.
inline int predict(const Sample& sample, const Encoder& encoder, const LinearClassifier& clf) {
  const auto probs = forward(encoder.encode(sample).values, clf);
  int best = 0;
  for (int c = 1; c < clf.num_classes; ++c) {
    if (probs[static_cast<std::size_t>(c)] > probs[static_cast<std::size_t>(best)]) best = c;
  }
  return best;
}

/// One vanilla SGD step on a mini-batch: mean cross-entropy plus L2 on the
/// classifier weights (bias and embedding table stay unregularized). The mean
/// pooling distributes 1/|tokens| of the upstream gradient to each token row.
/// Returns the batch mean data loss. Deterministic: gradients are accumulated
/// in batch order.
inline double grad_step(const std::vector<const Sample*>& batch, Encoder& encoder,
                        LinearClassifier& clf, const TrainConfig& cfg) {
  if (batch.empty()) throw usage_error("grad_step: empty batch");
  const int C = clf.num_classes;
  const int D = clf.dim;
  const double inv_batch = 1.0 / static_cast<double>(batch.size());

  std::vector<double> grad_w(static_cast<std::size_t>(C) * D, 0.0);
  std::vector<double> grad_b(static_cast<std::size_t>(C), 0.0);
  // Sparse gradient for the embedding table: (row, accumulated dim-vector).
  std::vector<std::pair<int, std::vector<double>>> grad_rows;
  std::vector<int> row_slot;
  if (encoder.trainable()) row_slot.assign(static_cast<std::size_t>(encoder.table.rows), -1);

  double total_loss = 0.0;
  std::vector<double> delta(static_cast<std::size_t>(C));
  for (const Sample* s : batch) {
    const EmbeddingVector v = encoder.encode(*s);
    const auto probs = forward(v.values, clf);
    total_loss += loss(probs, s->label_id);

    for (int c = 0; c < C; ++c) {
      delta[static_cast<std::size_t>(c)] =
          (probs[static_cast<std::size_t>(c)] - (c == s->label_id ? 1.0 : 0.0)) * inv_batch;
    }
    for (int c = 0; c < C; ++c) {
      const double dc = delta[static_cast<std::size_t>(c)];
      if (dc == 0.0) continue;
      double* gw = grad_w.data() + static_cast<std::size_t>(c) * D;
      for (int j = 0; j < D; ++j) gw[j] += dc * v.values[static_cast<std::size_t>(j)];
      grad_b[static_cast<std::size_t>(c)] += dc;
    }
    if (encoder.trainable() && !s->tokens.empty()) {
      // d(loss)/d(v) = W^T delta, then split evenly across token rows.
      std::vector<double> gv(static_cast<std::size_t>(D), 0.0);
      for (int c = 0; c < C; ++c) {
        const double dc = delta[static_cast<std::size_t>(c)];
        if (dc == 0.0) continue;
        const double* w = clf.weight_row(c);
        for (int j = 0; j < D; ++j) gv[static_cast<std::size_t>(j)] += dc * w[j];
      }
      const double token_share = 1.0 / static_cast<double>(s->tokens.size());
      for (int tok : s->tokens) {
        int slot = row_slot[static_cast<std::size_t>(tok)];
        if (slot < 0) {
          slot = static_cast<int>(grad_rows.size());
          row_slot[static_cast<std::size_t>(tok)] = slot;
          grad_rows.emplace_back(tok, std::vector<double>(static_cast<std::size_t>(D), 0.0));
        }
        auto& acc = grad_rows[static_cast<std::size_t>(slot)].second;
        for (int j = 0; j < D; ++j) acc[static_cast<std::size_t>(j)] += gv[static_cast<std::size_t>(j)] * token_share;
      }
    }
  }

  const double lr = cfg.learning_rate;
  for (int c = 0; c < C; ++c) {
    double* w = clf.weight_row(c);
    const double* gw = grad_w.data() + static_cast<std::size_t>(c) * D;
    for (int j = 0; j < D; ++j) w[j] -= lr * (gw[j] + cfg.l2 * w[j]);
    clf.bias[static_cast<std::size_t>(c)] -= lr * grad_b[static_cast<std::size_t>(c)];
  }
  if (encoder.trainable()) {
    for (const auto& [row, acc] : grad_rows) {
      double* r = encoder.table.row(row);
      for (int j = 0; j < D; ++j) r[j] -= lr * acc[static_cast<std::size_t>(j)];
    }
  }
  return total_loss * inv_batch;
}

/// One pass over `samples`: shuffled by epoch_seed, split into batches of
/// cfg.batch_size (the last partial batch is trained, not dropped), grad_step
/// applied sequentially. Returns the epoch mean loss per sample.
inline double train_epoch(const std::vector<const Sample*>& samples, Encoder& encoder,
                          LinearClassifier& clf, const TrainConfig& cfg, std::uint64_t epoch_seed) {
  if (samples.empty()) throw usage_error("train_epoch: empty sample list");
  std::vector<const Sample*> order = samples;
  SplitMix64 rng(epoch_seed);
  shuffle(order, rng);

  double loss_sum = 0.0;
  const std::size_t n = order.size();
  const std::size_t bs = static_cast<std::size_t>(cfg.batch_size);
  std::vector<const Sample*> batch;
  for (std::size_t start = 0; start < n; start += bs) {
    const std::size_t end = std::min(n, start + bs);
    batch.assign(order.begin() + static_cast<std::ptrdiff_t>(start),
                 order.begin() + static_cast<std::ptrdiff_t>(end));
    loss_sum += grad_step(batch, encoder, clf, cfg) * static_cast<double>(end - start);
  }
  return loss_sum / static_cast<double>(n);
}

}  // namespace dcl
