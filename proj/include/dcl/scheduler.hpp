#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "dcl/data.hpp"
#include "dcl/difficulty.hpp"
#include "dcl/errors.hpp"
#include "dcl/rng.hpp"

namespace dcl {

struct SchedulerConfig {
  int k_levels = 3;
  double lambda = 2.0;       // decay base, > 1
  double omega_floor = 0.1;  // no level's weight falls below this
};

/// Carries the freeze-rule memory between rounds: the per-level counts that
/// were actually trained on in the previous round.
struct SchedulerState {
  int epoch = 0;
  bool has_prev = false;
  std::vector<long long> prev_used_counts;
};

/// Attention weight for difficulty level k at a given epoch. Level 1 (the
/// simplest) starts at 1 and decays geometrically toward the floor; level K
/// starts at the floor and rises toward 1; intermediate levels interpolate
/// linearly. The per-epoch change shrinks by 1/lambda each epoch, so the
/// sample counts settle late in training. K = 1 keeps the full set (weight 1
/// always).
inline double weight(int k, int epoch, const SchedulerConfig& cfg) {
  if (k < 1 || k > cfg.k_levels) throw usage_error("weight: level " + std::to_string(k) + " out of range");
  if (epoch < 0) throw usage_error("weight: epoch must be >= 0");
  if (!(cfg.lambda > 1.0)) throw usage_error("weight: lambda must be > 1");
  if (cfg.k_levels == 1) return 1.0;
  const double t = static_cast<double>(k - 1) / static_cast<double>(cfg.k_levels - 1);
  const double decay = std::pow(cfg.lambda, -static_cast<double>(epoch));
  const double w = t + (1.0 - 2.0 * t) * decay;
  return std::clamp(w, cfg.omega_floor, 1.0);
}

inline std::vector<double> weights(int epoch, const SchedulerConfig& cfg) {
  std::vector<double> out(static_cast<std::size_t>(cfg.k_levels));
  for (int k = 1; k <= cfg.k_levels; ++k) out[static_cast<std::size_t>(k) - 1] = weight(k, epoch, cfg);
  return out;
}

/// New per-level sample counts: Num'_k = round-half-up(omega_k * Num_k),
/// clamped so a non-empty level never empties entirely and never oversamples.
inline std::vector<long long> target_counts(const std::vector<long long>& level_counts,
                                            const std::vector<double>& omegas) {
  if (level_counts.size() != omegas.size())
    throw usage_error("target_counts: level count and weight vectors differ in length");
  std::vector<long long> out(level_counts.size());
  for (std::size_t k = 0; k < level_counts.size(); ++k) {
    const long long avail = level_counts[k];
    long long target = static_cast<long long>(std::floor(omegas[k] * static_cast<double>(avail) + 0.5));
    const long long lo = std::min<long long>(1, avail);
    target = std::max(lo, std::min(target, avail));
    out[k] = target;
  }
  return out;
}

/// The freeze rule: when the new partition did not shrink the complex-level
/// population below the complex count used last round, reuse last round's
/// per-level counts; otherwise adopt the proposed counts. Either branch is
/// clamped to availability. The complex-level used count never increases
/// across rounds.
inline std::vector<long long> apply_freeze_rule(const SchedulerState& state,
                                                const std::vector<long long>& avail,
                                                const std::vector<long long>& proposed,
                                                bool* frozen_out = nullptr) {
  if (avail.size() != proposed.size())
    throw usage_error("apply_freeze_rule: vector length mismatch");
  std::vector<long long> result;
  bool frozen = false;
  if (state.has_prev) {
    if (state.prev_used_counts.size() != avail.size())
      throw usage_error("apply_freeze_rule: previous counts have different length");
    if (avail.back() >= state.prev_used_counts.back()) {
      frozen = true;
      result = state.prev_used_counts;
    }
  }
  if (!frozen) result = proposed;
  for (std::size_t k = 0; k < result.size(); ++k) result[k] = std::min(result[k], avail[k]);
  if (frozen_out) *frozen_out = frozen;
  return result;
}

/// Draws the round's training subset: per level, a uniform sample without
/// replacement of exactly targets[k] ids, seeded by (seed, round, level).
/// Ids come back grouped by level in the training-set order within each
/// level; the trainer shuffles afterwards.
inline std::vector<int> select_samples(const DifficultyAssignment& assignment,
                                       const std::vector<Sample>& train_samples,
                                       const std::vector<long long>& targets, std::uint64_t seed,
                                       int round) {
  const int K = assignment.k_requested;
  if (static_cast<int>(targets.size()) != K)
    throw usage_error("select_samples: targets length does not match K");

  std::vector<std::vector<int>> ids_by_level(static_cast<std::size_t>(K));
  for (const auto& s : train_samples) {
    const auto& e = assignment.at(s.id);
    ids_by_level[static_cast<std::size_t>(e.level) - 1].push_back(s.id);
  }

  std::vector<int> selected;
  for (int k = 1; k <= K; ++k) {
    const auto& pool = ids_by_level[static_cast<std::size_t>(k) - 1];
    const long long want = targets[static_cast<std::size_t>(k) - 1];
    if (want > static_cast<long long>(pool.size()))
      throw usage_error("select_samples: target " + std::to_string(want) + " exceeds availability " +
                        std::to_string(pool.size()) + " at level " + std::to_string(k));
    if (want == 0) continue;
    SplitMix64 rng(derive_seed(seed, "select", static_cast<std::uint64_t>(round), static_cast<std::uint64_t>(k)));
    const auto chosen = sample_without_replacement(pool.size(), static_cast<std::size_t>(want), rng);
    for (std::size_t c : chosen) selected.push_back(pool[c]);
  }
  return selected;
}

}  // namespace dcl
