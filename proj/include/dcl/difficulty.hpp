#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "dcl/encoder.hpp"
#include "dcl/errors.hpp"
#include "dcl/parallel.hpp"

namespace dcl {

/// Condensed pairwise L1 (Manhattan) distances over unordered pairs, length
/// n(n-1)/2 in row-major (i < j) order. Coordinates are summed in ascending
/// index order, so results are reproducible bit for bit.
inline std::vector<double> pairwise_l1(const std::vector<std::vector<double>>& vectors) {
  const std::size_t n = vectors.size();
  for (std::size_t i = 1; i < n; ++i) {
    if (vectors[i].size() != vectors[0].size())
      throw usage_error("pairwise_l1: vectors have mismatched dimensions");
  }
  std::vector<double> out;
  out.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const auto& a = vectors[i];
    for (std::size_t j = i + 1; j < n; ++j) {
      const auto& b = vectors[j];
      double d = 0.0;
      for (std::size_t k = 0; k < a.size(); ++k) d += std::abs(a[k] - b[k]);
      out.push_back(d);
    }
  }
  return out;
}

/// The demarcation flag: the distance ranked at theta% of the ascending
/// sorted pair distances (1-indexed rank ceil(theta/100 * m)). A category
/// with no pairs has no flag; callers treat that as degenerate.
inline double compute_flag(std::vector<double> distances, double theta) {
  if (distances.empty()) throw usage_error("compute_flag: no pair distances (category too small)");
  if (!(theta > 0.0 && theta <= 100.0)) throw usage_error("compute_flag: theta must be in (0, 100]");
  std::sort(distances.begin(), distances.end());
  const std::size_t m = distances.size();
  std::size_t rank = static_cast<std::size_t>(std::ceil(theta / 100.0 * static_cast<double>(m)));
  if (rank < 1) rank = 1;
  if (rank > m) rank = m;
  return distances[rank - 1];
}

/// Density of sample i: how many same-category samples sit strictly closer
/// than the flag, D_i = |{ j != i : d_ij < d_flag }|.
inline std::vector<int> densities(const std::vector<double>& condensed, std::size_t n, double d_flag) {
  std::vector<int> out(n, 0);
  std::size_t idx = 0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j, ++idx) {
      if (condensed[idx] < d_flag) {
        ++out[i];
        ++out[j];
      }
    }
  }
  return out;
}

/// Convenience overload computing the distances itself.
inline std::vector<int> densities(const std::vector<std::vector<double>>& vectors, double d_flag) {
  return densities(pairwise_l1(vectors), vectors.size(), d_flag);
}

/// Result of clustering one category's density values.
struct ClusterResult {
  std::vector<int> levels;        // per input position, 1..k_eff (1 = simplest)
  int k_eff = 0;                  // min(K requested, distinct values)
  std::vector<double> centroids;  // by level: centroids[0] is level 1's mean
  double sse = 0.0;               // within-cluster squared error of the chosen partition
};

/// Exact 1-D k-means over density values via dynamic programming on the
/// sorted distinct values (weighted by multiplicity). Clusters are contiguous
/// intervals and the squared-error objective is globally minimal; equal
/// values always share a level, which keeps the partition a pure function of
/// the value. Levels are numbered by descending centroid: level 1 holds the
/// highest densities (the simplest samples), level k_eff the lowest.
inline ClusterResult cluster_levels_1d(const std::vector<int>& values, int k_requested) {
  if (values.empty()) throw usage_error("cluster_levels_1d: empty input");
  if (k_requested < 1) throw usage_error("cluster_levels_1d: K must be >= 1");

  // Distinct ascending values with multiplicities.
  std::vector<int> sorted = values;
  std::sort(sorted.begin(), sorted.end());
  std::vector<int> distinct;
  std::vector<long long> count;
  for (int v : sorted) {
    if (distinct.empty() || distinct.back() != v) {
      distinct.push_back(v);
      count.push_back(0);
    }
    ++count.back();
  }
  const int d = static_cast<int>(distinct.size());
  const int k = std::min(k_requested, d);

  // Prefix moments for O(1) interval cost.
  std::vector<long double> pw(static_cast<std::size_t>(d) + 1, 0.0L);
  std::vector<long double> ps(static_cast<std::size_t>(d) + 1, 0.0L);
  std::vector<long double> pq(static_cast<std::size_t>(d) + 1, 0.0L);
  for (int i = 0; i < d; ++i) {
    const long double w = static_cast<long double>(count[static_cast<std::size_t>(i)]);
    const long double v = static_cast<long double>(distinct[static_cast<std::size_t>(i)]);
    pw[static_cast<std::size_t>(i) + 1] = pw[static_cast<std::size_t>(i)] + w;
    ps[static_cast<std::size_t>(i) + 1] = ps[static_cast<std::size_t>(i)] + w * v;
    pq[static_cast<std::size_t>(i) + 1] = pq[static_cast<std::size_t>(i)] + w * v * v;
  }
  auto cost = [&](int a, int b) {  // weighted SSE of distinct range [a, b]
    const long double w = pw[static_cast<std::size_t>(b) + 1] - pw[static_cast<std::size_t>(a)];
    const long double s = ps[static_cast<std::size_t>(b) + 1] - ps[static_cast<std::size_t>(a)];
    const long double q = pq[static_cast<std::size_t>(b) + 1] - pq[static_cast<std::size_t>(a)];
    return q - s * s / w;
  };

  // dp[m][j]: minimal SSE splitting distinct values [0, j] into m+1 clusters.
  const long double inf = std::numeric_limits<long double>::infinity();
  std::vector<std::vector<long double>> dp(static_cast<std::size_t>(k),
                                           std::vector<long double>(static_cast<std::size_t>(d), inf));
  std::vector<std::vector<int>> arg(static_cast<std::size_t>(k), std::vector<int>(static_cast<std::size_t>(d), 0));
  for (int j = 0; j < d; ++j) dp[0][static_cast<std::size_t>(j)] = cost(0, j);
  for (int m = 1; m < k; ++m) {
    for (int j = m; j < d; ++j) {
      long double best = inf;
      int best_i = m;
      for (int i = m; i <= j; ++i) {
        const long double c = dp[static_cast<std::size_t>(m) - 1][static_cast<std::size_t>(i) - 1] + cost(i, j);
        if (c < best) {
          best = c;
          best_i = i;
        }
      }
      dp[static_cast<std::size_t>(m)][static_cast<std::size_t>(j)] = best;
      arg[static_cast<std::size_t>(m)][static_cast<std::size_t>(j)] = best_i;
    }
  }

  // Backtrack interval starts; interval t (ascending values) becomes level
  // k - t, so the top interval is level 1.
  std::vector<int> start(static_cast<std::size_t>(k), 0);
  {
    int j = d - 1;
    for (int m = k - 1; m >= 1; --m) {
      start[static_cast<std::size_t>(m)] = arg[static_cast<std::size_t>(m)][static_cast<std::size_t>(j)];
      j = start[static_cast<std::size_t>(m)] - 1;
    }
  }

  ClusterResult result;
  result.k_eff = k;
  result.sse = static_cast<double>(dp[static_cast<std::size_t>(k) - 1][static_cast<std::size_t>(d) - 1]);
  result.centroids.assign(static_cast<std::size_t>(k), 0.0);
  std::vector<int> level_of_distinct(static_cast<std::size_t>(d), 0);
  for (int t = 0; t < k; ++t) {
    const int lo = start[static_cast<std::size_t>(t)];
    const int hi = (t + 1 < k) ? start[static_cast<std::size_t>(t) + 1] - 1 : d - 1;
    const int level = k - t;
    const long double w = pw[static_cast<std::size_t>(hi) + 1] - pw[static_cast<std::size_t>(lo)];
    const long double s = ps[static_cast<std::size_t>(hi) + 1] - ps[static_cast<std::size_t>(lo)];
    result.centroids[static_cast<std::size_t>(level) - 1] = static_cast<double>(s / w);
    for (int i = lo; i <= hi; ++i) level_of_distinct[static_cast<std::size_t>(i)] = level;
  }

  result.levels.resize(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto it = std::lower_bound(distinct.begin(), distinct.end(), values[i]);
    result.levels[i] = level_of_distinct[static_cast<std::size_t>(it - distinct.begin())];
  }
  return result;
}

/// Per-sample difficulty for one training round.
struct DifficultyEntry {
  int level = 1;    // 1..k_eff of the sample's category
  int density = 0;  // D_i
};

struct DifficultyAssignment {
  int k_requested = 1;
  int round = 0;
  std::unordered_map<int, DifficultyEntry> by_sample;    // sample id -> entry
  std::map<int, int> k_eff_by_category;                  // label id -> k_eff
  std::map<int, double> flag_by_category;                // label id -> d_flag (absent if degenerate)

  const DifficultyEntry& at(int sample_id) const {
    auto it = by_sample.find(sample_id);
    if (it == by_sample.end())
      throw usage_error("no difficulty entry for sample id " + std::to_string(sample_id));
    return it->second;
  }

  /// Population of each level 1..K over the whole training set.
  std::vector<long long> level_counts() const {
    std::vector<long long> counts(static_cast<std::size_t>(k_requested), 0);
    for (const auto& [id, e] : by_sample) ++counts[static_cast<std::size_t>(e.level) - 1];
    return counts;
  }
};

/// Full per-category difficulty definition: within every category, pairwise
/// L1 distances -> theta% demarcation flag -> accumulated densities -> exact
/// 1-D clustering into at most K levels. Categories with n <= 2 carry no
/// density signal and land entirely in level 1. Embeddings must be aligned
/// with samples (one per sample, same order).
inline DifficultyAssignment assign_difficulty(const std::vector<EmbeddingVector>& embeddings,
                                              const std::vector<Sample>& samples, double theta,
                                              int k_levels, int threads = 1, int round = 0) {
  if (embeddings.size() != samples.size())
    throw usage_error("assign_difficulty: embeddings and samples differ in length");
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (embeddings[i].sample_id != samples[i].id)
      throw usage_error("assign_difficulty: embedding/sample id mismatch at position " + std::to_string(i));
  }
  if (k_levels < 1) throw usage_error("assign_difficulty: K must be >= 1");

  std::map<int, std::vector<std::size_t>> by_category;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    by_category[samples[i].label_id].push_back(i);
  }
  std::vector<std::pair<int, const std::vector<std::size_t>*>> categories;
  categories.reserve(by_category.size());
  for (const auto& kv : by_category) categories.emplace_back(kv.first, &kv.second);

  struct CategoryOut {
    std::vector<int> levels;
    std::vector<int> dens;
    int k_eff = 1;
    double flag = 0.0;
    bool has_flag = false;
  };
  std::vector<CategoryOut> outputs(categories.size());

  parallel_for(categories.size(), threads, [&](std::size_t ci) {
    const auto& members = *categories[ci].second;
    const std::size_t n = members.size();
    auto& out = outputs[ci];
    out.dens.assign(n, 0);
    out.levels.assign(n, 1);
    if (n <= 2) {
      if (n == 2) {
        std::vector<std::vector<double>> vecs{embeddings[members[0]].values, embeddings[members[1]].values};
        const auto dist = pairwise_l1(vecs);
        out.flag = compute_flag(dist, theta);
        out.has_flag = true;
        const auto d = densities(dist, n, out.flag);
        out.dens.assign(d.begin(), d.end());
      }
      out.k_eff = 1;
      return;
    }
    std::vector<std::vector<double>> vecs;
    vecs.reserve(n);
    for (std::size_t idx : members) vecs.push_back(embeddings[idx].values);
    const auto dist = pairwise_l1(vecs);
    out.flag = compute_flag(dist, theta);
    out.has_flag = true;
    out.dens = densities(dist, n, out.flag);
    const auto clusters = cluster_levels_1d(out.dens, k_levels);
    out.levels = clusters.levels;
    out.k_eff = clusters.k_eff;
  });

  DifficultyAssignment assignment;
  assignment.k_requested = k_levels;
  assignment.round = round;
  assignment.by_sample.reserve(samples.size());
  for (std::size_t ci = 0; ci < categories.size(); ++ci) {
    const int label = categories[ci].first;
    const auto& members = *categories[ci].second;
    const auto& out = outputs[ci];
    assignment.k_eff_by_category[label] = out.k_eff;
    if (out.has_flag) assignment.flag_by_category[label] = out.flag;
    for (std::size_t p = 0; p < members.size(); ++p) {
      assignment.by_sample.emplace(samples[members[p]].id,
                                   DifficultyEntry{out.levels[p], out.dens[p]});
    }
  }
  return assignment;
}

}  // namespace dcl
