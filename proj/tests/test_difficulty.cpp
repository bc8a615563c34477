#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>

#include "dcl/difficulty.hpp"
#include "dcl/rng.hpp"

using namespace dcl;

namespace {

// Independent double-loop oracle: same summation order (ascending coordinate
// index), so results must be bit-equal to the condensed implementation.
std::vector<double> brute_force_l1(const std::vector<std::vector<double>>& vecs) {
  std::vector<double> out;
  for (std::size_t i = 0; i < vecs.size(); ++i) {
    for (std::size_t j = i + 1; j < vecs.size(); ++j) {
      double d = 0.0;
      for (std::size_t k = 0; k < vecs[i].size(); ++k) d += std::fabs(vecs[i][k] - vecs[j][k]);
      out.push_back(d);
    }
  }
  return out;
}

std::vector<int> brute_force_densities(const std::vector<std::vector<double>>& vecs, double flag) {
  std::vector<int> out(vecs.size(), 0);
  for (std::size_t i = 0; i < vecs.size(); ++i) {
    for (std::size_t j = 0; j < vecs.size(); ++j) {
      if (i == j) continue;
      double d = 0.0;
      for (std::size_t k = 0; k < vecs[i].size(); ++k) d += std::fabs(vecs[i][k] - vecs[j][k]);
      if (d < flag) ++out[i];
    }
  }
  return out;
}

std::vector<std::vector<double>> random_vectors(std::size_t n, std::size_t dim, std::uint64_t seed) {
  SplitMix64 rng(seed);
  std::vector<std::vector<double>> vecs(n, std::vector<double>(dim));
  for (auto& v : vecs) {
    for (auto& x : v) x = rng.next_double() * 2.0 - 1.0;
  }
  return vecs;
}

// Exact SSE of a partition of sorted integer values, scaled by lcm(1..12) so
// clusters of any size <= 12 produce integer costs. Usable for n <= 12.
constexpr long long kLcm12 = 27720;

long long exact_scaled_sse(const std::vector<int>& sorted, const std::vector<int>& cuts) {
  // cuts: start index of each cluster (first is 0).
  long long total = 0;
  for (std::size_t c = 0; c < cuts.size(); ++c) {
    const std::size_t lo = static_cast<std::size_t>(cuts[c]);
    const std::size_t hi = (c + 1 < cuts.size()) ? static_cast<std::size_t>(cuts[c + 1]) : sorted.size();
    long long w = static_cast<long long>(hi - lo), s = 0, q = 0;
    for (std::size_t i = lo; i < hi; ++i) {
      s += sorted[i];
      q += static_cast<long long>(sorted[i]) * sorted[i];
    }
    // cluster SSE = q - s^2 / w; scaled: q*L - s^2 * (L / w)
    total += q * kLcm12 - s * s * (kLcm12 / w);
  }
  return total;
}

// Exhaustive minimum over contiguous partitions into exactly k non-empty
// parts (tie-splitting allowed).
long long exhaustive_min_scaled_sse(const std::vector<int>& sorted, int k) {
  const int n = static_cast<int>(sorted.size());
  long long best = -1;
  std::vector<int> cuts(static_cast<std::size_t>(k), 0);
  // Choose k-1 cut positions in 1..n-1 ascending.
  std::vector<int> pos(static_cast<std::size_t>(k) - 1);
  auto recurse = [&](auto&& self, int idx, int from) -> void {
    if (idx == k - 1) {
      cuts[0] = 0;
      for (int c = 1; c < k; ++c) cuts[static_cast<std::size_t>(c)] = pos[static_cast<std::size_t>(c) - 1];
      const long long sse = exact_scaled_sse(sorted, cuts);
      if (best < 0 || sse < best) best = sse;
      return;
    }
    for (int p = from; p <= n - (k - 1 - idx); ++p) {
      pos[static_cast<std::size_t>(idx)] = p;
      self(self, idx + 1, p + 1);
    }
  };
  if (k == 1) return exact_scaled_sse(sorted, {0});
  recurse(recurse, 0, 1);
  return best;
}

// Exact scaled SSE of the partition a ClusterResult chose.
long long result_scaled_sse(const std::vector<int>& values, const ClusterResult& r) {
  std::map<int, std::vector<int>> by_level;
  for (std::size_t i = 0; i < values.size(); ++i) by_level[r.levels[i]].push_back(values[i]);
  long long total = 0;
  for (auto& [level, vals] : by_level) {
    long long w = static_cast<long long>(vals.size()), s = 0, q = 0;
    for (int v : vals) {
      s += v;
      q += static_cast<long long>(v) * v;
    }
    total += q * kLcm12 - s * s * (kLcm12 / w);
  }
  return total;
}

EmbeddingVector ev(int id, std::vector<double> values) {
  EmbeddingVector v;
  v.sample_id = id;
  v.values = std::move(values);
  return v;
}

Sample labeled(int id, int label) {
  Sample s;
  s.id = id;
  s.label_id = label;
  return s;
}

}  // namespace

TEST_CASE("pairwise_l1 basics") {
  CHECK(pairwise_l1({{1.0, 2.0}, {1.0, 2.0}}) == std::vector<double>{0.0});
  CHECK(pairwise_l1({{1.0, 2.0}, {3.0, 5.0}}) == std::vector<double>{5.0});
  CHECK(pairwise_l1({}).empty());
  CHECK(pairwise_l1({{1.0}}).empty());
  CHECK_THROWS_AS(pairwise_l1({{1.0}, {1.0, 2.0}}), usage_error);
}

TEST_CASE("pairwise_l1 matches the brute-force oracle bit for bit") {
  const auto vecs = random_vectors(50, 8, 20240601);
  const auto impl = pairwise_l1(vecs);
  const auto oracle = brute_force_l1(vecs);
  REQUIRE(impl.size() == oracle.size());
  for (std::size_t i = 0; i < impl.size(); ++i) CHECK(impl[i] == oracle[i]);
}

TEST_CASE("compute_flag picks the ceil(theta% * m) ranked distance") {
  CHECK(compute_flag({1, 2, 3, 4, 5, 6, 7, 8, 9, 10}, 60.0) == 6.0);
  CHECK(compute_flag({7}, 60.0) == 7.0);
  CHECK(compute_flag({1, 9, 10}, 60.0) == 9.0);  // rank ceil(1.8) = 2
  CHECK(compute_flag({5, 1}, 100.0) == 5.0);
  CHECK(compute_flag({5, 1}, 1e-9) == 1.0);
  CHECK_THROWS_AS(compute_flag({}, 60.0), usage_error);
  CHECK_THROWS_AS(compute_flag({1.0}, 0.0), usage_error);
  CHECK_THROWS_AS(compute_flag({1.0}, 101.0), usage_error);
}

TEST_CASE("densities on the 1-D (0, 1, 10) worked example") {
  const std::vector<std::vector<double>> vecs = {{0.0}, {1.0}, {10.0}};
  const auto dist = pairwise_l1(vecs);
  REQUIRE(dist == std::vector<double>{1.0, 10.0, 9.0});
  const double flag = compute_flag(dist, 60.0);
  CHECK(flag == 9.0);
  CHECK(densities(dist, 3, flag) == std::vector<int>{1, 1, 0});
  CHECK(brute_force_densities(vecs, flag) == std::vector<int>{1, 1, 0});
}

TEST_CASE("densities of identical vectors saturate at n-1") {
  const std::vector<std::vector<double>> vecs(4, std::vector<double>{2.0, 2.0});
  CHECK(densities(vecs, 0.5) == std::vector<int>{3, 3, 3, 3});
}

TEST_CASE("densities of a single sample is zero") {
  CHECK(densities(std::vector<double>{}, 1, 1.0) == std::vector<int>{0});
}

TEST_CASE("density bounds, handshake identity, and invariances hold on random data") {
  SplitMix64 seeds(77);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 2 + seeds.below(40);
    const std::size_t dim = 1 + seeds.below(6);
    auto vecs = random_vectors(n, dim, seeds.next());
    const auto dist = pairwise_l1(vecs);
    const double flag = compute_flag(dist, 60.0);
    const auto dens = densities(dist, n, flag);

    long long handshake = 0;
    for (double d : dist) {
      if (d < flag) ++handshake;
    }
    long long sum = 0;
    for (int d : dens) {
      CHECK(d >= 0);
      CHECK(d <= static_cast<int>(n) - 1);
      sum += d;
    }
    CHECK(sum == 2 * handshake);

    // Translation invariance: shift every vector by one constant offset.
    auto shifted = vecs;
    std::vector<double> offset(dim);
    for (auto& o : offset) o = seeds.next_double() * 10 - 5;
    for (auto& v : shifted) {
      for (std::size_t k = 0; k < dim; ++k) v[k] += offset[k];
    }
    const auto dist2 = pairwise_l1(shifted);
    const auto dens2 = densities(dist2, n, compute_flag(dist2, 60.0));
    CHECK(dens2 == dens);

    // Positive-scale invariance.
    auto scaled = vecs;
    const double c = 0.25 + seeds.next_double() * 4.0;
    for (auto& v : scaled) {
      for (auto& x : v) x *= c;
    }
    const auto dist3 = pairwise_l1(scaled);
    const auto dens3 = densities(dist3, n, compute_flag(dist3, 60.0));
    CHECK(dens3 == dens);
  }
}

TEST_CASE("cluster_levels_1d separates obvious groups") {
  const auto r = cluster_levels_1d({5, 5, 5, 1, 1}, 2);
  CHECK(r.k_eff == 2);
  CHECK(r.levels == std::vector<int>{1, 1, 1, 2, 2});  // high density = level 1
  CHECK(r.centroids == std::vector<double>{5.0, 1.0});
}

TEST_CASE("cluster_levels_1d degenerates to one level on equal values") {
  const auto r = cluster_levels_1d({4, 4, 4, 4}, 3);
  CHECK(r.k_eff == 1);
  CHECK(r.levels == std::vector<int>{1, 1, 1, 1});
}

TEST_CASE("cluster_levels_1d on (0,1,2,6,7,20) with K=3 is the exhaustive optimum") {
  const std::vector<int> values = {0, 1, 2, 6, 7, 20};
  const auto r = cluster_levels_1d(values, 3);
  CHECK(r.k_eff == 3);
  std::vector<int> sorted = values;
  std::sort(sorted.begin(), sorted.end());
  CHECK(result_scaled_sse(values, r) == exhaustive_min_scaled_sse(sorted, 3));
  // Expected partition: {0,1,2}, {6,7}, {20}.
  CHECK(r.levels == std::vector<int>{3, 3, 3, 2, 2, 1});
}

TEST_CASE("cluster_levels_1d equals the exhaustive contiguous-partition minimum") {
  SplitMix64 seeds(424242);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + static_cast<int>(seeds.below(12));
    const int k = 1 + static_cast<int>(seeds.below(4));
    std::vector<int> values(static_cast<std::size_t>(n));
    for (auto& v : values) v = static_cast<int>(seeds.below(30));
    const auto r = cluster_levels_1d(values, k);

    std::vector<int> sorted = values;
    std::sort(sorted.begin(), sorted.end());
    const int distinct = static_cast<int>(std::set<int>(values.begin(), values.end()).size());
    CHECK(r.k_eff == std::min(k, distinct));
    CHECK(result_scaled_sse(values, r) == exhaustive_min_scaled_sse(sorted, r.k_eff));

    // Strictly decreasing centroids, contiguity-by-value, level monotonicity.
    for (std::size_t l = 1; l < r.centroids.size(); ++l) CHECK(r.centroids[l] < r.centroids[l - 1]);
    std::map<int, std::pair<int, int>> range_by_level;
    std::map<int, int> level_of_value;
    for (std::size_t i = 0; i < values.size(); ++i) {
      auto it = level_of_value.find(values[i]);
      if (it != level_of_value.end()) {
        CHECK(it->second == r.levels[i]);  // equal values share a level
      } else {
        level_of_value.emplace(values[i], r.levels[i]);
      }
    }
    // Levels are descending-in-value intervals: sort distinct values, levels
    // must be non-increasing in value.
    int prev_level = r.k_eff + 1;
    for (auto& [value, level] : level_of_value) {
      CHECK(level <= prev_level);
      prev_level = level;
    }
  }
}

TEST_CASE("cluster_levels_1d input validation") {
  CHECK_THROWS_AS(cluster_levels_1d({}, 2), usage_error);
  CHECK_THROWS_AS(cluster_levels_1d({1, 2}, 0), usage_error);
}

TEST_CASE("assign_difficulty composes the per-category chain") {
  // Two categories with the (0, 1, 10) structure; per-category flags/levels.
  std::vector<Sample> samples = {labeled(0, 0), labeled(1, 0), labeled(2, 0),
                                 labeled(3, 1), labeled(4, 1), labeled(5, 1)};
  std::vector<EmbeddingVector> embeddings = {ev(0, {0.0}),   ev(1, {1.0}),   ev(2, {10.0}),
                                             ev(3, {100.0}), ev(4, {101.0}), ev(5, {110.0})};
  const auto a = assign_difficulty(embeddings, samples, 60.0, 2);
  CHECK(a.k_requested == 2);
  CHECK(a.k_eff_by_category.at(0) == 2);
  CHECK(a.k_eff_by_category.at(1) == 2);
  CHECK(a.flag_by_category.at(0) == 9.0);
  CHECK(a.flag_by_category.at(1) == 9.0);
  // Densities (1,1,0) per category: the 10-offset sample is the complex one.
  CHECK(a.at(0).level == 1);
  CHECK(a.at(1).level == 1);
  CHECK(a.at(2).level == 2);
  CHECK(a.at(3).level == 1);
  CHECK(a.at(4).level == 1);
  CHECK(a.at(5).level == 2);
  CHECK(a.level_counts() == std::vector<long long>{4, 2});
}

TEST_CASE("assign_difficulty sends tiny categories to level 1") {
  std::vector<Sample> samples = {labeled(0, 0), labeled(1, 0)};
  std::vector<EmbeddingVector> embeddings = {ev(0, {0.0}), ev(1, {5.0})};
  const auto a = assign_difficulty(embeddings, samples, 60.0, 3);
  CHECK(a.at(0).level == 1);
  CHECK(a.at(1).level == 1);
  CHECK(a.k_eff_by_category.at(0) == 1);

  std::vector<Sample> one = {labeled(9, 0)};
  std::vector<EmbeddingVector> one_emb = {ev(9, {1.0})};
  const auto b = assign_difficulty(one_emb, one, 60.0, 3);
  CHECK(b.at(9).level == 1);
  CHECK(b.at(9).density == 0);
}

TEST_CASE("assign_difficulty is invariant to sample order and thread count") {
  SplitMix64 rng(555);
  std::vector<Sample> samples;
  std::vector<EmbeddingVector> embeddings;
  for (int i = 0; i < 60; ++i) {
    samples.push_back(labeled(i, static_cast<int>(rng.below(3))));
    std::vector<double> v(4);
    for (auto& x : v) x = rng.next_double() * 2 - 1;
    embeddings.push_back(ev(i, std::move(v)));
  }
  const auto base = assign_difficulty(embeddings, samples, 60.0, 3, 1);
  const auto threaded = assign_difficulty(embeddings, samples, 60.0, 3, 4);

  std::vector<std::size_t> perm(samples.size());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  shuffle(perm, rng);
  std::vector<Sample> ps;
  std::vector<EmbeddingVector> pe;
  for (auto i : perm) {
    ps.push_back(samples[i]);
    pe.push_back(embeddings[i]);
  }
  const auto permuted = assign_difficulty(pe, ps, 60.0, 3, 1);

  for (const auto& s : samples) {
    CHECK(base.at(s.id).level == permuted.at(s.id).level);
    CHECK(base.at(s.id).density == permuted.at(s.id).density);
    CHECK(base.at(s.id).level == threaded.at(s.id).level);
  }
}

TEST_CASE("assign_difficulty requires an embedding per sample") {
  std::vector<Sample> samples = {labeled(0, 0), labeled(1, 0)};
  std::vector<EmbeddingVector> embeddings = {ev(0, {0.0})};
  CHECK_THROWS_AS(assign_difficulty(embeddings, samples, 60.0, 2), usage_error);
  std::vector<EmbeddingVector> wrong_ids = {ev(0, {0.0}), ev(7, {1.0})};
  CHECK_THROWS_AS(assign_difficulty(wrong_ids, samples, 60.0, 2), usage_error);
}

TEST_CASE("level means decrease strictly with the level index") {
  SplitMix64 seeds(99);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 3 + static_cast<int>(seeds.below(50));
    std::vector<int> values(static_cast<std::size_t>(n));
    for (auto& v : values) v = static_cast<int>(seeds.below(20));
    const auto r = cluster_levels_1d(values, 3);
    std::map<int, std::pair<double, int>> mean_by_level;
    for (std::size_t i = 0; i < values.size(); ++i) {
      auto& [sum, cnt] = mean_by_level[r.levels[i]];
      sum += values[i];
      cnt += 1;
    }
    double prev = std::numeric_limits<double>::infinity();
    for (auto& [level, sc] : mean_by_level) {
      const double mean = sc.first / sc.second;
      CHECK(mean < prev);
      prev = mean;
    }
  }
}
