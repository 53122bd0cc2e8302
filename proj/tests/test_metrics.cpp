// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "reprforge/errors.hpp"
#include "reprforge/metrics.hpp"
#include "reprforge/rng.hpp"

using namespace reprforge;

namespace {

EmbeddingSet random_set(Rng& rng, int n, int d, int num_labels) {
  EmbeddingSet set;
  set.dim = d;
  set.embeddings.resize(static_cast<std::size_t>(n) * d);
  for (auto& v : set.embeddings) v = rng.uniform(-2, 2);
  set.labels.resize(static_cast<std::size_t>(n));
  for (auto& l : set.labels) l = static_cast<int>(rng.uniform_int(num_labels));
  return set;
}

/// Full-sort oracle with the same (distance, index) tie rule.
std::vector<int> knn_oracle(const EmbeddingSet& q, int qi, const EmbeddingSet& g, int k,
                            DistanceMetric metric, bool self_exclude) {
  std::vector<std::pair<double, int>> all;
  for (int j = 0; j < g.size(); ++j) {
    if (self_exclude && j == qi) continue;
    const double* a = q.embeddings.data() + static_cast<std::size_t>(qi) * q.dim;
    const double* b = g.embeddings.data() + static_cast<std::size_t>(j) * g.dim;
    double dist = 0.0;
    if (metric == DistanceMetric::kEuclidean) {
      for (int t = 0; t < q.dim; ++t) dist += (a[t] - b[t]) * (a[t] - b[t]);
    } else {
      double dot = 0, na = 0, nb = 0;
      for (int t = 0; t < q.dim; ++t) {
        dot += a[t] * b[t];
        na += a[t] * a[t];
        nb += b[t] * b[t];
      }
      dist = -dot / std::max(std::sqrt(na) * std::sqrt(nb), 1e-12);
    }
    all.emplace_back(dist, j);
  }
  std::stable_sort(all.begin(), all.end());
  std::vector<int> out;
  for (int i = 0; i < k; ++i) out.push_back(all[static_cast<std::size_t>(i)].second);
  return out;
}

/// Exhaustive Mann-Whitney oracle.
double auc_oracle(const std::vector<double>& scores, const std::vector<bool>& is_same) {
  double wins = 0.0;
  std::int64_t pairs = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!is_same[i]) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (is_same[j]) continue;
      ++pairs;
      if (scores[i] > scores[j]) wins += 1.0;
      else if (scores[i] == scores[j]) wins += 0.5;
    }
  }
  return wins / static_cast<double>(pairs);
}

} // namespace

TEST_CASE("topk_accuracy") {
  const std::vector<double> logits{0.9, 0.1, 0.2, 0.8};
  CHECK(topk_accuracy(logits, 2, 2, {0, 1}, 1) == doctest::Approx(1.0));
  CHECK(topk_accuracy(logits, 2, 2, {1, 0}, 1) == doctest::Approx(0.0));
  CHECK(topk_accuracy(logits, 2, 2, {1, 0}, 2) == doctest::Approx(1.0));  // k=C covers all

  SUBCASE("ties rank the lower class index first") {
    const std::vector<double> equal{0.5, 0.5, 0.5};
    CHECK(topk_accuracy(equal, 1, 3, {0}, 1) == doctest::Approx(1.0));
    CHECK(topk_accuracy(equal, 1, 3, {1}, 1) == doctest::Approx(0.0));
  }
  SUBCASE("k out of range") {
    CHECK_THROWS_AS(topk_accuracy(logits, 2, 2, {0, 1}, 3), KOutOfRange);
    CHECK_THROWS_AS(topk_accuracy(logits, 2, 2, {0, 1}, 0), KOutOfRange);
  }
}

TEST_CASE("knn") {
  SUBCASE("an exact duplicate is the first neighbor") {
    EmbeddingSet g;
    g.dim = 2;
    g.embeddings = {0, 0, 5, 5, 1, 1};
    g.labels = {0, 1, 2};
    EmbeddingSet q;
    q.dim = 2;
    q.embeddings = {5, 5};
    q.labels = {1};
    const auto nn = knn(q, g, 1, DistanceMetric::kEuclidean);
    CHECK(nn[0][0] == 1);
  }
  SUBCASE("five-point hand set matches an independent full sort") {
    EmbeddingSet g;
    g.dim = 1;
    g.embeddings = {0.0, 10.0, -3.0, 4.0, 0.5};
    g.labels = {0, 1, 2, 3, 4};
    EmbeddingSet q;
    q.dim = 1;
    q.embeddings = {1.0};
    q.labels = {0};
    const auto nn = knn(q, g, 5, DistanceMetric::kEuclidean);
    CHECK(nn[0] == std::vector<int>{4, 0, 3, 2, 1});
  }
  SUBCASE("k = gallery size returns a permutation") {
    Rng rng(21);
    EmbeddingSet g = random_set(rng, 12, 3, 4);
    const auto nn = knn(g, g, 12, DistanceMetric::kEuclidean);
    for (const auto& row : nn) {
      std::vector<int> sorted = row;
      std::sort(sorted.begin(), sorted.end());
      std::vector<int> expect(12);
      std::iota(expect.begin(), expect.end(), 0);
      CHECK(sorted == expect);
    }
  }
  SUBCASE("matches the full-sort oracle on random sets") {
    Rng rng(22);
    for (int trial = 0; trial < 20; ++trial) {
      const int n = 20 + static_cast<int>(rng.uniform_int(180));
      EmbeddingSet g = random_set(rng, n, 4, 6);
      EmbeddingSet q = random_set(rng, 8, 4, 6);
      const int k = 1 + static_cast<int>(rng.uniform_int(n));
      const auto metric =
          trial % 2 == 0 ? DistanceMetric::kEuclidean : DistanceMetric::kCosine;
      const auto nn = knn(q, g, k, metric);
      for (int i = 0; i < q.size(); ++i)
        CHECK(nn[static_cast<std::size_t>(i)] == knn_oracle(q, i, g, k, metric, false));
    }
  }
}

TEST_CASE("recall_at_k") {
  SUBCASE("duplicate gallery gives recall@1 = 1") {
    Rng rng(23);
    EmbeddingSet q = random_set(rng, 10, 3, 5);
    EmbeddingSet g = q;
    CHECK(recall_at_k(q, g, 1, DistanceMetric::kEuclidean) == doctest::Approx(1.0));
  }
  SUBCASE("single query against a hand-placed gallery") {
    EmbeddingSet q;
    q.dim = 1;
    q.embeddings = {0.0};
    q.labels = {7};
    EmbeddingSet g;
    g.dim = 1;
    g.embeddings = {0.4, 0.3, 5.0};
    g.labels = {1, 7, 7};
    CHECK(recall_at_k(q, g, 1, DistanceMetric::kEuclidean) == doctest::Approx(1.0));
    EmbeddingSet g2 = g;
    g2.labels = {7, 1, 7};
    CHECK(recall_at_k(q, g2, 1, DistanceMetric::kEuclidean) == doctest::Approx(0.0));
    CHECK(recall_at_k(q, g2, 2, DistanceMetric::kEuclidean) == doctest::Approx(1.0));
  }
  SUBCASE("no same-label item anywhere gives zero for every k") {
    EmbeddingSet q;
    q.dim = 1;
    q.embeddings = {0.0, 1.0};
    q.labels = {0, 1};
    EmbeddingSet g;
    g.dim = 1;
    g.embeddings = {0.1, 0.9};
    g.labels = {2, 3};
    for (int k = 1; k <= 2; ++k)
      CHECK(recall_at_k(q, g, k, DistanceMetric::kEuclidean) == doctest::Approx(0.0));
  }
  SUBCASE("non-decreasing in k; single-set excludes the self match") {
    Rng rng(24);
    EmbeddingSet set = random_set(rng, 30, 3, 4);
    double prev = 0.0;
    for (int k = 1; k < 29; ++k) {
      const double r = recall_at_k(set, k, DistanceMetric::kEuclidean);
      CHECK(r >= prev - 1e-12);
      prev = r;
    }
  }
  SUBCASE("k larger than the gallery") {
    Rng rng(25);
    EmbeddingSet set = random_set(rng, 5, 2, 2);
    CHECK_THROWS_AS(recall_at_k(set, 5, DistanceMetric::kEuclidean), KOutOfRange);
    EmbeddingSet empty;
    empty.dim = 2;
    CHECK_THROWS_AS(recall_at_k(set, empty, 1, DistanceMetric::kEuclidean), EmptyGallery);
  }
}

TEST_CASE("roc_auc") {
  SUBCASE("perfect separation") {
    CHECK(roc_auc({0.9, 0.8, 0.2, 0.1}, {true, true, false, false}) == doctest::Approx(1.0));
  }
  SUBCASE("all ties give one half") {
    CHECK(roc_auc({0.5, 0.5, 0.5, 0.5}, {true, false, true, false}) == doctest::Approx(0.5));
  }
  SUBCASE("pos={0.9,0.4}, neg={0.5,0.1} gives 0.75") {
    CHECK(roc_auc({0.9, 0.4, 0.5, 0.1}, {true, true, false, false}) == doctest::Approx(0.75));
  }
  SUBCASE("needs both classes") {
    CHECK_THROWS_AS(roc_auc({0.1, 0.2}, {true, true}), SingleClass);
  }
  SUBCASE("matches exhaustive pair enumeration on random score sets") {
    Rng rng(26);
    for (int trial = 0; trial < 20; ++trial) {
      const int n = 5 + static_cast<int>(rng.uniform_int(60));
      std::vector<double> scores(static_cast<std::size_t>(n));
      std::vector<bool> is_same(static_cast<std::size_t>(n));
      int pos = 0;
      for (int i = 0; i < n; ++i) {
        // quantized scores so exact ties genuinely occur
        scores[static_cast<std::size_t>(i)] = rng.uniform_int(20) / 10.0;
        is_same[static_cast<std::size_t>(i)] = rng.uniform() < 0.4;
        pos += is_same[static_cast<std::size_t>(i)] ? 1 : 0;
      }
      if (pos == 0) is_same[0] = true;
      if (pos == n) is_same[0] = false;
      CHECK(roc_auc(scores, is_same) ==
            doctest::Approx(auc_oracle(scores, is_same)).epsilon(1e-12));
    }
  }
  SUBCASE("auc(scores) + auc(-scores) = 1 for tie-free scores") {
    Rng rng(27);
    for (int trial = 0; trial < 10; ++trial) {
      const int n = 30;
      std::vector<double> scores(static_cast<std::size_t>(n));
      std::vector<double> neg_scores(static_cast<std::size_t>(n));
      std::vector<bool> is_same(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) {
        scores[static_cast<std::size_t>(i)] = rng.uniform(-5, 5);
        neg_scores[static_cast<std::size_t>(i)] = -scores[static_cast<std::size_t>(i)];
        is_same[static_cast<std::size_t>(i)] = i % 3 == 0;
      }
      CHECK(roc_auc(scores, is_same) + roc_auc(neg_scores, is_same) ==
            doctest::Approx(1.0).epsilon(1e-12));
    }
  }
  SUBCASE("permutation invariance") {
    Rng rng(28);
    std::vector<double> scores{0.9, 0.1, 0.4, 0.7, 0.7, 0.2};
    std::vector<bool> is_same{true, false, false, true, false, true};
    const double base = roc_auc(scores, is_same);
    std::vector<int> perm{3, 0, 5, 1, 4, 2};
    std::vector<double> ps(6);
    std::vector<bool> pl(6);
    for (int i = 0; i < 6; ++i) {
      ps[static_cast<std::size_t>(i)] = scores[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])];
      pl[static_cast<std::size_t>(i)] = is_same[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])];
    }
    CHECK(roc_auc(ps, pl) == doctest::Approx(base).epsilon(1e-15));
  }
}
