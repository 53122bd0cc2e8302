// SPDX-License-Identifier: Apache-2.0
#include "reprforge/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "reprforge/errors.hpp"

namespace reprforge {

DistanceMetric distance_metric_from_name(const std::string& name) {
  if (name == "euclidean") return DistanceMetric::kEuclidean;
  if (name == "cosine") return DistanceMetric::kCosine;
  throw ValidationError("metric: unknown distance metric '" + name + "'");
}

std::string distance_metric_name(DistanceMetric m) {
  return m == DistanceMetric::kEuclidean ? "euclidean" : "cosine";
}

void EmbeddingSet::validate() const {
  if (labels.empty()) throw EmptyGallery("embedding set is empty");
  if (dim <= 0 || embeddings.size() != labels.size() * static_cast<std::size_t>(dim))
    throw ShapeMismatch("embedding set: " + std::to_string(embeddings.size()) +
                        " values for N=" + std::to_string(labels.size()) +
                        ", dim=" + std::to_string(dim));
  for (double v : embeddings)
    if (std::isnan(v)) throw ShapeMismatch("embedding set contains NaN");
  for (int l : labels)
    if (l < 0) throw ShapeMismatch("embedding set labels must be nonnegative");
}

double topk_accuracy(const std::vector<double>& logits, int rows, int cols,
                     const std::vector<int>& labels, int k) {
  if (k < 1 || k > cols)
    throw KOutOfRange("topk_accuracy: k=" + std::to_string(k) + " outside [1," +
                      std::to_string(cols) + "]");
  if (static_cast<int>(labels.size()) != rows ||
      logits.size() != static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols))
    throw ShapeMismatch("topk_accuracy: inconsistent logits/labels sizes");

  int hits = 0;
  std::vector<int> order(static_cast<std::size_t>(cols));
  for (int r = 0; r < rows; ++r) {
    const double* row = logits.data() + static_cast<std::size_t>(r) * cols;
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      if (row[a] != row[b]) return row[a] > row[b];
      return a < b;
    });
    for (int i = 0; i < k; ++i) {
      if (order[static_cast<std::size_t>(i)] == labels[static_cast<std::size_t>(r)]) {
        ++hits;
        break;
      }
    }
  }
  return static_cast<double>(hits) / rows;
}

namespace {

/// Squared Euclidean or negative cosine over unit-normalized rows, both
/// ascending-is-closer.
double pair_distance(const double* a, const double* b, int d, DistanceMetric metric) {
  if (metric == DistanceMetric::kEuclidean) {
    double acc = 0.0;
    for (int i = 0; i < d; ++i) {
      const double diff = a[i] - b[i];
      acc += diff * diff;
    }
    return acc;
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (int i = 0; i < d; ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const double denom = std::max(std::sqrt(na) * std::sqrt(nb), 1e-12);
  return -dot / denom;
}

} // namespace

std::vector<std::vector<int>> knn(const EmbeddingSet& queries, const EmbeddingSet& gallery,
                                  int k, DistanceMetric metric, bool self_exclude) {
  queries.validate();
  gallery.validate();
  if (queries.dim != gallery.dim)
    throw ShapeMismatch("knn: query dim " + std::to_string(queries.dim) + " vs gallery dim " +
                        std::to_string(gallery.dim));
  const int candidates = gallery.size() - (self_exclude ? 1 : 0);
  if (k < 1 || k > candidates)
    throw KOutOfRange("knn: k=" + std::to_string(k) + " outside [1," +
                      std::to_string(candidates) + "]");

  std::vector<std::vector<int>> result(static_cast<std::size_t>(queries.size()));
  std::vector<int> order;
  for (int q = 0; q < queries.size(); ++q) {
    const double* qv = queries.embeddings.data() + static_cast<std::size_t>(q) * queries.dim;
    std::vector<double> dist(static_cast<std::size_t>(gallery.size()));
    order.clear();
    for (int j = 0; j < gallery.size(); ++j) {
      if (self_exclude && j == q) continue;
      dist[static_cast<std::size_t>(j)] = pair_distance(
          qv, gallery.embeddings.data() + static_cast<std::size_t>(j) * gallery.dim,
          gallery.dim, metric);
      order.push_back(j);
    }
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      if (dist[static_cast<std::size_t>(a)] != dist[static_cast<std::size_t>(b)])
        return dist[static_cast<std::size_t>(a)] < dist[static_cast<std::size_t>(b)];
      return a < b;
    });
    order.resize(static_cast<std::size_t>(k));
    result[static_cast<std::size_t>(q)] = order;
  }
  return result;
}

double recall_at_k(const EmbeddingSet& queries, const EmbeddingSet& gallery, int k,
                   DistanceMetric metric) {
  const auto neighbors = knn(queries, gallery, k, metric, /*self_exclude=*/false);
  int hits = 0;
  for (int q = 0; q < queries.size(); ++q) {
    for (int j : neighbors[static_cast<std::size_t>(q)]) {
      if (gallery.labels[static_cast<std::size_t>(j)] ==
          queries.labels[static_cast<std::size_t>(q)]) {
        ++hits;
        break;
      }
    }
  }
  return static_cast<double>(hits) / queries.size();
}

double recall_at_k(const EmbeddingSet& set, int k, DistanceMetric metric) {
  const auto neighbors = knn(set, set, k, metric, /*self_exclude=*/true);
  int hits = 0;
  for (int q = 0; q < set.size(); ++q) {
    for (int j : neighbors[static_cast<std::size_t>(q)]) {
      if (set.labels[static_cast<std::size_t>(j)] == set.labels[static_cast<std::size_t>(q)]) {
        ++hits;
        break;
      }
    }
  }
  return static_cast<double>(hits) / set.size();
}

double roc_auc(const std::vector<double>& scores, const std::vector<bool>& is_same) {
  if (scores.size() != is_same.size())
    throw ShapeMismatch("roc_auc: scores/labels size mismatch");
  std::size_t n_pos = 0;
  for (bool b : is_same) n_pos += b ? 1 : 0;
  const std::size_t n_neg = scores.size() - n_pos;
  if (n_pos == 0 || n_neg == 0)
    throw SingleClass("roc_auc: needs at least one positive and one negative pair");

  // Rank-sum estimator with average ranks over ties; equals the exhaustive
  // pairwise count with the 1/2 tie convention.
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  double pos_rank_sum = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
    for (std::size_t t = i; t <= j; ++t)
      if (is_same[order[t]]) pos_rank_sum += avg_rank;
    i = j + 1;
  }
  const double np = static_cast<double>(n_pos);
  const double nn = static_cast<double>(n_neg);
  return (pos_rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

} // namespace reprforge
