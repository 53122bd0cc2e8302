// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

namespace reprforge {

enum class DistanceMetric { kEuclidean, kCosine };

DistanceMetric distance_metric_from_name(const std::string& name);
std::string distance_metric_name(DistanceMetric m);

/// Embeddings with their identity/class labels. `role` only documents how a
/// set participates in retrieval; a single-set evaluation excludes the
/// self-match.
struct EmbeddingSet {
  int dim = 0;
  std::vector<double> embeddings;  // row-major N x dim
  std::vector<int> labels;

  int size() const { return static_cast<int>(labels.size()); }
  void validate() const;
};

/// Fraction of rows whose true label is among the k largest logits.
/// Ties rank the lower class index first.
double topk_accuracy(const std::vector<double>& logits, int rows, int cols,
                     const std::vector<int>& labels, int k);

/// Exact brute-force k nearest neighbors, ascending distance, ties broken by
/// lower gallery index. `self_exclude` skips gallery[j == query index]
/// (same-set retrieval).
std::vector<std::vector<int>> knn(const EmbeddingSet& queries, const EmbeddingSet& gallery,
                                  int k, DistanceMetric metric, bool self_exclude = false);

/// Fraction of queries with at least one same-label gallery item among the
/// k nearest neighbors.
double recall_at_k(const EmbeddingSet& queries, const EmbeddingSet& gallery, int k,
                   DistanceMetric metric);
/// Same-set variant: every sample queries the rest of the set.
double recall_at_k(const EmbeddingSet& set, int k, DistanceMetric metric);

/// Mann-Whitney AUC: P(score_pos > score_neg) + 0.5 P(tie). Computed via
/// average ranks; the exhaustive pair enumeration lives in the test oracle.
double roc_auc(const std::vector<double>& scores, const std::vector<bool>& is_same);

} // namespace reprforge
