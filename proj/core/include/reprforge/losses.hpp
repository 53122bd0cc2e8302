// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "reprforge/tensor.hpp"

namespace reprforge {

enum class LossKind { kCrossEntropy, kFocal, kTriplet, kArcFace, kCircle, kMagFace };

std::string loss_kind_name(LossKind k);
LossKind loss_kind_from_name(const std::string& name);

/// Feature-magnitude bounds for the adaptive margin m(a): linear
/// interpolation from lower_margin at lower_norm to upper_margin at
/// upper_norm, with a clamped into the norm interval.
struct MagBounds {
  double lower_norm = 10.0;
  double upper_norm = 110.0;
  double lower_margin = 0.45;
  double upper_margin = 0.8;
};

/// Declarative loss selection plus every tunable the objectives expose.
struct LossSpec {
  LossKind name = LossKind::kCrossEntropy;
  double eps_smooth = 0.0;      // label smoothing for ce
  double gamma = 2.0;           // focal focusing exponent
  double margin = 0.3;          // triplet margin alpha
  double scale = 64.0;          // angular scale s
  double angular_margin = 0.5;  // additive angular margin m
  double circle_m = 0.25;
  double circle_gamma = 256.0;
  MagBounds mag;
  double mag_lambda_g = 20.0;
  std::optional<double> ohem_ratio;   // fraction in (0,1]
  std::optional<double> mixup_alpha;  // Beta(alpha, alpha) for lambda

  void validate() const;  // throws ValidationError with a "loss.<key>" path
};

// Every loss comes in a per-sample form (one value per anchor/sample, used by
// the OHEM wrapper) and the scalar batch mean the trainer optimizes.

Tensor cross_entropy_rows(const Tensor& logits, const std::vector<int>& labels,
                          double eps_smooth);
Tensor cross_entropy(const Tensor& logits, const std::vector<int>& labels, double eps_smooth);

/// Mean cross-entropy against explicit soft target rows (MixUp path).
Tensor cross_entropy_soft(const Tensor& logits, const Tensor& soft_targets);

Tensor focal_rows(const Tensor& logits, const std::vector<int>& labels, double gamma);
Tensor focal(const Tensor& logits, const std::vector<int>& labels, double gamma);

/// Batch-hard mining: per anchor the farthest positive and nearest negative
/// by squared Euclidean distance, then mean hinge with margin alpha.
Tensor triplet_batch_hard_rows(const Tensor& z, const std::vector<int>& ids, double alpha);
Tensor triplet_batch_hard(const Tensor& z, const std::vector<int>& ids, double alpha);

Tensor arcface_rows(const Tensor& cosines, const std::vector<int>& labels, double s, double m);
Tensor arcface(const Tensor& cosines, const std::vector<int>& labels, double s, double m);

/// Unified pair form over positive/negative similarity vectors.
Tensor circle(const Tensor& sim_pos, const Tensor& sim_neg, double m, double gamma);

Tensor magface_rows(const Tensor& cosines, const std::vector<int>& labels,
                    const Tensor& feat_norms, double s, const MagBounds& bounds,
                    double lambda_g);
Tensor magface(const Tensor& cosines, const std::vector<int>& labels, const Tensor& feat_norms,
               double s, const MagBounds& bounds, double lambda_g);

/// Mean of the ceil(ratio*N) largest per-sample losses; gradient flows only
/// through the selected samples.
Tensor ohem_filter(const Tensor& per_sample_losses, double ratio);

/// lambda*y1 + (1-lambda)*y2 over one-hot (or soft) target rows.
std::vector<double> mixup_targets(const std::vector<double>& y1, const std::vector<double>& y2,
                                  double lambda);

} // namespace reprforge
