// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "reprforge/rng.hpp"
#include "reprforge/tensor.hpp"

namespace reprforge {

enum class AugKind { kRandomCrop, kHFlip, kColorJitter, kCutout, kMixup };

std::string aug_kind_name(AugKind k);
AugKind aug_kind_from_name(const std::string& name);

struct AugOp {
  AugKind kind = AugKind::kRandomCrop;
  int pad = 2;             // random_crop
  double prob = 0.5;       // hflip
  double max_scale = 0.2;  // color_jitter
  int size = 4;            // cutout
  double fill = 0.0;       // cutout
  double alpha = 0.2;      // mixup Beta(alpha, alpha)
};

/// Ordered augmentation pipeline with curriculum scheduling. With
/// prog_learn the intensity ramps linearly to 1 at aug_epoch; without it the
/// pipeline switches on as a step at aug_epoch.
struct AugmentPlan {
  std::vector<AugOp> ops;
  int aug_epoch = 0;
  bool prog_learn = false;

  void validate(int height, int width) const;
  std::optional<double> mixup_alpha() const;
};

/// Current augmentation intensity in [0,1] for an epoch.
double intensity(int epoch, const AugmentPlan& plan);

// Single-image ops over CxHxW tensors (plain values, no tape).

/// Fill a size x size square centered at (row, col), clipped to the image.
Tensor cutout(const Tensor& img, int center_row, int center_col, int size, double fill);

/// Zero-pad by `pad` then crop back to HxW at a random offset.
Tensor random_crop(const Tensor& img, int pad, Rng& rng);
/// Deterministic variant with an explicit crop offset in [0, 2*pad]^2.
Tensor random_crop_at(const Tensor& img, int pad, int offset_row, int offset_col);

Tensor hflip(const Tensor& img);

/// Per-channel multiplicative scales drawn from [1-max_scale, 1+max_scale],
/// result clamped to the [0,1] pixel range.
Tensor color_jitter(const Tensor& img, double max_scale, Rng& rng);
/// Deterministic variant with explicit per-channel factors.
Tensor scale_channels(const Tensor& img, const std::vector<double>& factors);

/// lambda*x1 + (1-lambda)*x2.
Tensor mixup_images(const Tensor& x1, const Tensor& x2, double lambda);

/// Apply the plan's single-image ops (mixup is batch-level and skipped here)
/// at the given intensity, drawing every random decision from `rng`.
Tensor augment_sample(const Tensor& img, const AugmentPlan& plan, double intensity, Rng& rng);

} // namespace reprforge
