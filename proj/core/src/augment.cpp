// SPDX-License-Identifier: Apache-2.0
#include "reprforge/augment.hpp"

#include <algorithm>
#include <cmath>

#include "reprforge/errors.hpp"

namespace reprforge {

namespace {

struct ImageDims {
  int c, h, w;
};

ImageDims image_dims(const Tensor& img) {
  if (img.rank() != 3)
    throw ShapeMismatch("augment: expected CxHxW image, got " + shape_to_string(img.shape()));
  return {img.dim(0), img.dim(1), img.dim(2)};
}

} // namespace

std::string aug_kind_name(AugKind k) {
  switch (k) {
    case AugKind::kRandomCrop: return "random_crop";
    case AugKind::kHFlip: return "hflip";
    case AugKind::kColorJitter: return "color_jitter";
    case AugKind::kCutout: return "cutout";
    case AugKind::kMixup: return "mixup";
  }
  return "?";
}

AugKind aug_kind_from_name(const std::string& name) {
  if (name == "random_crop") return AugKind::kRandomCrop;
  if (name == "hflip") return AugKind::kHFlip;
  if (name == "color_jitter") return AugKind::kColorJitter;
  if (name == "cutout") return AugKind::kCutout;
  if (name == "mixup") return AugKind::kMixup;
  throw ValidationError("augment.ops: unknown op '" + name + "'");
}

void AugmentPlan::validate(int height, int width) const {
  if (aug_epoch < 0) throw ValidationError("augment.aug_epoch: must be >= 0");
  int mixups = 0;
  for (const auto& op : ops) {
    switch (op.kind) {
      case AugKind::kRandomCrop:
        if (op.pad < 0) throw ValidationError("augment.ops.random_crop.pad: must be >= 0");
        break;
      case AugKind::kHFlip:
        if (op.prob < 0.0 || op.prob > 1.0)
          throw ValidationError("augment.ops.hflip.prob: must be in [0,1]");
        break;
      case AugKind::kColorJitter:
        if (op.max_scale < 0.0)
          throw ValidationError("augment.ops.color_jitter.max_scale: must be >= 0");
        break;
      case AugKind::kCutout:
        if (op.size < 0) throw ValidationError("augment.ops.cutout.size: must be >= 0");
        if (op.size > std::min(height, width))
          throw ValidationError("augment.ops.cutout.size: exceeds min(H,W)");
        break;
      case AugKind::kMixup:
        if (op.alpha <= 0.0) throw ValidationError("augment.ops.mixup.alpha: must be > 0");
        if (++mixups > 1) throw ValidationError("augment.ops: duplicate mixup entry");
        break;
    }
  }
}

std::optional<double> AugmentPlan::mixup_alpha() const {
  for (const auto& op : ops)
    if (op.kind == AugKind::kMixup) return op.alpha;
  return std::nullopt;
}

double intensity(int epoch, const AugmentPlan& plan) {
  if (epoch < 0) throw ValidationError("intensity: epoch must be >= 0");
  if (plan.prog_learn) {
    if (plan.aug_epoch == 0) return 1.0;
    return std::min(1.0, static_cast<double>(epoch) / static_cast<double>(plan.aug_epoch));
  }
  return epoch >= plan.aug_epoch ? 1.0 : 0.0;
}

Tensor cutout(const Tensor& img, int center_row, int center_col, int size, double fill) {
  const auto [c, h, w] = image_dims(img);
  if (size < 0) throw ValidationError("cutout: size must be >= 0");
  std::vector<double> out(img.values().begin(), img.values().end());
  if (size == 0) return Tensor::from_data(img.shape(), std::move(out));

  const int r0 = std::max(0, center_row - size / 2);
  const int r1 = std::min(h, center_row - size / 2 + size);
  const int c0 = std::max(0, center_col - size / 2);
  const int c1 = std::min(w, center_col - size / 2 + size);
  for (int ch = 0; ch < c; ++ch)
    for (int y = r0; y < r1; ++y)
      for (int x = c0; x < c1; ++x)
        out[static_cast<std::size_t>((ch * h + y) * w + x)] = fill;
  return Tensor::from_data(img.shape(), std::move(out));
}

Tensor random_crop_at(const Tensor& img, int pad, int offset_row, int offset_col) {
  const auto [c, h, w] = image_dims(img);
  if (pad < 0) throw ValidationError("random_crop: pad must be >= 0");
  if (pad == 0) return img.detached_copy();
  std::vector<double> out(static_cast<std::size_t>(c) * h * w, 0.0);
  const auto src = img.values();
  // Source pixel (y,x) of the padded image sits at (y+pad, x+pad); the crop
  // window starts at (offset_row, offset_col).
  for (int ch = 0; ch < c; ++ch) {
    for (int y = 0; y < h; ++y) {
      const int sy = y + offset_row - pad;
      if (sy < 0 || sy >= h) continue;
      for (int x = 0; x < w; ++x) {
        const int sx = x + offset_col - pad;
        if (sx < 0 || sx >= w) continue;
        out[static_cast<std::size_t>((ch * h + y) * w + x)] =
            src[static_cast<std::size_t>((ch * h + sy) * w + sx)];
      }
    }
  }
  return Tensor::from_data(img.shape(), std::move(out));
}

Tensor random_crop(const Tensor& img, int pad, Rng& rng) {
  const int offset_row = static_cast<int>(rng.uniform_int(2 * pad + 1));
  const int offset_col = static_cast<int>(rng.uniform_int(2 * pad + 1));
  return random_crop_at(img, pad, offset_row, offset_col);
}

Tensor hflip(const Tensor& img) {
  const auto [c, h, w] = image_dims(img);
  std::vector<double> out(static_cast<std::size_t>(c) * h * w);
  const auto src = img.values();
  for (int ch = 0; ch < c; ++ch)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        out[static_cast<std::size_t>((ch * h + y) * w + x)] =
            src[static_cast<std::size_t>((ch * h + y) * w + (w - 1 - x))];
  return Tensor::from_data(img.shape(), std::move(out));
}

Tensor scale_channels(const Tensor& img, const std::vector<double>& factors) {
  const auto [c, h, w] = image_dims(img);
  if (static_cast<int>(factors.size()) != c)
    throw ShapeMismatch("scale_channels: " + std::to_string(factors.size()) +
                        " factors for " + std::to_string(c) + " channels");
  std::vector<double> out(static_cast<std::size_t>(c) * h * w);
  const auto src = img.values();
  for (int ch = 0; ch < c; ++ch) {
    const double f = factors[static_cast<std::size_t>(ch)];
    for (int i = 0; i < h * w; ++i) {
      const std::size_t idx = static_cast<std::size_t>(ch * h * w + i);
      out[idx] = std::clamp(src[idx] * f, 0.0, 1.0);
    }
  }
  return Tensor::from_data(img.shape(), std::move(out));
}

Tensor color_jitter(const Tensor& img, double max_scale, Rng& rng) {
  const auto dims = image_dims(img);
  std::vector<double> factors(static_cast<std::size_t>(dims.c));
  for (auto& f : factors) f = rng.uniform(1.0 - max_scale, 1.0 + max_scale);
  return scale_channels(img, factors);
}

Tensor mixup_images(const Tensor& x1, const Tensor& x2, double lambda) {
  if (x1.shape() != x2.shape())
    throw ShapeMismatch("mixup_images: " + shape_to_string(x1.shape()) + " vs " +
                        shape_to_string(x2.shape()));
  if (lambda < 0.0 || lambda > 1.0)
    throw ValidationError("mixup_images: lambda must be in [0,1]");
  const auto a = x1.values();
  const auto b = x2.values();
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = lambda * a[i] + (1.0 - lambda) * b[i];
  return Tensor::from_data(x1.shape(), std::move(out));
}

Tensor augment_sample(const Tensor& img, const AugmentPlan& plan, double intensity, Rng& rng) {
  const auto dims = image_dims(img);
  Tensor out = img;
  for (const auto& op : plan.ops) {
    switch (op.kind) {
      case AugKind::kRandomCrop: {
        const int pad = static_cast<int>(std::lround(op.pad * intensity));
        out = random_crop(out, pad, rng);
        break;
      }
      case AugKind::kHFlip: {
        const double u = rng.uniform();
        if (u < op.prob * intensity) out = hflip(out);
        break;
      }
      case AugKind::kColorJitter:
        out = color_jitter(out, op.max_scale * intensity, rng);
        break;
      case AugKind::kCutout: {
        const int size = static_cast<int>(std::lround(op.size * intensity));
        const int row = static_cast<int>(rng.uniform_int(dims.h));
        const int col = static_cast<int>(rng.uniform_int(dims.w));
        out = cutout(out, row, col, size, op.fill);
        break;
      }
      case AugKind::kMixup:
        break;  // batch-level, handled by the trainer
    }
  }
  return out;
}

} // namespace reprforge
