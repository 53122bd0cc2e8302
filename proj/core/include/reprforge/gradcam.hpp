// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "reprforge/checkpoint.hpp"
#include "reprforge/config.hpp"
#include "reprforge/encoder.hpp"

namespace reprforge {

/// Saliency map over the input grid: nonnegative, max-normalized to 1 unless
/// all-zero.
struct Heatmap {
  int height = 0;
  int width = 0;
  std::vector<double> values;  // H x W in [0,1]
  int target_class = 0;
  std::string layer;  // identifier of the conv feature map used
};

/// Channel weights are the spatially averaged gradients of the raw class
/// logit w.r.t. the last conv activation; the map is the ReLU of the
/// weighted channel sum, bilinearly upsampled to the input resolution.
Heatmap gradcam(const RunConfig& cfg, const ModelParams& params, const Tensor& image_chw,
                int target_class);

/// Convenience overload over a checkpoint (config snapshot + tensors).
Heatmap gradcam(const Checkpoint& ckpt, const Tensor& image_chw, int target_class);

/// Blend the input with a color-mapped heatmap at alpha 0.5 and write a PNG.
/// An all-zero map reproduces the input image.
void render_heatmap(const Heatmap& hm, const Tensor& image_chw, const std::string& out_path);

std::vector<double> bilinear_upsample(const std::vector<double>& src, int src_h, int src_w,
                                      int dst_h, int dst_w);

} // namespace reprforge
