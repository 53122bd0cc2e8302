// SPDX-License-Identifier: Apache-2.0
#include "reprforge/gradcam.hpp"

#include <algorithm>
#include <cmath>

#include "reprforge/errors.hpp"
#include "reprforge/image_io.hpp"
#include "reprforge/trainer.hpp"

namespace reprforge {

std::vector<double> bilinear_upsample(const std::vector<double>& src, int src_h, int src_w,
                                      int dst_h, int dst_w) {
  std::vector<double> out(static_cast<std::size_t>(dst_h) * dst_w);
  const double sy = static_cast<double>(src_h) / dst_h;
  const double sx = static_cast<double>(src_w) / dst_w;
  for (int y = 0; y < dst_h; ++y) {
    // half-pixel centers
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, static_cast<double>(src_h - 1));
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, src_h - 1);
    const double wy = fy - y0;
    for (int x = 0; x < dst_w; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, static_cast<double>(src_w - 1));
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, src_w - 1);
      const double wx = fx - x0;
      const double top = src[static_cast<std::size_t>(y0 * src_w + x0)] * (1.0 - wx) +
                         src[static_cast<std::size_t>(y0 * src_w + x1)] * wx;
      const double bot = src[static_cast<std::size_t>(y1 * src_w + x0)] * (1.0 - wx) +
                         src[static_cast<std::size_t>(y1 * src_w + x1)] * wx;
      out[static_cast<std::size_t>(y * dst_w + x)] = top * (1.0 - wy) + bot * wy;
    }
  }
  return out;
}

Heatmap gradcam(const RunConfig& cfg, const ModelParams& params, const Tensor& image_chw,
                int target_class) {
  if (cfg.model.kind != EncoderKind::kCnn)
    throw WrongEncoderKind("gradcam: the mlp encoder has no spatial layer");
  if (image_chw.rank() != 3)
    throw ShapeMismatch("gradcam: expected CxHxW image, got " +
                        shape_to_string(image_chw.shape()));

  const auto& head_w = params.head.at("weight");
  const int num_classes = head_w.dim(0);
  if (target_class < 0 || target_class >= num_classes)
    throw ClassOutOfRange("gradcam: class " + std::to_string(target_class) + " outside [0," +
                          std::to_string(num_classes) + ")");

  const int h = image_chw.dim(1), w = image_chw.dim(2);
  Tensor x = reshape(image_chw.detached_copy(), {1, image_chw.dim(0), h, w});

  ForwardTrace trace;
  Tensor z = encode(cfg.model, params, x, &trace);
  // Raw logit as the class score; softmax would couple in the other classes.
  Tensor logits = params.head.count("bias") ? classify(params, z) : cosine_logits(params, z);
  Tensor score = gather(logits, {target_class});
  backward(score);

  const Tensor& act = trace.last_conv;  // 1 x F x h' x w'
  const int f = act.dim(1), fh = act.dim(2), fw = act.dim(3);
  const auto av = act.values();
  const auto gv = act.grad();

  // Channel weights: spatial mean of the gradients.
  std::vector<double> cam(static_cast<std::size_t>(fh) * fw, 0.0);
  for (int c = 0; c < f; ++c) {
    double weight = 0.0;
    const std::size_t base = static_cast<std::size_t>(c) * fh * fw;
    for (int i = 0; i < fh * fw; ++i) weight += gv[base + static_cast<std::size_t>(i)];
    weight /= fh * fw;
    for (int i = 0; i < fh * fw; ++i)
      cam[static_cast<std::size_t>(i)] += weight * av[base + static_cast<std::size_t>(i)];
  }
  for (auto& v : cam) v = std::max(v, 0.0);

  Heatmap hm;
  hm.height = h;
  hm.width = w;
  hm.target_class = target_class;
  hm.layer = "conv" + std::to_string(cfg.model.hidden.size() - 1) + ".relu";
  hm.values = bilinear_upsample(cam, fh, fw, h, w);
  double mx = 0.0;
  for (double v : hm.values) mx = std::max(mx, v);
  if (mx > 0.0)
    for (auto& v : hm.values) v /= mx;
  return hm;
}

Heatmap gradcam(const Checkpoint& ckpt, const Tensor& image_chw, int target_class) {
  const RunConfig cfg = parse_config(ckpt.config_yaml);
  const ModelParams params = params_from_checkpoint(ckpt);
  return gradcam(cfg, params, image_chw, target_class);
}

void render_heatmap(const Heatmap& hm, const Tensor& image_chw, const std::string& out_path) {
  if (image_chw.rank() != 3 || image_chw.dim(1) != hm.height || image_chw.dim(2) != hm.width)
    throw ShapeMismatch("render_heatmap: image " + shape_to_string(image_chw.shape()) +
                        " vs heatmap " + std::to_string(hm.height) + "x" +
                        std::to_string(hm.width));
  const int c = image_chw.dim(0), h = hm.height, w = hm.width;
  const auto px = image_chw.values();

  // jet-style colormap
  const auto colormap = [](double v, double* rgb) {
    rgb[0] = std::clamp(1.5 - std::abs(4.0 * v - 3.0), 0.0, 1.0);
    rgb[1] = std::clamp(1.5 - std::abs(4.0 * v - 2.0), 0.0, 1.0);
    rgb[2] = std::clamp(1.5 - std::abs(4.0 * v - 1.0), 0.0, 1.0);
  };

  std::vector<double> rgb_chw(static_cast<std::size_t>(3) * h * w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double base[3];
      if (c >= 3) {
        for (int ch = 0; ch < 3; ++ch)
          base[ch] = px[static_cast<std::size_t>((ch * h + y) * w + x)];
      } else {
        const double g = px[static_cast<std::size_t>(y * w + x)];
        base[0] = base[1] = base[2] = g;
      }
      const double v = hm.values[static_cast<std::size_t>(y * w + x)];
      double overlay[3];
      colormap(v, overlay);
      const double a = 0.5 * v;  // zero heat keeps the input pixel
      for (int ch = 0; ch < 3; ++ch)
        rgb_chw[static_cast<std::size_t>((ch * h + y) * w + x)] =
            (1.0 - a) * base[ch] + a * overlay[ch];
    }
  }
  write_png(out_path, to_u8(rgb_chw, 3, h, w));
}

} // namespace reprforge
