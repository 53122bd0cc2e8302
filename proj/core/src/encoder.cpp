// SPDX-License-Identifier: Apache-2.0
#include "reprforge/encoder.hpp"

#include <cmath>

#include "reprforge/errors.hpp"

namespace reprforge {

namespace {

Tensor uniform_tensor(std::vector<int> shape, double bound, Rng& rng) {
  std::int64_t n = 1;
  for (int e : shape) n *= e;
  std::vector<double> data(static_cast<std::size_t>(n));
  for (auto& v : data) v = rng.uniform(-bound, bound);
  return Tensor::from_data(std::move(shape), std::move(data), true);
}

std::string layer_name(const char* stem, int i, const char* leaf) {
  return std::string(stem) + std::to_string(i) + "." + leaf;
}

} // namespace

void EncoderConfig::validate() const {
  if (embed_dim < 2) throw ValidationError("model.embed_dim: must be >= 2");
  if (hidden.empty()) throw ValidationError("model.hidden: must be non-empty");
  for (int h : hidden)
    if (h < 1) throw ValidationError("model.hidden: entries must be >= 1");
  if (in_channels < 1 || in_height < 1 || in_width < 1)
    throw ValidationError("model.input: extents must be positive");
  if (kind == EncoderKind::kCnn) {
    int h = in_height, w = in_width;
    for (std::size_t i = 0; i < hidden.size(); ++i) {
      h /= 2;
      w /= 2;
      if (h == 0 || w == 0)
        throw ValidationError("model.hidden: too many conv blocks for input " +
                              std::to_string(in_height) + "x" + std::to_string(in_width));
    }
  }
}

std::vector<std::pair<std::string, Tensor>> ModelParams::all() const {
  std::vector<std::pair<std::string, Tensor>> out;
  out.reserve(encoder.size() + head.size());
  for (const auto& [name, t] : encoder) out.emplace_back("encoder/" + name, t);
  for (const auto& [name, t] : head) out.emplace_back("head/" + name, t);
  return out;
}

ModelParams init_params(const EncoderConfig& cfg, int head_classes, bool head_bias, Rng& rng) {
  cfg.validate();
  ModelParams p;
  if (cfg.kind == EncoderKind::kMlp) {
    int in = cfg.in_channels * cfg.in_height * cfg.in_width;
    for (std::size_t i = 0; i < cfg.hidden.size(); ++i) {
      const int out = cfg.hidden[i];
      const double bound = std::sqrt(1.0 / in);
      p.encoder[layer_name("fc", static_cast<int>(i), "weight")] =
          uniform_tensor({out, in}, bound, rng);
      p.encoder[layer_name("fc", static_cast<int>(i), "bias")] =
          uniform_tensor({out}, bound, rng);
      in = out;
    }
    const double bound = std::sqrt(1.0 / in);
    p.encoder["out.weight"] = uniform_tensor({cfg.embed_dim, in}, bound, rng);
    p.encoder["out.bias"] = uniform_tensor({cfg.embed_dim}, bound, rng);
  } else {
    int c = cfg.in_channels;
    int h = cfg.in_height, w = cfg.in_width;
    for (std::size_t i = 0; i < cfg.hidden.size(); ++i) {
      const int f = cfg.hidden[i];
      const double bound = std::sqrt(1.0 / (c * 3 * 3));
      p.encoder[layer_name("conv", static_cast<int>(i), "weight")] =
          uniform_tensor({f, c, 3, 3}, bound, rng);
      c = f;
      h /= 2;
      w /= 2;
    }
    const int flat = c * h * w;
    const double bound = std::sqrt(1.0 / flat);
    p.encoder["out.weight"] = uniform_tensor({cfg.embed_dim, flat}, bound, rng);
    p.encoder["out.bias"] = uniform_tensor({cfg.embed_dim}, bound, rng);
  }
  if (head_classes > 0) {
    const double bound = std::sqrt(1.0 / cfg.embed_dim);
    p.head["weight"] = uniform_tensor({head_classes, cfg.embed_dim}, bound, rng);
    if (head_bias) p.head["bias"] = uniform_tensor({head_classes}, bound, rng);
  }
  return p;
}

Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  Tensor y = matmul_nt(x, weight);
  // Bias broadcast composed as ones[Nx1] . b[1xC].
  Tensor ones = Tensor::full({y.dim(0), 1}, 1.0);
  return add(y, matmul(ones, reshape(bias, {1, bias.dim(0)})));
}

Tensor encode(const EncoderConfig& cfg, const ModelParams& params, const Tensor& x,
              ForwardTrace* trace) {
  if (x.rank() != 4)
    throw ShapeMismatch("encode: expected NxCxHxW input, got " + shape_to_string(x.shape()));
  if (x.dim(1) != cfg.in_channels || x.dim(2) != cfg.in_height || x.dim(3) != cfg.in_width)
    throw ShapeMismatch("encode: input " + shape_to_string(x.shape()) + " does not match model " +
                        std::to_string(cfg.in_channels) + "x" + std::to_string(cfg.in_height) +
                        "x" + std::to_string(cfg.in_width));
  const int n = x.dim(0);

  if (cfg.kind == EncoderKind::kMlp) {
    Tensor h = reshape(x, {n, cfg.in_channels * cfg.in_height * cfg.in_width});
    for (std::size_t i = 0; i < cfg.hidden.size(); ++i) {
      const auto& w = params.encoder.at(layer_name("fc", static_cast<int>(i), "weight"));
      const auto& b = params.encoder.at(layer_name("fc", static_cast<int>(i), "bias"));
      h = relu(linear(h, w, b));
    }
    return linear(h, params.encoder.at("out.weight"), params.encoder.at("out.bias"));
  }

  Tensor h = x;
  for (std::size_t i = 0; i < cfg.hidden.size(); ++i) {
    const auto& k = params.encoder.at(layer_name("conv", static_cast<int>(i), "weight"));
    h = relu(conv2d(h, k, /*stride=*/1, /*pad=*/1));
    if (trace && i + 1 == cfg.hidden.size()) trace->last_conv = h;
    h = maxpool2x2(h);
  }
  Tensor flat = reshape(h, {n, static_cast<int>(h.numel() / n)});
  return linear(flat, params.encoder.at("out.weight"), params.encoder.at("out.bias"));
}

Tensor classify(const ModelParams& params, const Tensor& z) {
  const auto& w = params.head.at("weight");
  if (z.rank() != 2 || z.dim(1) != w.dim(1))
    throw ShapeMismatch("classify: embedding " + shape_to_string(z.shape()) +
                        " vs head weight " + shape_to_string(w.shape()));
  auto it = params.head.find("bias");
  if (it == params.head.end()) return matmul_nt(z, w);
  return linear(z, w, it->second);
}

Tensor cosine_logits(const ModelParams& params, const Tensor& z) {
  const auto& w = params.head.at("weight");
  if (z.rank() != 2 || z.dim(1) != w.dim(1))
    throw ShapeMismatch("cosine_logits: embedding " + shape_to_string(z.shape()) +
                        " vs head weight " + shape_to_string(w.shape()));
  return matmul_nt(l2_normalize(z), l2_normalize(w));
}

} // namespace reprforge
