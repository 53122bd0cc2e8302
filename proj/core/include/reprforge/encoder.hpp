// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <string>
#include <vector>

#include "reprforge/rng.hpp"
#include "reprforge/tensor.hpp"

namespace reprforge {

enum class EncoderKind { kMlp, kCnn };

/// Backbone description: an MLP over flattened pixels or a tiny CNN
/// ([conv3x3 -> relu -> maxpool2x2] per hidden entry, then flatten -> linear).
struct EncoderConfig {
  EncoderKind kind = EncoderKind::kMlp;
  int in_channels = 1;
  int in_height = 16;
  int in_width = 16;
  std::vector<int> hidden{32};  // layer widths (mlp) or channel counts (cnn)
  int embed_dim = 16;

  void validate() const;
};

/// Named parameter tensors, split into encoder (theta) and head (phi).
/// Iteration order is the map order, which keeps every pass over the
/// parameters deterministic.
struct ModelParams {
  std::map<std::string, Tensor> encoder;
  std::map<std::string, Tensor> head;

  /// Deterministic flat view: encoder entries first, then head entries.
  std::vector<std::pair<std::string, Tensor>> all() const;
};

/// Intermediate activations kept alive for explanation passes.
struct ForwardTrace {
  Tensor last_conv;  // post-ReLU activation of the final conv block (cnn only)
};

/// Initialize all parameters uniform(-sqrt(1/fan_in), +sqrt(1/fan_in)).
/// `head_classes` = 0 builds no head (embedding-only task);
/// `head_bias` adds the affine classifier bias.
ModelParams init_params(const EncoderConfig& cfg, int head_classes, bool head_bias, Rng& rng);

/// z = f_theta(x) for x of shape NxCxHxW; returns Nxembed_dim, unnormalized.
Tensor encode(const EncoderConfig& cfg, const ModelParams& params, const Tensor& x,
              ForwardTrace* trace = nullptr);

/// Affine classifier logits z.W^T + b.
Tensor classify(const ModelParams& params, const Tensor& z);

/// Cosine similarities between L2-normalized embeddings and L2-normalized
/// class-weight rows; values in [-1, 1].
Tensor cosine_logits(const ModelParams& params, const Tensor& z);

/// x.W^T + b for W of shape [out x in], b of shape [out].
Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias);

} // namespace reprforge
