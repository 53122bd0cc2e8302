// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "reprforge/checkpoint.hpp"
#include "reprforge/config.hpp"
#include "reprforge/metrics_log.hpp"

namespace reprforge {

struct TrainOptions {
  const Checkpoint* resume = nullptr;
  std::string out_dir;  // when set: stream metrics.jsonl + write checkpoints
};

struct TrainOutput {
  Checkpoint checkpoint;
  std::vector<MetricRecord> records;
};

/// Run the configured pipeline: per epoch compute the augmentation
/// intensity, build batches, forward encoder -> head, apply the configured
/// loss (with OHEM/MixUp wrappers), step the optimizer at lr_at(epoch), and
/// record metrics. Deterministic for a fixed (config, seed).
TrainOutput train_run(const RunConfig& cfg, const TrainOptions& opts = {});

/// Metrics of a checkpointed model on "train" or "val".
std::vector<MetricRecord> evaluate(const RunConfig& cfg, const Checkpoint& ckpt,
                                   const std::string& split);

/// Rebuild ModelParams (requires_grad leaves) from a checkpoint snapshot.
ModelParams params_from_checkpoint(const Checkpoint& ckpt);

/// Snapshot of params/optimizer state into a checkpoint (config attached).
Checkpoint make_checkpoint(const RunConfig& cfg, const ModelParams& params,
                           const OptimState& optim, int epoch, std::uint64_t rng_state);

} // namespace reprforge
