// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace reprforge {

struct TensorBlob {
  std::vector<int> shape;
  std::vector<double> data;
};

/// Everything needed to resume a run exactly: the config snapshot, all
/// parameter and optimizer-state tensors, the epoch counter and the RNG
/// state. save -> load -> save is byte-identical.
struct Checkpoint {
  std::string config_yaml;
  int epoch = 0;
  std::uint64_t rng_state = 0;
  std::int64_t optim_step = 0;
  std::map<std::string, TensorBlob> tensors;  // "params/..." and "optim/..."
};

// Binary layout: magic "DORA", u32 version (LE), u64 header length (LE),
// JSON header (config snapshot, epoch, rng state, tensor name -> shape /
// offset / count table), then raw little-endian f64 payloads.
void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

} // namespace reprforge
