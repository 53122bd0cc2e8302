// SPDX-License-Identifier: Apache-2.0
#pragma once

namespace reprforge {

enum class ScheduleKind { kConstant, kCosineWarmup };

/// Linear warmup from lr_start to lr_peak over [0, warmup_epochs], then
/// cosine annealing from lr_peak down to eta_min at total_epochs.
struct ScheduleSpec {
  ScheduleKind kind = ScheduleKind::kConstant;
  int warmup_epochs = 0;
  int total_epochs = 1;
  double lr_peak = 0.1;
  double lr_start = 0.0;
  double eta_min = 0.0;

  void validate() const;
};

/// Learning rate at an epoch in [0, total_epochs]; exact at the endpoints
/// (lr_start at 0, lr_peak at W, eta_min at T) and continuous at W.
double lr_at(int epoch, const ScheduleSpec& spec);

} // namespace reprforge
