// SPDX-License-Identifier: Apache-2.0
#include "reprforge/schedule.hpp"

#include <cmath>
#include <string>

#include "reprforge/errors.hpp"

namespace reprforge {

void ScheduleSpec::validate() const {
  if (kind == ScheduleKind::kConstant) return;
  if (warmup_epochs < 0) throw ValidationError("scheduler.warmup_epochs: must be >= 0");
  if (total_epochs <= warmup_epochs)
    throw ValidationError("scheduler: total_epochs must exceed warmup_epochs");
  if (lr_start < 0.0 || lr_start > lr_peak)
    throw ValidationError("scheduler.lr_start: must satisfy 0 <= lr_start <= lr_peak");
  if (eta_min < 0.0 || eta_min > lr_peak)
    throw ValidationError("scheduler.eta_min: must satisfy 0 <= eta_min <= lr_peak");
}

double lr_at(int epoch, const ScheduleSpec& spec) {
  if (spec.kind == ScheduleKind::kConstant) return spec.lr_peak;
  if (epoch < 0 || epoch > spec.total_epochs)
    throw EpochOutOfRange("lr_at: epoch " + std::to_string(epoch) + " outside [0," +
                          std::to_string(spec.total_epochs) + "]");
  const int w = spec.warmup_epochs;
  if (epoch < w) {
    return spec.lr_start +
           (spec.lr_peak - spec.lr_start) * static_cast<double>(epoch) / static_cast<double>(w);
  }
  const double progress =
      static_cast<double>(epoch - w) / static_cast<double>(spec.total_epochs - w);
  return spec.eta_min +
         (spec.lr_peak - spec.eta_min) * 0.5 * (1.0 + std::cos(3.14159265358979323846 * progress));
}

} // namespace reprforge
