// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "reprforge/tensor.hpp"

namespace reprforge {

enum class OptimKind { kSgd, kAdam, kSam };

std::string optim_kind_name(OptimKind k);
OptimKind optim_kind_from_name(const std::string& name);

/// One named parameter with its group learning-rate multiplier
/// (encoder vs head groups).
struct ParamRef {
  std::string name;
  Tensor tensor;
  double lr_scale = 1.0;
};

/// Hyperparameters shared by the optimizers. `lr` is the base rate the
/// scheduler modulates per epoch.
struct OptimHyper {
  OptimKind kind = OptimKind::kSgd;
  double lr = 0.1;
  double momentum = 0.9;
  double weight_decay = 0.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double sam_rho = 0.05;
  OptimKind sam_base = OptimKind::kSgd;  // sgd or adam
};

/// Per-parameter slot buffers plus the Adam step counter. Keyed by parameter
/// name so the state survives checkpointing by name.
struct OptimState {
  std::map<std::string, std::vector<double>> momentum;       // sgd
  std::map<std::string, std::vector<double>> first_moment;   // adam m
  std::map<std::string, std::vector<double>> second_moment;  // adam v
  std::int64_t step_count = 0;
};

/// v <- beta*v + g + wd*p;  p <- p - lr*v  (per group lr = lr * lr_scale).
void sgd_step(std::vector<ParamRef>& params, OptimState& state, const OptimHyper& hyper,
              double lr);

/// Bias-corrected Adam with coupled weight decay.
void adam_step(std::vector<ParamRef>& params, OptimState& state, const OptimHyper& hyper,
               double lr);

/// Sharpness-aware step: perturb parameters by rho*g/||g|| (single global
/// norm), re-evaluate the loss gradient there via `loss_fn`, restore, then
/// apply the base update with the perturbed gradient. Falls back to the base
/// step when rho is 0 or the gradient norm vanishes.
///
/// `loss_fn` must run forward+backward at the current parameter values and
/// leave fresh gradients on the parameters.
void sam_step(std::vector<ParamRef>& params, const std::function<void()>& loss_fn,
              OptimState& state, const OptimHyper& hyper, double lr);

/// Dispatch on hyper.kind; SAM requires loss_fn, the others ignore it.
void optimizer_step(std::vector<ParamRef>& params, const std::function<void()>& loss_fn,
                    OptimState& state, const OptimHyper& hyper, double lr);

} // namespace reprforge
