// SPDX-License-Identifier: Apache-2.0
#include "reprforge/optim.hpp"

#include <cmath>

#include "reprforge/errors.hpp"

namespace reprforge {

namespace {

std::span<const double> grad_of(const ParamRef& p) {
  if (!p.tensor.has_grad())
    throw MissingGrad("optimizer: parameter '" + p.name + "' has no gradient");
  return p.tensor.grad();
}

std::vector<double>& slot(std::map<std::string, std::vector<double>>& slots,
                          const ParamRef& p) {
  auto [it, inserted] = slots.try_emplace(p.name);
  if (inserted) it->second.assign(static_cast<std::size_t>(p.tensor.numel()), 0.0);
  return it->second;
}

} // namespace

std::string optim_kind_name(OptimKind k) {
  switch (k) {
    case OptimKind::kSgd: return "sgd";
    case OptimKind::kAdam: return "adam";
    case OptimKind::kSam: return "sam";
  }
  return "?";
}

OptimKind optim_kind_from_name(const std::string& name) {
  if (name == "sgd") return OptimKind::kSgd;
  if (name == "adam") return OptimKind::kAdam;
  if (name == "sam") return OptimKind::kSam;
  throw ValidationError("optimizer.name: unknown optimizer '" + name + "'");
}

void sgd_step(std::vector<ParamRef>& params, OptimState& state, const OptimHyper& hyper,
              double lr) {
  for (auto& p : params) {
    const auto g = grad_of(p);
    auto& v = slot(state.momentum, p);
    auto pv = p.tensor.values_mut();
    const double step_lr = lr * p.lr_scale;
    for (std::size_t i = 0; i < pv.size(); ++i) {
      v[i] = hyper.momentum * v[i] + g[i] + hyper.weight_decay * pv[i];
      pv[i] -= step_lr * v[i];
    }
  }
}

void adam_step(std::vector<ParamRef>& params, OptimState& state, const OptimHyper& hyper,
               double lr) {
  state.step_count += 1;
  const double t = static_cast<double>(state.step_count);
  const double bc1 = 1.0 - std::pow(hyper.beta1, t);
  const double bc2 = 1.0 - std::pow(hyper.beta2, t);
  for (auto& p : params) {
    const auto g = grad_of(p);
    auto& m = slot(state.first_moment, p);
    auto& v = slot(state.second_moment, p);
    auto pv = p.tensor.values_mut();
    const double step_lr = lr * p.lr_scale;
    for (std::size_t i = 0; i < pv.size(); ++i) {
      const double gi = g[i] + hyper.weight_decay * pv[i];
      m[i] = hyper.beta1 * m[i] + (1.0 - hyper.beta1) * gi;
      v[i] = hyper.beta2 * v[i] + (1.0 - hyper.beta2) * gi * gi;
      const double m_hat = m[i] / bc1;
      const double v_hat = v[i] / bc2;
      pv[i] -= step_lr * m_hat / (std::sqrt(v_hat) + hyper.eps);
    }
  }
}

namespace {

void base_step(std::vector<ParamRef>& params, OptimState& state, const OptimHyper& hyper,
               double lr, OptimKind kind) {
  if (kind == OptimKind::kAdam) {
    adam_step(params, state, hyper, lr);
  } else {
    sgd_step(params, state, hyper, lr);
  }
}

} // namespace

void sam_step(std::vector<ParamRef>& params, const std::function<void()>& loss_fn,
              OptimState& state, const OptimHyper& hyper, double lr) {
  loss_fn();  // gradient at the unperturbed point

  double sq_norm = 0.0;
  for (auto& p : params) {
    const auto g = grad_of(p);
    for (double gi : g) sq_norm += gi * gi;
  }
  const double norm = std::sqrt(sq_norm);
  if (hyper.sam_rho <= 0.0 || norm == 0.0) {
    base_step(params, state, hyper, lr, hyper.sam_base);
    return;
  }

  // Ascend to the adversarial point, take the gradient there, come back.
  const double scale = hyper.sam_rho / norm;
  std::vector<std::vector<double>> eps_hat(params.size());
  for (std::size_t k = 0; k < params.size(); ++k) {
    const auto g = params[k].tensor.grad();
    auto pv = params[k].tensor.values_mut();
    auto& e = eps_hat[k];
    e.resize(pv.size());
    for (std::size_t i = 0; i < pv.size(); ++i) {
      e[i] = scale * g[i];
      pv[i] += e[i];
    }
  }
  loss_fn();
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto pv = params[k].tensor.values_mut();
    for (std::size_t i = 0; i < pv.size(); ++i) pv[i] -= eps_hat[k][i];
  }
  base_step(params, state, hyper, lr, hyper.sam_base);
}

void optimizer_step(std::vector<ParamRef>& params, const std::function<void()>& loss_fn,
                    OptimState& state, const OptimHyper& hyper, double lr) {
  switch (hyper.kind) {
    case OptimKind::kSgd:
      loss_fn();
      sgd_step(params, state, hyper, lr);
      break;
    case OptimKind::kAdam:
      loss_fn();
      adam_step(params, state, hyper, lr);
      break;
    case OptimKind::kSam:
      sam_step(params, loss_fn, state, hyper, lr);
      break;
  }
}

} // namespace reprforge
