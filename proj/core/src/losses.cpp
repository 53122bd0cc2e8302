// SPDX-License-Identifier: Apache-2.0
#include "reprforge/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "reprforge/errors.hpp"

namespace reprforge {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kCosineSlack = 1e-9;

void check_labels(const std::vector<int>& labels, int n, int c) {
  if (static_cast<int>(labels.size()) != n)
    throw ShapeMismatch("labels: expected " + std::to_string(n) + " entries, got " +
                        std::to_string(labels.size()));
  for (int y : labels)
    if (y < 0 || y >= c)
      throw LabelOutOfRange("label " + std::to_string(y) + " outside [0," + std::to_string(c) +
                            ")");
}

void check_rank2(const char* who, const Tensor& t) {
  if (t.rank() != 2)
    throw ShapeMismatch(std::string(who) + ": expected NxC tensor, got " +
                        shape_to_string(t.shape()));
}

/// Numerically stable softplus of a 1-element tensor expression; the branch
/// is picked on the forward value, both branches are algebraically log(1+e^x).
Tensor softplus(const Tensor& x) {
  if (x.item() > 0.0) return add(x, log(add_scalar(exp(neg(x)), 1.0)));
  return log(add_scalar(exp(x), 1.0));
}

/// logsumexp of a vector with a constant max shift.
Tensor logsumexp(const Tensor& x) {
  double mx = x.values()[0];
  for (double v : x.values()) mx = std::max(mx, v);
  return add_scalar(log(sum(exp(add_scalar(x, -mx)))), mx);
}

/// Shared core of arcface/magface: per-sample margins given as a tensor.
Tensor angular_margin_rows(const Tensor& cosines, const std::vector<int>& labels, double s,
                           const Tensor& margins) {
  const int n = cosines.dim(0), c = cosines.dim(1);

  Tensor cos_y = gather(cosines, labels);
  Tensor theta_y = acos_clamped(cos_y);

  // Additive angular margin on the target logit; past pi fall back to the
  // monotone surrogate cos(theta) - m*sin(m).
  Tensor with_margin = cos(add(theta_y, margins));
  Tensor sin_m = cos(add_scalar(margins, -kPi / 2.0));
  Tensor fallback = sub(cos(theta_y), mul(margins, sin_m));
  std::vector<double> mask_in(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double angle = theta_y.values()[static_cast<std::size_t>(i)] +
                         margins.values()[static_cast<std::size_t>(i)];
    mask_in[static_cast<std::size_t>(i)] = angle <= kPi ? 1.0 : 0.0;
  }
  Tensor mask = Tensor::from_data({n}, mask_in);
  Tensor inv_mask = add_scalar(neg(mask), 1.0);
  Tensor target = add(mul(with_margin, mask), mul(fallback, inv_mask));
  Tensor target_logit = mul_scalar(target, s);

  // Denominator contribution of the non-target classes only.
  std::vector<double> excl(static_cast<std::size_t>(n) * c, 1.0);
  for (int i = 0; i < n; ++i)
    excl[static_cast<std::size_t>(i) * c + static_cast<std::size_t>(labels[i])] = 0.0;
  Tensor exclude = Tensor::from_data({n, c}, std::move(excl));
  Tensor neg_sum = sum_last(mul(exp(mul_scalar(cosines, s)), exclude));

  // -log( e^t / (e^t + S) ) = log(e^t + S) - t
  return sub(log(add(exp(target_logit), neg_sum)), target_logit);
}

Tensor validate_cosines(const Tensor& cosines) {
  check_rank2("cosines", cosines);
  for (double v : cosines.values())
    if (v < -1.0 - kCosineSlack || v > 1.0 + kCosineSlack || !std::isfinite(v))
      throw CosineOutOfRange("cosine value " + std::to_string(v) + " outside [-1,1]");
  return cosines;
}

} // namespace

std::string loss_kind_name(LossKind k) {
  switch (k) {
    case LossKind::kCrossEntropy: return "ce";
    case LossKind::kFocal: return "focal";
    case LossKind::kTriplet: return "triplet";
    case LossKind::kArcFace: return "arcface";
    case LossKind::kCircle: return "circle";
    case LossKind::kMagFace: return "magface";
  }
  return "?";
}

LossKind loss_kind_from_name(const std::string& name) {
  if (name == "ce") return LossKind::kCrossEntropy;
  if (name == "focal") return LossKind::kFocal;
  if (name == "triplet") return LossKind::kTriplet;
  if (name == "arcface") return LossKind::kArcFace;
  if (name == "circle") return LossKind::kCircle;
  if (name == "magface") return LossKind::kMagFace;
  throw ValidationError("loss.name: unknown loss '" + name + "'");
}

void LossSpec::validate() const {
  if (eps_smooth < 0.0 || eps_smooth >= 1.0)
    throw ValidationError("loss.eps_smooth: must be in [0,1)");
  if (gamma < 0.0) throw ValidationError("loss.gamma: must be >= 0");
  if (margin < 0.0) throw ValidationError("loss.margin: must be >= 0");
  if (scale <= 0.0 || scale > 256.0)
    throw ValidationError("loss.s: must be in (0,256]");
  if (angular_margin < 0.0 || angular_margin >= kPi / 2.0)
    throw ValidationError("loss.m: must be in [0, pi/2)");
  if (circle_m < 0.0 || circle_m >= 1.0)
    throw ValidationError("loss.circle_m: must be in [0,1)");
  if (circle_gamma <= 0.0 || circle_gamma > 512.0)
    throw ValidationError("loss.circle_gamma: must be in (0,512]");
  if (mag.lower_norm >= mag.upper_norm)
    throw ValidationError("loss.mag_bounds: requires l_a < u_a");
  if (mag.lower_margin > mag.upper_margin)
    throw ValidationError("loss.mag_bounds: requires l_m <= u_m");
  if (mag.lower_norm <= 0.0) throw ValidationError("loss.mag_bounds: l_a must be > 0");
  if (mag.upper_margin >= kPi / 2.0)
    throw ValidationError("loss.mag_bounds: u_m must be < pi/2");
  if (mag_lambda_g < 0.0) throw ValidationError("loss.mag_lambda_g: must be >= 0");
  if (ohem_ratio && (*ohem_ratio <= 0.0 || *ohem_ratio > 1.0))
    throw ValidationError("loss.ohem_ratio: must be in (0,1]");
  if (mixup_alpha && *mixup_alpha <= 0.0)
    throw ValidationError("loss.mixup_alpha: must be > 0");
}

Tensor cross_entropy_rows(const Tensor& logits, const std::vector<int>& labels,
                          double eps_smooth) {
  check_rank2("cross_entropy", logits);
  const int n = logits.dim(0), c = logits.dim(1);
  check_labels(labels, n, c);
  Tensor probs = softmax(logits);
  if (eps_smooth == 0.0) return neg(log(gather(probs, labels)));
  // Smoothed target (1-eps)*onehot + eps/C against full log-probabilities.
  std::vector<double> target(static_cast<std::size_t>(n) * c, eps_smooth / c);
  for (int i = 0; i < n; ++i)
    target[static_cast<std::size_t>(i) * c + static_cast<std::size_t>(labels[i])] +=
        1.0 - eps_smooth;
  Tensor t = Tensor::from_data({n, c}, std::move(target));
  return neg(sum_last(mul(log(probs), t)));
}

Tensor cross_entropy(const Tensor& logits, const std::vector<int>& labels, double eps_smooth) {
  return mean(cross_entropy_rows(logits, labels, eps_smooth));
}

Tensor cross_entropy_soft(const Tensor& logits, const Tensor& soft_targets) {
  check_rank2("cross_entropy_soft", logits);
  if (logits.shape() != soft_targets.shape())
    throw ShapeMismatch("cross_entropy_soft: logits " + shape_to_string(logits.shape()) +
                        " vs targets " + shape_to_string(soft_targets.shape()));
  return mean(neg(sum_last(mul(log(softmax(logits)), soft_targets))));
}

Tensor focal_rows(const Tensor& logits, const std::vector<int>& labels, double gamma) {
  check_rank2("focal", logits);
  check_labels(labels, logits.dim(0), logits.dim(1));
  Tensor p_t = gather(softmax(logits), labels);
  Tensor weight = pow_scalar(add_scalar(neg(p_t), 1.0), gamma);  // (1-p)^gamma
  return neg(mul(weight, log(p_t)));
}

Tensor focal(const Tensor& logits, const std::vector<int>& labels, double gamma) {
  return mean(focal_rows(logits, labels, gamma));
}

Tensor triplet_batch_hard_rows(const Tensor& z, const std::vector<int>& ids, double alpha) {
  check_rank2("triplet_batch_hard", z);
  const int n = z.dim(0), d = z.dim(1);
  if (static_cast<int>(ids.size()) != n)
    throw ShapeMismatch("triplet_batch_hard: ids length " + std::to_string(ids.size()) +
                        " != batch " + std::to_string(n));

  const double* zv = z.values().data();
  auto sq_dist = [&](int i, int j) {
    double acc = 0.0;
    for (int k = 0; k < d; ++k) {
      const double diff = zv[i * d + k] - zv[j * d + k];
      acc += diff * diff;
    }
    return acc;
  };

  // Mining is done on forward values; gradients flow through the selected
  // pairs only.
  std::vector<int> pos(static_cast<std::size_t>(n)), negi(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    int best_p = -1, best_n = -1;
    double dp = -1.0, dn = 0.0;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      const double dist = sq_dist(i, j);
      if (ids[j] == ids[i]) {
        if (dist > dp) {
          dp = dist;
          best_p = j;
        }
      } else if (best_n < 0 || dist < dn) {
        dn = dist;
        best_n = j;
      }
    }
    if (best_p < 0)
      throw DegenerateBatch("triplet_batch_hard: anchor " + std::to_string(i) +
                            " (id " + std::to_string(ids[i]) + ") has no positive");
    if (best_n < 0)
      throw DegenerateBatch("triplet_batch_hard: anchor " + std::to_string(i) +
                            " (id " + std::to_string(ids[i]) + ") has no negative");
    pos[static_cast<std::size_t>(i)] = best_p;
    negi[static_cast<std::size_t>(i)] = best_n;
  }

  Tensor dp = sub(z, take_rows(z, pos));
  Tensor dn = sub(z, take_rows(z, negi));
  Tensor d_pos = sum_last(mul(dp, dp));
  Tensor d_neg = sum_last(mul(dn, dn));
  return relu(add_scalar(sub(d_pos, d_neg), alpha));
}

Tensor triplet_batch_hard(const Tensor& z, const std::vector<int>& ids, double alpha) {
  return mean(triplet_batch_hard_rows(z, ids, alpha));
}

Tensor arcface_rows(const Tensor& cosines, const std::vector<int>& labels, double s, double m) {
  validate_cosines(cosines);
  const int n = cosines.dim(0);
  check_labels(labels, n, cosines.dim(1));
  return angular_margin_rows(cosines, labels, s, Tensor::full({n}, m));
}

Tensor arcface(const Tensor& cosines, const std::vector<int>& labels, double s, double m) {
  return mean(arcface_rows(cosines, labels, s, m));
}

Tensor circle(const Tensor& sim_pos, const Tensor& sim_neg, double m, double gamma) {
  if (sim_pos.numel() == 0 || sim_neg.numel() == 0) return Tensor::scalar(0.0);
  for (const Tensor* t : {&sim_pos, &sim_neg})
    for (double v : t->values())
      if (v < -1.0 - kCosineSlack || v > 1.0 + kCosineSlack)
        throw CosineOutOfRange("circle: similarity " + std::to_string(v) + " outside [-1,1]");

  // alpha_n = [s_n + m]_+, delta_n = m; alpha_p = [1 + m - s_p]_+, delta_p = 1 - m.
  Tensor alpha_n = relu(add_scalar(sim_neg, m));
  Tensor exp_n = mul_scalar(mul(alpha_n, add_scalar(sim_neg, -m)), gamma);
  Tensor alpha_p = relu(add_scalar(neg(sim_pos), 1.0 + m));
  Tensor exp_p = mul_scalar(mul(alpha_p, add_scalar(sim_pos, m - 1.0)), -gamma);
  // log(1 + sum_n e^(.) * sum_p e^(.)) via softplus(lse_n + lse_p).
  return softplus(add(logsumexp(exp_n), logsumexp(exp_p)));
}

Tensor magface_rows(const Tensor& cosines, const std::vector<int>& labels,
                    const Tensor& feat_norms, double s, const MagBounds& bounds,
                    double lambda_g) {
  validate_cosines(cosines);
  const int n = cosines.dim(0);
  check_labels(labels, n, cosines.dim(1));
  if (feat_norms.numel() != n)
    throw ShapeMismatch("magface: feat_norms has " + std::to_string(feat_norms.numel()) +
                        " entries for batch " + std::to_string(n));
  for (double a : feat_norms.values())
    if (!(a > 0.0))
      throw NonPositiveNorm("magface: feature norm " + std::to_string(a) + " must be > 0");

  // m(a): clamp a into [l_a, u_a], then interpolate the margin linearly.
  Tensor clamped = add_scalar(sub(relu(add_scalar(feat_norms, -bounds.lower_norm)),
                                  relu(add_scalar(feat_norms, -bounds.upper_norm))),
                              bounds.lower_norm);
  const double slope =
      (bounds.upper_margin - bounds.lower_margin) / (bounds.upper_norm - bounds.lower_norm);
  Tensor margins =
      add_scalar(mul_scalar(add_scalar(clamped, -bounds.lower_norm), slope), bounds.lower_margin);

  Tensor rows = angular_margin_rows(cosines, labels, s, margins);
  if (lambda_g == 0.0) return rows;
  // g(a) = a/u_a^2 + 1/a, minimized at a = u_a.
  Tensor reg = add(mul_scalar(feat_norms, 1.0 / (bounds.upper_norm * bounds.upper_norm)),
                   exp(neg(log(feat_norms))));
  return add(rows, mul_scalar(reg, lambda_g));
}

Tensor magface(const Tensor& cosines, const std::vector<int>& labels, const Tensor& feat_norms,
               double s, const MagBounds& bounds, double lambda_g) {
  return mean(magface_rows(cosines, labels, feat_norms, s, bounds, lambda_g));
}

Tensor ohem_filter(const Tensor& per_sample_losses, double ratio) {
  if (per_sample_losses.rank() != 1)
    throw ShapeMismatch("ohem_filter: expected a rank-1 loss vector");
  const int n = per_sample_losses.dim(0);
  int k = static_cast<int>(std::ceil(ratio * n));
  k = std::clamp(k, 1, n);
  if (k == n) return mean(per_sample_losses);

  const auto vals = per_sample_losses.values();
  std::vector<int> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](int a, int b) {
    if (vals[static_cast<std::size_t>(a)] != vals[static_cast<std::size_t>(b)])
      return vals[static_cast<std::size_t>(a)] > vals[static_cast<std::size_t>(b)];
    return a < b;
  });
  idx.resize(static_cast<std::size_t>(k));
  return mean(take_rows(per_sample_losses, idx));
}

std::vector<double> mixup_targets(const std::vector<double>& y1, const std::vector<double>& y2,
                                  double lambda) {
  if (y1.size() != y2.size())
    throw ShapeMismatch("mixup_targets: size " + std::to_string(y1.size()) + " vs " +
                        std::to_string(y2.size()));
  if (lambda < 0.0 || lambda > 1.0)
    throw ValidationError("mixup_targets: lambda must be in [0,1]");
  std::vector<double> out(y1.size());
  for (std::size_t i = 0; i < y1.size(); ++i) out[i] = lambda * y1[i] + (1.0 - lambda) * y2[i];
  return out;
}

} // namespace reprforge
