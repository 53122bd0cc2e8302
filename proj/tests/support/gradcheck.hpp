// SPDX-License-Identifier: Apache-2.0
//
// Central finite-difference gradient checking used by the unit tests and the
// acceptance suite. The FD evaluation rebuilds constant leaves each call, so
// it never touches the tape the analytic path uses.
#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "reprforge/tensor.hpp"

namespace rf_test {

using reprforge::Tensor;

struct GradCheckInput {
  std::vector<int> shape;
  std::vector<double> data;
};

/// Max of |analytic - central_fd| / max(1, |analytic|) over every element of
/// every input. `f` must map leaves to a scalar tensor.
inline double max_rel_grad_error(
    const std::function<Tensor(std::vector<Tensor>&)>& f,
    const std::vector<GradCheckInput>& inputs, double h = 1e-5) {
  std::vector<Tensor> leaves;
  leaves.reserve(inputs.size());
  for (const auto& in : inputs) leaves.push_back(Tensor::from_data(in.shape, in.data, true));
  Tensor out = f(leaves);
  reprforge::backward(out);
  std::vector<std::vector<double>> analytic;
  for (auto& t : leaves) analytic.emplace_back(t.grad().begin(), t.grad().end());

  auto eval = [&](const std::vector<GradCheckInput>& points) {
    std::vector<Tensor> ls;
    ls.reserve(points.size());
    for (const auto& in : points) ls.push_back(Tensor::from_data(in.shape, in.data, false));
    return f(ls).item();
  };

  double max_err = 0.0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    for (std::size_t j = 0; j < inputs[i].data.size(); ++j) {
      auto plus = inputs;
      auto minus = inputs;
      plus[i].data[j] += h;
      minus[i].data[j] -= h;
      const double fd = (eval(plus) - eval(minus)) / (2.0 * h);
      const double a = analytic[i][j];
      const double err = std::abs(a - fd) / std::max(1.0, std::abs(a));
      max_err = std::max(max_err, err);
    }
  }
  return max_err;
}

} // namespace rf_test
