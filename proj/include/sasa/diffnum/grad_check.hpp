// SPDX-License-Identifier: Apache-2.0
/**
 * @file   grad_check.hpp
 * @brief  Central finite-difference check of tape gradients.
 */
#pragma once

#include <sasa/diffnum/tensor.hpp>

#include <cmath>
#include <functional>
#include <vector>

namespace sasa::diffnum {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t worst_param = 0;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
};

/// Compares the backward() gradient of @p f with central differences at the
/// current parameter values. @p f must rebuild its graph from @p params on
/// every call. The error of one coordinate is
/// |analytic - numeric| / (|numeric| + 1e-8).
inline GradCheckResult grad_check(const std::function<Tensor()> &f,
                                  std::vector<Tensor> params, double h = 1e-6) {
  for (auto &p : params) {
    p.zero_grad();
  }
  Tensor loss = f();
  backward(loss);
  std::vector<std::vector<double>> analytic;
  analytic.reserve(params.size());
  for (auto &p : params) {
    analytic.emplace_back(p.grad().begin(), p.grad().end());
    p.zero_grad();
  }

  auto eval = [&]() {
    const double v = f().item();
    if (!std::isfinite(v)) {
      throw NonFiniteError("grad_check: objective is not finite");
    }
    return v;
  };

  GradCheckResult result;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    auto values = params[pi].values();
    for (std::size_t k = 0; k < values.size(); ++k) {
      const double orig = values[k];
      values[k] = orig + h;
      const double up = eval();
      values[k] = orig - h;
      const double down = eval();
      values[k] = orig;
      const double numeric = (up - down) / (2.0 * h);
      const double err =
          std::abs(analytic[pi][k] - numeric) / (std::abs(numeric) + 1e-8);
      if (err > result.max_rel_error) {
        result = {err, pi, k, analytic[pi][k], numeric};
      }
    }
  }
  return result;
}

} // namespace sasa::diffnum
