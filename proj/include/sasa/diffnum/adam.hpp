// SPDX-License-Identifier: Apache-2.0
/**
 * @file   adam.hpp
 * @brief  Adam with bias correction over a fixed list of parameter tensors.
 */
#pragma once

#include <sasa/diffnum/tensor.hpp>

#include <cmath>
#include <cstdint>
#include <vector>

namespace sasa::diffnum {

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::vector<double> first_moment;
  std::vector<double> second_moment;
  std::uint64_t step_count = 0;
  AdamOptions options;
};

/// One bias-corrected Adam update of @p param from its accumulated grad,
/// then zero the grad.
inline void adam_step(Tensor &param, AdamState &state) {
  const std::size_t n = param.size();
  if (state.first_moment.empty() && state.second_moment.empty()) {
    state.first_moment.assign(n, 0.0);
    state.second_moment.assign(n, 0.0);
  }
  if (state.first_moment.size() != n || state.second_moment.size() != n) {
    throw InvalidInput("adam_step: moment arrays do not match parameter");
  }
  const auto &o = state.options;
  ++state.step_count;
  const double t = static_cast<double>(state.step_count);
  const double c1 = 1.0 - std::pow(o.beta1, t);
  const double c2 = 1.0 - std::pow(o.beta2, t);
  auto v = param.values();
  auto g = param.grad();
  for (std::size_t k = 0; k < n; ++k) {
    auto &m1 = state.first_moment[k];
    auto &m2 = state.second_moment[k];
    m1 = o.beta1 * m1 + (1.0 - o.beta1) * g[k];
    m2 = o.beta2 * m2 + (1.0 - o.beta2) * g[k] * g[k];
    const double mhat = m1 / c1;
    const double vhat = m2 / c2;
    v[k] -= o.lr * mhat / (std::sqrt(vhat) + o.eps);
  }
  detail::require_finite(v, "value", "adam_step");
  param.zero_grad();
}

/// Optimizer over a parameter list, one AdamState per tensor.
class Adam {
public:
  Adam(std::vector<Tensor> params, AdamOptions options)
      : params_(std::move(params)) {
    states_.resize(params_.size());
    for (auto &s : states_) {
      s.options = options;
    }
  }

  void step() {
    for (std::size_t i = 0; i < params_.size(); ++i) {
      adam_step(params_[i], states_[i]);
    }
  }

  void zero_grad() {
    for (auto &p : params_) {
      p.zero_grad();
    }
  }

  const std::vector<AdamState> &states() const { return states_; }

private:
  std::vector<Tensor> params_;
  std::vector<AdamState> states_;
};

} // namespace sasa::diffnum
