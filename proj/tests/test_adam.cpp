// SPDX-License-Identifier: Apache-2.0
#include <sasa/diffnum/adam.hpp>
#include <sasa/diffnum/ops.hpp>

#include <gtest/gtest.h>

#include <cmath>

using namespace sasa::diffnum;

TEST(Adam, FirstStepMovesByLearningRate) {
  auto p = Tensor::parameter({1, 2}, {1.0, -1.0});
  Adam opt({p}, {.lr = 0.01});
  backward(sum(mul(p, Tensor::constant({1, 2}, {3.0, -0.5}))));
  opt.step();
  // bias-corrected m/sqrt(v) = sign(g) on the first step
  EXPECT_NEAR(p.values()[0], 1.0 - 0.01, 1e-9);
  EXPECT_NEAR(p.values()[1], -1.0 + 0.01, 1e-9);
  EXPECT_EQ(p.grad()[0], 0.0);
}

TEST(Adam, MatchesScalarRecurrence) {
  auto p = Tensor::parameter({1, 1}, {2.0});
  AdamOptions o{.lr = 0.05, .beta1 = 0.8, .beta2 = 0.99, .eps = 1e-8};
  Adam opt({p}, o);
  double x = 2.0, m = 0.0, v = 0.0;
  for (int t = 1; t <= 25; ++t) {
    backward(sum(mul(p, p)));
    opt.step();
    const double g = 2.0 * x;
    m = o.beta1 * m + (1 - o.beta1) * g;
    v = o.beta2 * v + (1 - o.beta2) * g * g;
    x -= o.lr * (m / (1 - std::pow(o.beta1, t))) / (std::sqrt(v / (1 - std::pow(o.beta2, t))) + o.eps);
    EXPECT_NEAR(p.item(), x, 1e-12);
  }
  EXPECT_EQ(opt.states()[0].step_count, 25u);
}

TEST(Adam, MinimizesQuadratic) {
  auto p = Tensor::parameter({1, 3}, {3.0, -2.0, 0.5});
  auto target = Tensor::constant({1, 3}, {1.0, 1.0, 1.0});
  Adam opt({p}, {.lr = 0.05});
  for (int k = 0; k < 2000; ++k) {
    auto d = sub(p, target);
    backward(sum(mul(d, d)));
    opt.step();
  }
  for (double x : p.values()) EXPECT_NEAR(x, 1.0, 1e-3);
}
