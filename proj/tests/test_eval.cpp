// SPDX-License-Identifier: Apache-2.0
#include "oracles.hpp"

#include <sasa/eval.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace sasa;

TEST(Auc, HandExamples) {
  EXPECT_DOUBLE_EQ(eval::auc(std::vector<double>{0.1, 0.4, 0.35, 0.8},
                             std::vector<double>{0, 0, 1, 1}),
                   0.75);
  EXPECT_DOUBLE_EQ(eval::auc(std::vector<double>{0.1, 0.2, 0.8, 0.9},
                             std::vector<double>{0, 0, 1, 1}),
                   1.0);
  EXPECT_DOUBLE_EQ(eval::auc(std::vector<double>(6, 0.3),
                             std::vector<double>{0, 1, 0, 1, 1, 0}),
                   0.5);
}

TEST(Auc, MatchesPairwiseOracleAndInvariances) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g(0.0, 1.0);
  std::bernoulli_distribution coin(0.4);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> s(30), y(30);
    for (std::size_t k = 0; k < 30; ++k) {
      y[k] = k < 2 ? static_cast<double>(k) : (coin(rng) ? 1.0 : 0.0);
      s[k] = std::round(4.0 * (g(rng) + y[k])) / 4.0; // some ties
    }
    const double a = eval::auc(s, y);
    EXPECT_DOUBLE_EQ(a, oracle::auc(s, y));
    std::vector<double> t(s), neg(s);
    for (auto &x : t) x = std::exp(2.0 * x) + 1.0;
    for (auto &x : neg) x = -x;
    EXPECT_DOUBLE_EQ(eval::auc(t, y), a);
    EXPECT_NEAR(eval::auc(neg, y), 1.0 - a, 1e-12);
  }
}

TEST(Auc, Errors) {
  EXPECT_THROW(eval::auc(std::vector<double>{0.1, 0.2}, std::vector<double>{1, 1}), InvalidInput);
  EXPECT_THROW(eval::auc(std::vector<double>{0.1}, std::vector<double>{1, 0}), InvalidInput);
  EXPECT_THROW(eval::auc(std::vector<double>{0.1, 0.2}, std::vector<double>{0, 2}), InvalidInput);
}

TEST(Rmse, Values) {
  EXPECT_EQ(eval::rmse(std::vector<double>{1, 2}, std::vector<double>{1, 2}), 0.0);
  EXPECT_NEAR(eval::rmse(std::vector<double>{3, 4}, std::vector<double>{0, 0}),
              std::sqrt(12.5), 1e-12);
  std::vector<double> p{0.5, -1.0, 2.0}, t{0.0, 1.0, 1.5};
  std::vector<double> p3{-1.5, 3.0, -6.0}, t3{0.0, -3.0, -4.5};
  EXPECT_NEAR(eval::rmse(p3, t3), 3.0 * eval::rmse(p, t), 1e-12);
  double mean_err = 0.0;
  for (std::size_t k = 0; k < 3; ++k) mean_err += (p[k] - t[k]) / 3.0;
  EXPECT_GE(eval::rmse(p, t), std::abs(mean_err));
  EXPECT_THROW(eval::rmse(std::vector<double>{1}, std::vector<double>{1, 2}), InvalidInput);
  EXPECT_THROW(eval::rmse(std::vector<double>{}, std::vector<double>{}), InvalidInput);
}
