// SPDX-License-Identifier: Apache-2.0
/**
 * @file   eval.hpp
 * @brief  AUC (exact Mann-Whitney) and RMSE.
 */
#pragma once

#include <sasa/diffnum/tensor.hpp>

#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <vector>

namespace sasa::eval {

struct MetricReport {
  std::string metric;
  double value = 0.0;
  std::size_t count = 0;
  std::vector<double> per_seed;
};

/// P(score_pos > score_neg) + P(tie) / 2 over all positive/negative pairs.
inline double auc(std::span<const double> scores, std::span<const double> labels) {
  if (scores.size() != labels.size()) {
    throw InvalidInput("auc: scores and labels differ in length");
  }
  std::vector<double> pos, neg;
  for (std::size_t k = 0; k < scores.size(); ++k) {
    if (labels[k] == 1.0) {
      pos.push_back(scores[k]);
    } else if (labels[k] == 0.0) {
      neg.push_back(scores[k]);
    } else {
      throw InvalidInput("auc: labels must be 0 or 1");
    }
  }
  if (pos.empty() || neg.empty()) {
    throw InvalidInput("auc: both classes must be present");
  }
  double wins = 0.0;
  for (double p : pos) {
    for (double n : neg) {
      wins += p > n ? 1.0 : (p == n ? 0.5 : 0.0);
    }
  }
  return wins / (static_cast<double>(pos.size()) * static_cast<double>(neg.size()));
}

inline double rmse(std::span<const double> preds, std::span<const double> targets) {
  if (preds.size() != targets.size()) {
    throw InvalidInput("rmse: length mismatch");
  }
  if (preds.empty()) {
    throw InvalidInput("rmse: no samples");
  }
  double s = 0.0;
  for (std::size_t k = 0; k < preds.size(); ++k) {
    const double e = preds[k] - targets[k];
    s += e * e;
  }
  return std::sqrt(s / static_cast<double>(preds.size()));
}

inline double mean(std::span<const double> xs) {
  if (xs.empty()) {
    return 0.0;
  }
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

} // namespace sasa::eval
