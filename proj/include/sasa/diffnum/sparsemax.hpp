// SPDX-License-Identifier: Apache-2.0
/**
 * @file   sparsemax.hpp
 * @brief  Euclidean projection onto the probability simplex and its
 *         differentiable wrapper.
 */
#pragma once

#include <sasa/diffnum/tensor.hpp>

#include <algorithm>
#include <numeric>
#include <span>
#include <vector>

namespace sasa::diffnum {

struct SimplexProjection {
  std::vector<double> p;
  /// Indices with p > 0, in descending order of the input score.
  std::vector<std::size_t> support;
  double threshold = 0.0;
};

/// Sort-based threshold algorithm. The support is the largest k with
/// 1 + k z_(k) > sum_{j<=k} z_(j); equal scores keep their index order.
inline SimplexProjection project_to_simplex(std::span<const double> z) {
  const std::size_t K = z.size();
  if (K == 0) {
    throw InvalidInput("sparsemax: empty input");
  }
  detail::require_finite(z, "value", "sparsemax");

  std::vector<std::size_t> order(K);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return z[a] > z[b]; });

  double cumsum = 0.0;
  double support_sum = 0.0;
  std::size_t k_z = 0;
  for (std::size_t k = 1; k <= K; ++k) {
    const double zk = z[order[k - 1]];
    cumsum += zk;
    if (1.0 + static_cast<double>(k) * zk > cumsum) {
      k_z = k;
      support_sum = cumsum;
    } else {
      break;
    }
  }
  // k = 1 always satisfies the condition, so k_z >= 1.
  SimplexProjection out;
  out.threshold = (support_sum - 1.0) / static_cast<double>(k_z);
  out.p.resize(K);
  for (std::size_t i = 0; i < K; ++i) {
    out.p[i] = std::max(z[i] - out.threshold, 0.0);
  }
  out.support.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k_z));
  // Entries tied with the threshold inside the support round to zero; keep
  // the support consistent with p.
  std::erase_if(out.support, [&](std::size_t i) { return out.p[i] == 0.0; });
  return out;
}

/// sparsemax over a row or column vector. The backward pass maps an upstream
/// gradient v to (v_i - mean_S v) on the support S and 0 elsewhere.
inline Tensor sparsemax(const Tensor &z) {
  if (!z.is_vector() || z.size() == 0) {
    throw InvalidInput("sparsemax: input must be a non-empty vector, got " +
                       to_string(z.shape()));
  }
  auto proj = project_to_simplex(z.values());
  return Tensor::from_op(
      "sparsemax", z.shape(), std::move(proj.p), {z},
      [support = std::move(proj.support)](Node &self) {
        Node &x = *self.parents[0];
        if (!x.requires_grad || support.empty()) {
          return;
        }
        double mean = 0.0;
        for (std::size_t i : support) {
          mean += self.grad[i];
        }
        mean /= static_cast<double>(support.size());
        for (std::size_t i : support) {
          x.grad[i] += self.grad[i] - mean;
        }
      });
}

} // namespace sasa::diffnum
