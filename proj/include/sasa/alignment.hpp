// SPDX-License-Identifier: Apache-2.0
/**
 * @file   alignment.hpp
 * @brief  Linear-kernel MMD between source and target attention weights.
 *
 * Both losses are sum_m || mean_src(w^m) - mean_tgt(w^m) ||, where w^m is row
 * m of a sample's intra (alpha, M x N) or inter (beta, M x (M-1)N) weights.
 */
#pragma once

#include <sasa/diffnum/ops.hpp>
#include <sasa/segmenter.hpp>

#include <cmath>
#include <vector>

namespace sasa::alignment {

using diffnum::Tensor;

enum class Norm {
  l2,         ///< || . ||_2 of the mean difference
  squared_l2, ///< || . ||_2^2
};

/// Attention weights of one mini-batch.
struct BatchWeights {
  std::vector<Tensor> alpha; ///< per sample, M x N
  std::vector<Tensor> beta;  ///< per sample, M x (M-1)N; empty when M == 1
  Domain domain = Domain::source;
  std::size_t variables = 0;
  std::size_t length = 0;

  std::size_t size() const { return alpha.size(); }
};

namespace detail {

inline void check_pair(const BatchWeights &src, const BatchWeights &tgt,
                       const char *what) {
  if (src.size() == 0 || tgt.size() == 0) {
    throw InvalidInput(std::string(what) + ": empty batch");
  }
  if (src.variables != tgt.variables || src.length != tgt.length) {
    throw InvalidInput(std::string(what) + ": batches differ in M or N");
  }
}

inline Tensor batch_mean(const std::vector<Tensor> &ws) {
  return diffnum::scale(diffnum::add_n(ws), 1.0 / static_cast<double>(ws.size()));
}

inline Tensor discrepancy(const std::vector<Tensor> &src,
                          const std::vector<Tensor> &tgt, Norm norm) {
  using namespace diffnum;
  Tensor diff = sub(batch_mean(src), batch_mean(tgt));
  if (norm == Norm::squared_l2) {
    return sum(mul(diff, diff));
  }
  return sum(row_norms(diff));
}

} // namespace detail

/// Segment-length distribution alignment.
inline Tensor alpha_alignment_loss(const BatchWeights &src,
                                   const BatchWeights &tgt,
                                   Norm norm = Norm::l2) {
  detail::check_pair(src, tgt, "alpha_alignment_loss");
  return detail::discrepancy(src.alpha, tgt.alpha, norm);
}

/// Associative-structure alignment; zero by convention when M == 1.
inline Tensor beta_alignment_loss(const BatchWeights &src,
                                  const BatchWeights &tgt,
                                  Norm norm = Norm::l2) {
  detail::check_pair(src, tgt, "beta_alignment_loss");
  if (src.variables < 2) {
    return Tensor::scalar(0.0);
  }
  return detail::discrepancy(src.beta, tgt.beta, norm);
}

} // namespace sasa::alignment
