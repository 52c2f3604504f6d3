// SPDX-License-Identifier: Apache-2.0
/**
 * @file   structure.hpp
 * @brief  Intra-variable attention over segment lengths, inter-variable
 *         attention over (variable, lag) pairs, and the final per-variable
 *         representation.
 *
 * Inter-variable weights of target variable i are laid out block by source
 * variable j (j != i, ascending), then by segment length tau = 1..N, so
 * column b*N + (tau-1) of row i belongs to j = b < i ? b : b + 1.
 */
#pragma once

#include <sasa/diffnum/ops.hpp>
#include <sasa/diffnum/sparsemax.hpp>
#include <sasa/segmenter.hpp>

#include <cmath>
#include <random>
#include <vector>

namespace sasa::structure {

using diffnum::Tensor;
using segmenter::SegmentBank;

/// Query/key/value projections, one triple shared by all variables.
struct ProjectionParams {
  Tensor w_query;
  Tensor w_key;
  Tensor w_value;

  std::size_t hidden() const { return w_query.rows(); }
  std::vector<Tensor> tensors() const { return {w_query, w_key, w_value}; }

  template <typename Rng>
  static ProjectionParams init(std::size_t hidden, Rng &rng) {
    const double a = 1.0 / std::sqrt(static_cast<double>(hidden));
    std::uniform_real_distribution<double> u(-a, a);
    auto draw = [&]() {
      std::vector<double> v(hidden * hidden);
      for (auto &x : v) {
        x = u(rng);
      }
      return Tensor::parameter({hidden, hidden}, std::move(v));
    };
    ProjectionParams p;
    p.w_query = draw();
    p.w_key = draw();
    p.w_value = draw();
    return p;
  }

  static ProjectionParams zeros(std::size_t hidden) {
    return {Tensor::zeros({hidden, hidden}, true),
            Tensor::zeros({hidden, hidden}, true),
            Tensor::zeros({hidden, hidden}, true)};
  }
};

/// How inter-variable association scores are formed.
enum class InterScore {
  lagged, ///< cosine(Z^i, h^j_tau): one score per candidate lag
  plain,  ///< cosine(Z^i, Z^j) repeated over tau: lag-blind variant
};

struct IntraAttention {
  Tensor alpha;                   ///< M x N, each row on the simplex
  Tensor z;                       ///< M x d weighted segment representations
  std::vector<Tensor> alpha_rows; ///< M tensors of 1 x N
  std::vector<Tensor> z_rows;     ///< M tensors of 1 x d
};

struct InterAttention {
  Tensor beta;                   ///< M x (M-1)N; undefined when M == 1
  Tensor u;                      ///< M x d associative representations
  std::vector<Tensor> beta_rows; ///< empty when M == 1
  std::vector<Tensor> u_rows;
};

/// Per variable i: u_tau = mean_k (h_tau Wq).(h_k Wk) / sqrt(d),
/// alpha = sparsemax(u), Z = sum_tau alpha_tau h_tau Wv.
inline IntraAttention intra_attention(const SegmentBank &bank,
                                      const ProjectionParams &proj) {
  using namespace diffnum;
  const std::size_t M = bank.variables, N = bank.length, d = bank.hidden();
  if (proj.hidden() != d || bank.h.rows() != M * N) {
    throw InvalidInput("intra_attention: bank " + to_string(bank.h.shape()) +
                       " does not match projections of width " +
                       std::to_string(proj.hidden()));
  }
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
  Tensor q = matmul(bank.h, proj.w_query);
  Tensor k = matmul(bank.h, proj.w_key);
  Tensor v = matmul(bank.h, proj.w_value);

  IntraAttention out;
  for (std::size_t i = 0; i < M; ++i) {
    Tensor qi = slice_rows(q, i * N, N);
    Tensor ki = slice_rows(k, i * N, N);
    Tensor vi = slice_rows(v, i * N, N);
    // mean_k q_tau . k_k == q_tau . mean_k k_k
    Tensor u = transpose(scale(matmul(qi, transpose(mean(ki, Axis::rows))), inv_sqrt_d));
    Tensor a = sparsemax(u);
    out.alpha_rows.push_back(a);
    out.z_rows.push_back(matmul(a, vi));
  }
  out.alpha = M == 1 ? out.alpha_rows[0] : concat_rows(out.alpha_rows);
  out.z = M == 1 ? out.z_rows[0] : concat_rows(out.z_rows);
  return out;
}

/// beta^i = sparsemax over all (j != i, tau) association scores jointly;
/// U^i = sum_{j != i} sum_tau beta^{ij}_tau h^j_tau.
inline InterAttention inter_attention(const std::vector<Tensor> &z_rows,
                                      const SegmentBank &bank,
                                      InterScore score = InterScore::lagged,
                                      double eps = 1e-8) {
  using namespace diffnum;
  const std::size_t M = bank.variables, N = bank.length, d = bank.hidden();
  if (z_rows.size() != M) {
    throw InvalidInput("inter_attention: expected one Z row per variable");
  }
  for (const auto &z : z_rows) {
    if (z.size() != d) {
      throw InvalidInput("inter_attention: Z width does not match the bank");
    }
  }
  InterAttention out;
  if (M == 1) {
    out.u_rows.push_back(Tensor::zeros({1, d}));
    out.u = out.u_rows[0];
    return out;
  }

  // Scores for every (j, tau) row of the bank against Z^i.
  for (std::size_t i = 0; i < M; ++i) {
    Tensor e_all;
    if (score == InterScore::lagged) {
      e_all = transpose(row_cosine(bank.h, z_rows[i], eps)); // 1 x MN
    } else {
      std::vector<Tensor> blocks;
      for (std::size_t j = 0; j < M; ++j) {
        Tensor c = cosine(z_rows[i], z_rows[j], eps);
        blocks.push_back(matmul(c, Tensor::full({1, N}, 1.0)));
      }
      e_all = concat_cols(blocks);
    }
    std::vector<Tensor> keep_scores;
    std::vector<Tensor> keep_rows;
    if (i > 0) {
      keep_scores.push_back(slice_cols(e_all, 0, i * N));
      keep_rows.push_back(slice_rows(bank.h, 0, i * N));
    }
    if (i + 1 < M) {
      keep_scores.push_back(slice_cols(e_all, (i + 1) * N, (M - i - 1) * N));
      keep_rows.push_back(slice_rows(bank.h, (i + 1) * N, (M - i - 1) * N));
    }
    Tensor e = keep_scores.size() == 1 ? keep_scores[0] : concat_cols(keep_scores);
    Tensor others = keep_rows.size() == 1 ? keep_rows[0] : concat_rows(keep_rows);
    Tensor b = sparsemax(e);
    out.beta_rows.push_back(b);
    out.u_rows.push_back(matmul(b, others));
  }
  out.beta = concat_rows(out.beta_rows);
  out.u = concat_rows(out.u_rows);
  return out;
}

struct Representation {
  Tensor per_variable; ///< M x 2d, row i = [Z^i, U^i]
  Tensor flat;         ///< 1 x 2Md = [H^1, ..., H^M]
};

inline Representation build_representation(const std::vector<Tensor> &z_rows,
                                           const std::vector<Tensor> &u_rows) {
  using namespace diffnum;
  if (z_rows.size() != u_rows.size() || z_rows.empty()) {
    throw InvalidInput("build_representation: Z and U row counts differ");
  }
  std::vector<Tensor> rows;
  std::vector<Tensor> flat_parts;
  for (std::size_t i = 0; i < z_rows.size(); ++i) {
    if (z_rows[i].shape() != u_rows[i].shape() || z_rows[i].rows() != 1) {
      throw InvalidInput("build_representation: Z^i and U^i must be equal rows");
    }
    rows.push_back(concat_cols({z_rows[i], u_rows[i]}));
    flat_parts.push_back(z_rows[i]);
    flat_parts.push_back(u_rows[i]);
  }
  return {rows.size() == 1 ? rows[0] : concat_rows(rows),
          concat_cols(flat_parts)};
}

/// Variable-level adjacency: A[i][j] = sum_tau beta^{ij}_tau, zero diagonal.
struct StructureMatrix {
  std::size_t variables = 0;
  std::vector<double> a;

  double operator()(std::size_t i, std::size_t j) const {
    return a[i * variables + j];
  }
  double &at(std::size_t i, std::size_t j) { return a[i * variables + j]; }
};

inline std::size_t source_variable(std::size_t target, std::size_t block) {
  return block < target ? block : block + 1;
}

/// @p beta is M x (M-1)N in the block layout above; values only.
inline StructureMatrix aggregate_structure(std::span<const double> beta,
                                           std::size_t M, std::size_t N) {
  StructureMatrix out{M, std::vector<double>(M * M, 0.0)};
  if (M < 2) {
    return out;
  }
  const std::size_t width = (M - 1) * N;
  if (beta.size() != M * width) {
    throw InvalidInput("aggregate_structure: beta has the wrong size");
  }
  for (std::size_t i = 0; i < M; ++i) {
    for (std::size_t b = 0; b + 1 < M; ++b) {
      double s = 0.0;
      for (std::size_t tau = 0; tau < N; ++tau) {
        s += beta[i * width + b * N + tau];
      }
      out.at(i, source_variable(i, b)) = s;
    }
  }
  return out;
}

inline StructureMatrix aggregate_structure(const InterAttention &inter,
                                           std::size_t M, std::size_t N) {
  if (M < 2) {
    return {M, std::vector<double>(M * M, 0.0)};
  }
  return aggregate_structure(inter.beta.values(), M, N);
}

/// Elementwise mean of several matrices of the same size.
inline StructureMatrix average(const std::vector<StructureMatrix> &ms) {
  if (ms.empty()) {
    throw InvalidInput("average: no structure matrices");
  }
  StructureMatrix out{ms[0].variables, std::vector<double>(ms[0].a.size(), 0.0)};
  for (const auto &m : ms) {
    for (std::size_t k = 0; k < out.a.size(); ++k) {
      out.a[k] += m.a[k];
    }
  }
  for (auto &x : out.a) {
    x /= static_cast<double>(ms.size());
  }
  return out;
}

} // namespace sasa::structure
