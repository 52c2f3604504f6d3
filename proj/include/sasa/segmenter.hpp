// SPDX-License-Identifier: Apache-2.0
/**
 * @file   segmenter.hpp
 * @brief  Suffix-segment enumeration and per-variable LSTM summarization.
 *
 * For a univariate series x of length N, the segment of length tau is the
 * last tau values x[N-tau .. N-1]. Each segment is run through its variable's
 * LSTM from a zero state and summarized by the final hidden state; the N
 * summaries of all M variables form the SegmentBank.
 */
#pragma once

#include <sasa/diffnum/ops.hpp>
#include <sasa/diffnum/tensor.hpp>
#include <sasa/sample.hpp>

#include <Eigen/Core>

#include <cmath>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace sasa::segmenter {

using diffnum::Shape;
using diffnum::Tensor;

/// Suffix windows of @p x, shortest first: window tau-1 holds the last tau
/// values.
inline std::vector<std::vector<double>>
enumerate_segments(std::span<const double> x) {
  if (x.empty()) {
    throw InvalidInput("enumerate_segments: empty series");
  }
  const std::size_t N = x.size();
  std::vector<std::vector<double>> windows;
  windows.reserve(N);
  for (std::size_t tau = 1; tau <= N; ++tau) {
    windows.emplace_back(x.begin() + static_cast<std::ptrdiff_t>(N - tau),
                         x.end());
  }
  return windows;
}

/// Single-layer LSTM cell without peepholes. Gate columns are ordered
/// [input, forget, candidate, output], each hidden wide.
struct LstmParams {
  Tensor w_input;  ///< input_size x 4*hidden
  Tensor w_hidden; ///< hidden x 4*hidden
  Tensor bias;     ///< 1 x 4*hidden

  std::size_t input_size() const { return w_input.rows(); }
  std::size_t hidden() const { return w_hidden.rows(); }
  std::vector<Tensor> tensors() const { return {w_input, w_hidden, bias}; }

  /// Uniform in [-1/sqrt(hidden), 1/sqrt(hidden)], forget bias 1.
  template <typename Rng>
  static LstmParams init(std::size_t input_size, std::size_t hidden, Rng &rng) {
    const double a = 1.0 / std::sqrt(static_cast<double>(hidden));
    std::uniform_real_distribution<double> u(-a, a);
    auto draw = [&](std::size_t n) {
      std::vector<double> v(n);
      for (auto &x : v) {
        x = u(rng);
      }
      return v;
    };
    const std::size_t g = 4 * hidden;
    LstmParams p;
    p.w_input = Tensor::parameter({input_size, g}, draw(input_size * g));
    p.w_hidden = Tensor::parameter({hidden, g}, draw(hidden * g));
    auto b = draw(g);
    for (std::size_t k = hidden; k < 2 * hidden; ++k) {
      b[k] = 1.0;
    }
    p.bias = Tensor::parameter({1, g}, std::move(b));
    return p;
  }

  static LstmParams zeros(std::size_t input_size, std::size_t hidden) {
    const std::size_t g = 4 * hidden;
    return {Tensor::zeros({input_size, g}, true), Tensor::zeros({hidden, g}, true),
            Tensor::zeros({1, g}, true)};
  }

  std::size_t count() const {
    return w_input.size() + w_hidden.size() + bias.size();
  }
};

/// One variable's LSTM block.
using VarLSTMParams = LstmParams;

struct LstmState {
  Tensor h;
  Tensor c;
};

/// One recurrence step for a batch of rows: x is B x input_size, the state
/// B x hidden. Composed from primitive ops.
inline LstmState lstm_step(const Tensor &x, const LstmState &state,
                           const LstmParams &p) {
  using namespace diffnum;
  const std::size_t B = x.rows(), d = p.hidden();
  if (x.cols() != p.input_size() || state.h.rows() != B ||
      state.h.cols() != d || state.c.shape() != state.h.shape()) {
    throw InvalidInput("lstm_step: input/state shapes do not match params");
  }
  Tensor ones = Tensor::full({B, 1}, 1.0);
  Tensor pre = add_n({matmul(x, p.w_input), matmul(state.h, p.w_hidden),
                      matmul(ones, p.bias)});
  Tensor i = sigmoid(slice_cols(pre, 0, d));
  Tensor f = sigmoid(slice_cols(pre, d, d));
  Tensor g = diffnum::tanh(slice_cols(pre, 2 * d, d));
  Tensor o = sigmoid(slice_cols(pre, 3 * d, d));
  Tensor c = f * state.c + i * g;
  Tensor h = o * diffnum::tanh(c);
  return {h, c};
}

/// Segment representations of one sample: row i*N + (tau-1) holds h^i_tau.
struct SegmentBank {
  Tensor h;
  std::size_t variables = 0;
  std::size_t length = 0;

  std::size_t hidden() const { return h.cols(); }
  std::size_t row(std::size_t i, std::size_t tau) const {
    return i * length + (tau - 1);
  }
  /// N x d block of variable i.
  Tensor variable(std::size_t i) const {
    return diffnum::slice_rows(h, i * length, length);
  }
  double at(std::size_t i, std::size_t tau, std::size_t k) const {
    return h(row(i, tau), k);
  }
};

namespace detail {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVec = Eigen::Matrix<double, 1, Eigen::Dynamic>;

inline double sigm(double x) {
  if (x >= 0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

} // namespace detail

/// Final hidden state of every suffix window of every series in @p series
/// (all of length N), as one fused tape node with hand-written BPTT.
///
/// Output row s*N + (tau-1) is the summary of the length-tau suffix of
/// series s. Internally rows are window-major so that the windows active at
/// step t (those with tau >= N - t) form a contiguous tail block.
inline Tensor lstm_suffix_states(const std::vector<std::span<const double>> &series,
                                 const LstmParams &p) {
  using detail::RowMat;
  const std::size_t B = series.size();
  if (B == 0) {
    throw InvalidInput("lstm_suffix_states: empty batch");
  }
  if (p.input_size() != 1) {
    throw InvalidInput("lstm_suffix_states: segment LSTMs take scalar input");
  }
  const std::size_t N = series[0].size();
  if (N == 0) {
    throw InvalidInput("lstm_suffix_states: empty series");
  }
  for (const auto &s : series) {
    if (s.size() != N) {
      throw InvalidInput("lstm_suffix_states: series lengths differ");
    }
  }
  const std::size_t d = p.hidden();
  const auto D = static_cast<Eigen::Index>(d);
  const auto G = 4 * D;

  Eigen::Map<const detail::RowVec> wx(p.w_input.values().data(), G);
  Eigen::Map<const RowMat> wh(p.w_hidden.values().data(), D, G);
  Eigen::Map<const detail::RowVec> bias(p.bias.values().data(), G);

  struct Step {
    RowMat gates; // post-activation [i f g o]
    RowMat c;
    RowMat tc;
    RowMat h;
  };
  auto steps = std::make_shared<std::vector<Step>>(N);

  for (std::size_t t = 0; t < N; ++t) {
    const auto n = static_cast<Eigen::Index>((t + 1) * B);
    const auto Bi = static_cast<Eigen::Index>(B);
    Step &st = (*steps)[t];
    RowMat pre(n, G);
    for (Eigen::Index q = 0; q < n; ++q) {
      pre.row(q) = series[static_cast<std::size_t>(q) % B][t] * wx + bias;
    }
    if (t > 0) {
      pre.bottomRows(n - Bi).noalias() += (*steps)[t - 1].h * wh;
    }
    st.gates.resize(n, G);
    st.c.resize(n, D);
    st.tc.resize(n, D);
    st.h.resize(n, D);
    for (Eigen::Index q = 0; q < n; ++q) {
      for (Eigen::Index k = 0; k < D; ++k) {
        const double ig = detail::sigm(pre(q, k));
        const double fg = detail::sigm(pre(q, D + k));
        const double gg = std::tanh(pre(q, 2 * D + k));
        const double og = detail::sigm(pre(q, 3 * D + k));
        const double cprev = (t > 0 && q >= Bi) ? (*steps)[t - 1].c(q - Bi, k) : 0.0;
        const double c = fg * cprev + ig * gg;
        const double tc = std::tanh(c);
        st.gates(q, k) = ig;
        st.gates(q, D + k) = fg;
        st.gates(q, 2 * D + k) = gg;
        st.gates(q, 3 * D + k) = og;
        st.c(q, k) = c;
        st.tc(q, k) = tc;
        st.h(q, k) = og * tc;
      }
    }
  }

  // Window-major (tau-1)*B + s  ->  sample-major s*N + (tau-1).
  const RowMat &last = (*steps)[N - 1].h;
  std::vector<double> out(B * N * d);
  for (std::size_t s = 0; s < B; ++s) {
    for (std::size_t tau = 1; tau <= N; ++tau) {
      const auto r = static_cast<Eigen::Index>((tau - 1) * B + s);
      for (std::size_t k = 0; k < d; ++k) {
        out[(s * N + tau - 1) * d + k] = last(r, static_cast<Eigen::Index>(k));
      }
    }
  }

  std::vector<std::vector<double>> inputs(B);
  for (std::size_t s = 0; s < B; ++s) {
    inputs[s].assign(series[s].begin(), series[s].end());
  }

  return Tensor::from_op(
      "lstm_suffix_states", {B * N, d}, std::move(out),
      {p.w_input, p.w_hidden, p.bias},
      [steps, inputs = std::move(inputs), B, N, D, G](diffnum::Node &self) {
        using RowMat = detail::RowMat;
        diffnum::Node &wx_node = *self.parents[0];
        diffnum::Node &wh_node = *self.parents[1];
        diffnum::Node &b_node = *self.parents[2];
        Eigen::Map<const RowMat> wh(wh_node.values.data(), D, G);
        RowMat dwh = RowMat::Zero(D, G);
        detail::RowVec dwx = detail::RowVec::Zero(G);
        detail::RowVec db = detail::RowVec::Zero(G);
        const auto Bi = static_cast<Eigen::Index>(B);

        const auto n_last = static_cast<Eigen::Index>(N * B);
        RowMat dh(n_last, D);
        for (std::size_t s = 0; s < B; ++s) {
          for (std::size_t tau = 1; tau <= N; ++tau) {
            const auto r = static_cast<Eigen::Index>((tau - 1) * B + s);
            for (Eigen::Index k = 0; k < D; ++k) {
              dh(r, k) = self.grad[(s * N + tau - 1) * static_cast<std::size_t>(D) +
                                   static_cast<std::size_t>(k)];
            }
          }
        }
        RowMat dc = RowMat::Zero(n_last, D);

        for (std::size_t t = N; t-- > 0;) {
          const auto &st = (*steps)[t];
          const auto n = static_cast<Eigen::Index>((t + 1) * B);
          RowMat da(n, G);
          for (Eigen::Index q = 0; q < n; ++q) {
            for (Eigen::Index k = 0; k < D; ++k) {
              const double ig = st.gates(q, k);
              const double fg = st.gates(q, D + k);
              const double gg = st.gates(q, 2 * D + k);
              const double og = st.gates(q, 3 * D + k);
              const double tc = st.tc(q, k);
              const double cprev =
                  (t > 0 && q >= Bi) ? (*steps)[t - 1].c(q - Bi, k) : 0.0;
              const double dhq = dh(q, k);
              const double dcq = dc(q, k) + dhq * og * (1.0 - tc * tc);
              da(q, k) = dcq * gg * ig * (1.0 - ig);
              da(q, D + k) = dcq * cprev * fg * (1.0 - fg);
              da(q, 2 * D + k) = dcq * ig * (1.0 - gg * gg);
              da(q, 3 * D + k) = dhq * tc * og * (1.0 - og);
              dc(q, k) = dcq * fg; // now holds d c_prev
            }
          }
          for (Eigen::Index q = 0; q < n; ++q) {
            const double x = inputs[static_cast<std::size_t>(q) % B][t];
            dwx += x * da.row(q);
            db += da.row(q);
          }
          if (t > 0) {
            const auto &prev = (*steps)[t - 1];
            dwh.noalias() += prev.h.transpose() * da.bottomRows(n - Bi);
            RowMat dh_prev = da.bottomRows(n - Bi) * wh.transpose();
            RowMat dc_prev = dc.bottomRows(n - Bi);
            dh = std::move(dh_prev);
            dc = std::move(dc_prev);
          }
        }

        if (wx_node.requires_grad) {
          for (Eigen::Index k = 0; k < G; ++k) {
            wx_node.grad[static_cast<std::size_t>(k)] += dwx(k);
          }
        }
        if (wh_node.requires_grad) {
          Eigen::Map<RowMat>(wh_node.grad.data(), D, G) += dwh;
        }
        if (b_node.requires_grad) {
          for (Eigen::Index k = 0; k < G; ++k) {
            b_node.grad[static_cast<std::size_t>(k)] += db(k);
          }
        }
      });
}

/// Segment banks of a batch of samples. All samples must share M and N and
/// match the number of LSTM blocks.
inline std::vector<SegmentBank>
summarize_batch(const std::vector<const TimeSeriesSample *> &batch,
                const std::vector<LstmParams> &params) {
  if (batch.empty()) {
    throw InvalidInput("summarize: empty batch");
  }
  const std::size_t M = batch[0]->variables, N = batch[0]->length;
  if (params.size() != M) {
    throw InvalidInput("summarize: sample has " + std::to_string(M) +
                       " variables but " + std::to_string(params.size()) +
                       " LSTM blocks are configured");
  }
  for (const auto *s : batch) {
    if (s->variables != M || s->length != N) {
      throw InvalidInput("summarize: samples in a batch must share M and N");
    }
  }
  const std::size_t B = batch.size();
  std::vector<Tensor> per_var(M);
  for (std::size_t i = 0; i < M; ++i) {
    std::vector<std::span<const double>> xs;
    xs.reserve(B);
    for (const auto *s : batch) {
      xs.push_back(s->variable(i));
    }
    per_var[i] = lstm_suffix_states(xs, params[i]);
  }
  std::vector<SegmentBank> banks;
  banks.reserve(B);
  for (std::size_t s = 0; s < B; ++s) {
    std::vector<Tensor> rows;
    rows.reserve(M);
    for (std::size_t i = 0; i < M; ++i) {
      rows.push_back(diffnum::slice_rows(per_var[i], s * N, N));
    }
    banks.push_back({M == 1 ? rows[0] : diffnum::concat_rows(rows), M, N});
  }
  return banks;
}

inline SegmentBank summarize(const TimeSeriesSample &sample,
                             const std::vector<LstmParams> &params) {
  return summarize_batch({&sample}, params).front();
}

} // namespace sasa::segmenter
