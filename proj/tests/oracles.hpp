// SPDX-License-Identifier: Apache-2.0
// Independent reference implementations used by the tests. They share no
// code with the library beyond plain data types.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

namespace oracle {

using Vec = std::vector<double>;
using Mat = std::vector<Vec>;

/// Euclidean projection onto the simplex by bisection on the threshold:
/// sum_i max(z_i - tau, 0) = 1 is continuous and decreasing in tau.
inline Vec simplex_projection(const Vec &z) {
  double lo = *std::min_element(z.begin(), z.end()) - 1.0;
  double hi = *std::max_element(z.begin(), z.end());
  auto mass = [&](double tau) {
    double s = 0.0;
    for (double x : z) s += std::max(x - tau, 0.0);
    return s;
  };
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (mass(mid) > 1.0 ? lo : hi) = mid;
  }
  const double tau = 0.5 * (lo + hi);
  Vec p(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) p[i] = std::max(z[i] - tau, 0.0);
  return p;
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// Plain LSTM run over one input sequence; returns the final hidden state.
/// Weight layout: w_in [p][4d], w_h [d][4d], b [4d], gates i, f, g, o.
inline Vec lstm_final(const Mat &xs, const Mat &w_in, const Mat &w_h, const Vec &b,
                      std::size_t d) {
  Vec h(d, 0.0), c(d, 0.0);
  for (const auto &x : xs) {
    Vec pre(4 * d);
    for (std::size_t k = 0; k < 4 * d; ++k) {
      double s = b[k];
      for (std::size_t q = 0; q < x.size(); ++q) s += x[q] * w_in[q][k];
      for (std::size_t q = 0; q < d; ++q) s += h[q] * w_h[q][k];
      pre[k] = s;
    }
    for (std::size_t k = 0; k < d; ++k) {
      const double i = sigmoid(pre[k]), f = sigmoid(pre[d + k]),
                   g = std::tanh(pre[2 * d + k]), o = sigmoid(pre[3 * d + k]);
      c[k] = f * c[k] + i * g;
      h[k] = o * std::tanh(c[k]);
    }
  }
  return h;
}

inline Mat matmul(const Mat &a, const Mat &b) {
  Mat out(a.size(), Vec(b[0].size(), 0.0));
  for (std::size_t r = 0; r < a.size(); ++r)
    for (std::size_t k = 0; k < b.size(); ++k)
      for (std::size_t c = 0; c < b[0].size(); ++c) out[r][c] += a[r][k] * b[k][c];
  return out;
}

inline double dot(const Vec &a, const Vec &b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

inline double cosine(const Vec &a, const Vec &b, double eps = 1e-8) {
  return dot(a, b) / (std::max(std::sqrt(dot(a, a)), eps) * std::max(std::sqrt(dot(b, b)), eps));
}

struct Intra {
  Vec alpha;
  Vec z;
};

/// Segment attention for one variable from its N x d state block.
inline Intra intra(const Mat &h, const Mat &wq, const Mat &wk, const Mat &wv) {
  const std::size_t N = h.size(), d = h[0].size();
  auto q = matmul(h, wq), k = matmul(h, wk), v = matmul(h, wv);
  Vec u(N, 0.0);
  for (std::size_t t = 0; t < N; ++t) {
    for (std::size_t s = 0; s < N; ++s) u[t] += dot(q[t], k[s]);
    u[t] /= static_cast<double>(N) * std::sqrt(static_cast<double>(d));
  }
  Intra out{simplex_projection(u), Vec(d, 0.0)};
  for (std::size_t t = 0; t < N; ++t)
    for (std::size_t c = 0; c < d; ++c) out.z[c] += out.alpha[t] * v[t][c];
  return out;
}

/// Exact pairwise AUC with ties counted as one half.
inline double auc(const Vec &scores, const Vec &labels) {
  double wins = 0.0, pairs = 0.0;
  for (std::size_t a = 0; a < scores.size(); ++a) {
    if (labels[a] != 1.0) continue;
    for (std::size_t b = 0; b < scores.size(); ++b) {
      if (labels[b] != 0.0) continue;
      pairs += 1.0;
      wins += scores[a] > scores[b] ? 1.0 : scores[a] == scores[b] ? 0.5 : 0.0;
    }
  }
  return wins / pairs;
}

} // namespace oracle
