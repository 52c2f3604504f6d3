// SPDX-License-Identifier: Apache-2.0
/**
 * @file   ops.hpp
 * @brief  Differentiable op vocabulary over diffnum::Tensor.
 *
 * No broadcasting beyond a scalar multiplier. Bias rows are added through a
 * matmul with a ones column instead.
 */
#pragma once

#include <sasa/diffnum/tensor.hpp>

#include <Eigen/Core>

#include <cmath>
#include <numeric>
#include <string>
#include <vector>

namespace sasa::diffnum {

namespace detail {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using CMapMat = Eigen::Map<const RowMat>;

inline CMapMat cmap(const std::vector<double> &v, Shape s) {
  return CMapMat(v.data(), static_cast<Eigen::Index>(s.rows),
                 static_cast<Eigen::Index>(s.cols));
}
inline MapMat map(std::vector<double> &v, Shape s) {
  return MapMat(v.data(), static_cast<Eigen::Index>(s.rows),
                static_cast<Eigen::Index>(s.cols));
}

inline void require_same_shape(const Tensor &a, const Tensor &b,
                               const char *op) {
  if (a.shape() != b.shape()) {
    throw InvalidInput(std::string(op) + ": shape mismatch " +
                       to_string(a.shape()) + " vs " + to_string(b.shape()));
  }
}

inline void require_nonempty(const Tensor &t, const char *op) {
  if (t.size() == 0) {
    throw InvalidInput(std::string(op) + ": empty tensor");
  }
}

/// Elementwise unary op with derivative expressed through input x and
/// output y.
template <typename F, typename D>
Tensor unary(const char *name, const Tensor &a, F f, D dfdx) {
  std::vector<double> out(a.size());
  auto in = a.values();
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k] = f(in[k]);
  }
  return Tensor::from_op(name, a.shape(), std::move(out), {a},
                         [dfdx](Node &self) {
                           Node &x = *self.parents[0];
                           if (!x.requires_grad) {
                             return;
                           }
                           for (std::size_t k = 0; k < self.grad.size(); ++k) {
                             x.grad[k] += self.grad[k] *
                                          dfdx(x.values[k], self.values[k]);
                           }
                         });
}

} // namespace detail

inline Tensor matmul(const Tensor &a, const Tensor &b) {
  if (a.cols() != b.rows()) {
    throw InvalidInput("matmul: inner dimensions differ (" +
                       to_string(a.shape()) + " x " + to_string(b.shape()) +
                       ")");
  }
  const Shape out_shape{a.rows(), b.cols()};
  std::vector<double> out(out_shape.size(), 0.0);
  if (a.cols() > 0) {
    detail::map(out, out_shape).noalias() =
        detail::cmap(a.node().values, a.shape()) *
        detail::cmap(b.node().values, b.shape());
  }
  return Tensor::from_op(
      "matmul", out_shape, std::move(out), {a, b}, [](Node &self) {
        Node &x = *self.parents[0];
        Node &y = *self.parents[1];
        auto g = detail::cmap(self.grad, self.shape);
        if (x.requires_grad) {
          detail::map(x.grad, x.shape).noalias() +=
              g * detail::cmap(y.values, y.shape).transpose();
        }
        if (y.requires_grad) {
          detail::map(y.grad, y.shape).noalias() +=
              detail::cmap(x.values, x.shape).transpose() * g;
        }
      });
}

inline Tensor add(const Tensor &a, const Tensor &b) {
  detail::require_same_shape(a, b, "add");
  std::vector<double> out(a.size());
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k] = a.values()[k] + b.values()[k];
  }
  return Tensor::from_op("add", a.shape(), std::move(out), {a, b},
                         [](Node &self) {
                           for (int p = 0; p < 2; ++p) {
                             Node &x = *self.parents[p];
                             if (!x.requires_grad) {
                               continue;
                             }
                             for (std::size_t k = 0; k < self.grad.size(); ++k) {
                               x.grad[k] += self.grad[k];
                             }
                           }
                         });
}

inline Tensor sub(const Tensor &a, const Tensor &b) {
  detail::require_same_shape(a, b, "sub");
  std::vector<double> out(a.size());
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k] = a.values()[k] - b.values()[k];
  }
  return Tensor::from_op("sub", a.shape(), std::move(out), {a, b},
                         [](Node &self) {
                           Node &x = *self.parents[0];
                           Node &y = *self.parents[1];
                           for (std::size_t k = 0; k < self.grad.size(); ++k) {
                             if (x.requires_grad) {
                               x.grad[k] += self.grad[k];
                             }
                             if (y.requires_grad) {
                               y.grad[k] -= self.grad[k];
                             }
                           }
                         });
}

inline Tensor mul(const Tensor &a, const Tensor &b) {
  detail::require_same_shape(a, b, "mul");
  std::vector<double> out(a.size());
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k] = a.values()[k] * b.values()[k];
  }
  return Tensor::from_op("mul", a.shape(), std::move(out), {a, b},
                         [](Node &self) {
                           Node &x = *self.parents[0];
                           Node &y = *self.parents[1];
                           for (std::size_t k = 0; k < self.grad.size(); ++k) {
                             if (x.requires_grad) {
                               x.grad[k] += self.grad[k] * y.values[k];
                             }
                             if (y.requires_grad) {
                               y.grad[k] += self.grad[k] * x.values[k];
                             }
                           }
                         });
}

inline Tensor scale(const Tensor &a, double factor) {
  return detail::unary(
      "scale", a, [factor](double x) { return factor * x; },
      [factor](double, double) { return factor; });
}

inline Tensor sigmoid(const Tensor &a) {
  return detail::unary(
      "sigmoid", a,
      [](double x) {
        if (x >= 0) {
          return 1.0 / (1.0 + std::exp(-x));
        }
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

inline Tensor tanh(const Tensor &a) {
  return detail::unary(
      "tanh", a, [](double x) { return std::tanh(x); },
      [](double, double y) { return 1.0 - y * y; });
}

/// Elementwise square root; inputs must be positive.
inline Tensor sqrt(const Tensor &a) {
  for (double x : a.values()) {
    if (!(x > 0.0)) {
      throw InvalidInput("sqrt: non-positive input");
    }
  }
  return detail::unary(
      "sqrt", a, [](double x) { return std::sqrt(x); },
      [](double, double y) { return 0.5 / y; });
}

inline Tensor operator+(const Tensor &a, const Tensor &b) { return add(a, b); }
inline Tensor operator-(const Tensor &a, const Tensor &b) { return sub(a, b); }
inline Tensor operator*(const Tensor &a, const Tensor &b) { return mul(a, b); }
inline Tensor operator*(double f, const Tensor &a) { return scale(a, f); }

/// Sum of any number of same-shape tensors in one node.
inline Tensor add_n(const std::vector<Tensor> &xs) {
  if (xs.empty()) {
    throw InvalidInput("add_n: no operands");
  }
  std::vector<double> out(xs[0].size(), 0.0);
  for (const auto &x : xs) {
    detail::require_same_shape(xs[0], x, "add_n");
    for (std::size_t k = 0; k < out.size(); ++k) {
      out[k] += x.values()[k];
    }
  }
  return Tensor::from_op("add_n", xs[0].shape(), std::move(out), xs,
                         [](Node &self) {
                           for (auto &p : self.parents) {
                             if (!p->requires_grad) {
                               continue;
                             }
                             for (std::size_t k = 0; k < self.grad.size(); ++k) {
                               p->grad[k] += self.grad[k];
                             }
                           }
                         });
}

enum class Axis {
  all,  ///< reduce to 1x1
  rows, ///< collapse the row index: RxC -> 1xC
  cols, ///< collapse the column index: RxC -> Rx1
};

inline Tensor sum(const Tensor &t, Axis axis = Axis::all) {
  detail::require_nonempty(t, "sum");
  const std::size_t R = t.rows(), C = t.cols();
  Shape out_shape = axis == Axis::all    ? Shape{1, 1}
                    : axis == Axis::rows ? Shape{1, C}
                                         : Shape{R, 1};
  std::vector<double> out(out_shape.size(), 0.0);
  auto v = t.values();
  for (std::size_t r = 0; r < R; ++r) {
    for (std::size_t c = 0; c < C; ++c) {
      const std::size_t o = axis == Axis::all ? 0 : axis == Axis::rows ? c : r;
      out[o] += v[r * C + c];
    }
  }
  return Tensor::from_op(
      "sum", out_shape, std::move(out), {t}, [axis, R, C](Node &self) {
        Node &x = *self.parents[0];
        if (!x.requires_grad) {
          return;
        }
        for (std::size_t r = 0; r < R; ++r) {
          for (std::size_t c = 0; c < C; ++c) {
            const std::size_t o =
                axis == Axis::all ? 0 : axis == Axis::rows ? c : r;
            x.grad[r * C + c] += self.grad[o];
          }
        }
      });
}

inline Tensor mean(const Tensor &t, Axis axis = Axis::all) {
  detail::require_nonempty(t, "mean");
  const std::size_t n = axis == Axis::all    ? t.size()
                        : axis == Axis::rows ? t.rows()
                                             : t.cols();
  return scale(sum(t, axis), 1.0 / static_cast<double>(n));
}

inline Tensor transpose(const Tensor &t) {
  const std::size_t R = t.rows(), C = t.cols();
  std::vector<double> out(t.size());
  for (std::size_t r = 0; r < R; ++r) {
    for (std::size_t c = 0; c < C; ++c) {
      out[c * R + r] = t(r, c);
    }
  }
  return Tensor::from_op("transpose", {C, R}, std::move(out), {t},
                         [R, C](Node &self) {
                           Node &x = *self.parents[0];
                           if (!x.requires_grad) {
                             return;
                           }
                           for (std::size_t r = 0; r < R; ++r) {
                             for (std::size_t c = 0; c < C; ++c) {
                               x.grad[r * C + c] += self.grad[c * R + r];
                             }
                           }
                         });
}

/// Rows [begin, begin + count).
inline Tensor slice_rows(const Tensor &t, std::size_t begin,
                         std::size_t count) {
  if (begin + count > t.rows()) {
    throw InvalidInput("slice_rows: range exceeds " + to_string(t.shape()));
  }
  const std::size_t C = t.cols();
  auto v = t.values();
  std::vector<double> out(v.begin() + static_cast<std::ptrdiff_t>(begin * C),
                          v.begin() +
                              static_cast<std::ptrdiff_t>((begin + count) * C));
  return Tensor::from_op("slice_rows", {count, C}, std::move(out), {t},
                         [begin, C](Node &self) {
                           Node &x = *self.parents[0];
                           if (!x.requires_grad) {
                             return;
                           }
                           for (std::size_t k = 0; k < self.grad.size(); ++k) {
                             x.grad[begin * C + k] += self.grad[k];
                           }
                         });
}

/// Columns [begin, begin + count).
inline Tensor slice_cols(const Tensor &t, std::size_t begin,
                         std::size_t count) {
  if (begin + count > t.cols()) {
    throw InvalidInput("slice_cols: range exceeds " + to_string(t.shape()));
  }
  const std::size_t R = t.rows(), C = t.cols();
  std::vector<double> out(R * count);
  for (std::size_t r = 0; r < R; ++r) {
    for (std::size_t c = 0; c < count; ++c) {
      out[r * count + c] = t(r, begin + c);
    }
  }
  return Tensor::from_op("slice_cols", {R, count}, std::move(out), {t},
                         [begin, count, R, C](Node &self) {
                           Node &x = *self.parents[0];
                           if (!x.requires_grad) {
                             return;
                           }
                           for (std::size_t r = 0; r < R; ++r) {
                             for (std::size_t c = 0; c < count; ++c) {
                               x.grad[r * C + begin + c] +=
                                   self.grad[r * count + c];
                             }
                           }
                         });
}

/// Stack tensors with equal column counts vertically.
inline Tensor concat_rows(const std::vector<Tensor> &parts) {
  if (parts.empty()) {
    throw InvalidInput("concat_rows: no operands");
  }
  const std::size_t C = parts[0].cols();
  std::size_t R = 0;
  for (const auto &p : parts) {
    if (p.cols() != C) {
      throw InvalidInput("concat_rows: column counts differ");
    }
    R += p.rows();
  }
  std::vector<double> out;
  out.reserve(R * C);
  for (const auto &p : parts) {
    out.insert(out.end(), p.values().begin(), p.values().end());
  }
  return Tensor::from_op("concat_rows", {R, C}, std::move(out), parts,
                         [](Node &self) {
                           std::size_t offset = 0;
                           for (auto &p : self.parents) {
                             if (p->requires_grad) {
                               for (std::size_t k = 0; k < p->grad.size(); ++k) {
                                 p->grad[k] += self.grad[offset + k];
                               }
                             }
                             offset += p->grad.size();
                           }
                         });
}

/// Join tensors with equal row counts side by side.
inline Tensor concat_cols(const std::vector<Tensor> &parts) {
  if (parts.empty()) {
    throw InvalidInput("concat_cols: no operands");
  }
  const std::size_t R = parts[0].rows();
  std::size_t C = 0;
  for (const auto &p : parts) {
    if (p.rows() != R) {
      throw InvalidInput("concat_cols: row counts differ");
    }
    C += p.cols();
  }
  std::vector<double> out(R * C);
  std::size_t c0 = 0;
  for (const auto &p : parts) {
    for (std::size_t r = 0; r < R; ++r) {
      for (std::size_t c = 0; c < p.cols(); ++c) {
        out[r * C + c0 + c] = p(r, c);
      }
    }
    c0 += p.cols();
  }
  return Tensor::from_op("concat_cols", {R, C}, std::move(out), parts,
                         [R, C](Node &self) {
                           std::size_t c0 = 0;
                           for (auto &p : self.parents) {
                             const std::size_t pc = p->shape.cols;
                             if (p->requires_grad) {
                               for (std::size_t r = 0; r < R; ++r) {
                                 for (std::size_t c = 0; c < pc; ++c) {
                                   p->grad[r * pc + c] +=
                                       self.grad[r * C + c0 + c];
                                 }
                               }
                             }
                             c0 += pc;
                           }
                         });
}

/// Euclidean norm of every row, RxC -> Rx1. A zero row gets the zero
/// subgradient.
inline Tensor row_norms(const Tensor &t) {
  const std::size_t R = t.rows(), C = t.cols();
  std::vector<double> out(R, 0.0);
  for (std::size_t r = 0; r < R; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < C; ++c) {
      s += t(r, c) * t(r, c);
    }
    out[r] = std::sqrt(s);
  }
  return Tensor::from_op("row_norms", {R, 1}, std::move(out), {t},
                         [C](Node &self) {
                           Node &x = *self.parents[0];
                           if (!x.requires_grad) {
                             return;
                           }
                           for (std::size_t r = 0; r < self.values.size(); ++r) {
                             const double n = self.values[r];
                             if (n == 0.0) {
                               continue;
                             }
                             for (std::size_t c = 0; c < C; ++c) {
                               x.grad[r * C + c] +=
                                   self.grad[r] * x.values[r * C + c] / n;
                             }
                           }
                         });
}

/// u.v / (max(|u|, eps) * max(|v|, eps)) for two vectors of equal length.
inline Tensor cosine(const Tensor &u, const Tensor &v, double eps = 1e-8) {
  if (!u.is_vector() || !v.is_vector() || u.size() != v.size() ||
      u.size() == 0) {
    throw InvalidInput("cosine: operands must be vectors of equal length");
  }
  const std::size_t d = u.size();
  auto a = u.values(), b = v.values();
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t k = 0; k < d; ++k) {
    dot += a[k] * b[k];
    na += a[k] * a[k];
    nb += b[k] * b[k];
  }
  na = std::sqrt(na);
  nb = std::sqrt(nb);
  const double da = std::max(na, eps), db = std::max(nb, eps);
  const double out = dot / (da * db);
  return Tensor::from_op(
      "cosine", {1, 1}, {out}, {u, v},
      [d, dot, na, nb, da, db, eps](Node &self) {
        const double g = self.grad[0];
        Node &x = *self.parents[0];
        Node &y = *self.parents[1];
        // d/dx [x.y / (max(|x|,eps) max(|y|,eps))]
        for (std::size_t k = 0; k < d; ++k) {
          if (x.requires_grad) {
            double dk = y.values[k] / (da * db);
            if (na > eps) {
              dk -= dot * x.values[k] / (na * na * na * db);
            }
            x.grad[k] += g * dk;
          }
          if (y.requires_grad) {
            double dk = x.values[k] / (da * db);
            if (nb > eps) {
              dk -= dot * y.values[k] / (nb * nb * nb * da);
            }
            y.grad[k] += g * dk;
          }
        }
      });
}

/// Cosine of every row of @p a (R x d) against the vector @p v (length d),
/// returned as an R x 1 column. Same epsilon guard as cosine().
inline Tensor row_cosine(const Tensor &a, const Tensor &v, double eps = 1e-8) {
  const std::size_t R = a.rows(), d = a.cols();
  if (!v.is_vector() || v.size() != d || d == 0) {
    throw InvalidInput("row_cosine: vector length does not match row width");
  }
  auto vv = v.values();
  double nv = 0.0;
  for (double x : vv) {
    nv += x * x;
  }
  nv = std::sqrt(nv);
  const double dv = std::max(nv, eps);
  std::vector<double> dots(R, 0.0), norms(R, 0.0), out(R);
  for (std::size_t r = 0; r < R; ++r) {
    for (std::size_t k = 0; k < d; ++k) {
      dots[r] += a(r, k) * vv[k];
      norms[r] += a(r, k) * a(r, k);
    }
    norms[r] = std::sqrt(norms[r]);
    out[r] = dots[r] / (std::max(norms[r], eps) * dv);
  }
  return Tensor::from_op(
      "row_cosine", {R, 1}, std::move(out), {a, v},
      [R, d, nv, dv, eps, dots = std::move(dots),
       norms = std::move(norms)](Node &self) {
        Node &x = *self.parents[0];
        Node &y = *self.parents[1];
        for (std::size_t r = 0; r < R; ++r) {
          const double g = self.grad[r];
          if (g == 0.0) {
            continue;
          }
          const double dr = std::max(norms[r], eps);
          for (std::size_t k = 0; k < d; ++k) {
            const double xk = x.values[r * d + k];
            const double yk = y.values[k];
            if (x.requires_grad) {
              double dk = yk / (dr * dv);
              if (norms[r] > eps) {
                dk -= dots[r] * xk / (norms[r] * norms[r] * norms[r] * dv);
              }
              x.grad[r * d + k] += g * dk;
            }
            if (y.requires_grad) {
              double dk = xk / (dr * dv);
              if (nv > eps) {
                dk -= dots[r] * yk / (nv * nv * nv * dr);
              }
              y.grad[k] += g * dk;
            }
          }
        }
      });
}

/// Mean binary cross-entropy of probabilities @p pred against 0/1 targets,
/// with predictions clamped to [clamp, 1 - clamp]. Clamped entries pass no
/// gradient.
inline Tensor binary_cross_entropy(const Tensor &pred,
                                   const std::vector<double> &targets,
                                   double clamp = 1e-7) {
  detail::require_nonempty(pred, "binary_cross_entropy");
  if (pred.size() != targets.size()) {
    throw InvalidInput("binary_cross_entropy: target count mismatch");
  }
  const double n = static_cast<double>(targets.size());
  double loss = 0.0;
  for (std::size_t k = 0; k < targets.size(); ++k) {
    const double p = std::clamp(pred.values()[k], clamp, 1.0 - clamp);
    loss -= targets[k] * std::log(p) + (1.0 - targets[k]) * std::log(1.0 - p);
  }
  loss /= n;
  return Tensor::from_op(
      "binary_cross_entropy", {1, 1}, {loss}, {pred},
      [targets, clamp, n](Node &self) {
        Node &x = *self.parents[0];
        if (!x.requires_grad) {
          return;
        }
        for (std::size_t k = 0; k < targets.size(); ++k) {
          const double p = x.values[k];
          if (p < clamp || p > 1.0 - clamp) {
            continue;
          }
          const double y = targets[k];
          x.grad[k] += self.grad[0] * (-(y / p) + (1.0 - y) / (1.0 - p)) / n;
        }
      });
}

/// sqrt(mean((pred - target)^2)); the zero-error point gets the zero
/// subgradient.
inline Tensor root_mean_squared_error(const Tensor &pred,
                                      const std::vector<double> &targets) {
  detail::require_nonempty(pred, "root_mean_squared_error");
  if (pred.size() != targets.size()) {
    throw InvalidInput("root_mean_squared_error: target count mismatch");
  }
  const double n = static_cast<double>(targets.size());
  double s = 0.0;
  for (std::size_t k = 0; k < targets.size(); ++k) {
    const double e = pred.values()[k] - targets[k];
    s += e * e;
  }
  const double r = std::sqrt(s / n);
  return Tensor::from_op("root_mean_squared_error", {1, 1}, {r}, {pred},
                         [targets, n](Node &self) {
                           Node &x = *self.parents[0];
                           const double r = self.values[0];
                           if (!x.requires_grad || r == 0.0) {
                             return;
                           }
                           for (std::size_t k = 0; k < targets.size(); ++k) {
                             x.grad[k] += self.grad[0] *
                                          (x.values[k] - targets[k]) / (n * r);
                           }
                         });
}

} // namespace sasa::diffnum
