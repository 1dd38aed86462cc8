#pragma once

#include "abupt/autodiff/graph.hpp"

#include <Eigen/Core>

#include <cmath>
#include <numbers>
#include <span>

namespace abupt::ad {

namespace detail {

template <class T>
void round_to_half(Matrix<T>& m) {
  for (Index i = 0; i < m.size(); ++i) {
    m.data()[i] = static_cast<T>(static_cast<float>(Eigen::half(static_cast<float>(m.data()[i]))));
  }
}

}  // namespace detail

/// x * w + b, with w stored (in x out) and b (1 x out).
template <class T>
Var<T> linear(const Var<T>& x, const Var<T>& w, const Var<T>& b) {
  require(x.cols() == w.rows(), "linear: input width " + std::to_string(x.cols()) +
                                    " does not match weight rows " + std::to_string(w.rows()));
  require(b.rows() == 1 && b.cols() == w.cols(), "linear: bias shape mismatch");
  Matrix<T> y(x.rows(), w.cols());
  y.noalias() = x.value() * w.value();
  y.rowwise() += b.value().row(0);
  Graph<T>& g = x.graph();
  if (g.half_activations()) detail::round_to_half(y);
  auto xn = x.ptr(), wn = w.ptr(), bn = b.ptr();
  return g.make(std::move(y), {&x, &w, &b}, [xn, wn, bn](const Matrix<T>& gy) {
    if (xn->needs_grad) xn->accumulate(gy * wn->value().transpose());
    if (wn->needs_grad) wn->accumulate(xn->value().transpose() * gy);
    if (bn->needs_grad) bn->accumulate(gy.colwise().sum());
  });
}

template <class T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), "add: shape mismatch");
  Matrix<T> y = a.value() + b.value();
  auto an = a.ptr(), bn = b.ptr();
  return a.graph().make(std::move(y), {&a, &b}, [an, bn](const Matrix<T>& gy) {
    an->accumulate(gy);
    bn->accumulate(gy);
  });
}

template <class T>
Var<T> scale(const Var<T>& a, T s) {
  Matrix<T> y = a.value() * s;
  auto an = a.ptr();
  return a.graph().make(std::move(y), {&a}, [an, s](const Matrix<T>& gy) { an->accumulate(gy * s); });
}

/// Tanh-approximated GELU.
template <class T>
Var<T> gelu(const Var<T>& x) {
  const T c = static_cast<T>(std::sqrt(2.0 / std::numbers::pi));
  const T k = static_cast<T>(0.044715);
  const auto& xv = x.value().array();
  Matrix<T> th = (c * (xv + k * xv.cube())).tanh().matrix();
  Matrix<T> y = (static_cast<T>(0.5) * xv * (static_cast<T>(1) + th.array())).matrix();
  auto xn = x.ptr();
  Graph<T>& g = x.graph();
  if (!g.recording()) return g.make(std::move(y), {&x}, nullptr);
  return g.make(std::move(y), {&x}, [xn, th = std::move(th), c, k](const Matrix<T>& gy) {
    const auto& xa = xn->value().array();
    const auto t = th.array();
    const auto dydx = static_cast<T>(0.5) * (static_cast<T>(1) + t) +
                      static_cast<T>(0.5) * xa * (static_cast<T>(1) - t.square()) * c *
                          (static_cast<T>(1) + static_cast<T>(3) * k * xa.square());
    xn->accumulate((gy.array() * dydx).matrix());
  });
}

/// Row-wise layer normalization with affine gain (1 x d) and shift (1 x d).
template <class T>
Var<T> layer_norm(const Var<T>& x, const Var<T>& gain, const Var<T>& shift, T eps = T(1e-6)) {
  const Index n = x.rows(), d = x.cols();
  require(gain.cols() == d && shift.cols() == d, "layer_norm: parameter width mismatch");
  const Matrix<T>& xv = x.value();
  Matrix<T> xhat(n, d);
  Eigen::Matrix<T, Eigen::Dynamic, 1> rstd(n);
  for (Index i = 0; i < n; ++i) {
    const T mu = xv.row(i).mean();
    const T var = (xv.row(i).array() - mu).square().mean();
    rstd(i) = T(1) / std::sqrt(var + eps);
    xhat.row(i) = (xv.row(i).array() - mu) * rstd(i);
  }
  Matrix<T> y = (xhat.array().rowwise() * gain.value().row(0).array()).matrix();
  y.rowwise() += shift.value().row(0);
  auto xn = x.ptr(), gn = gain.ptr(), sn = shift.ptr();
  Graph<T>& g = x.graph();
  if (!g.recording()) return g.make(std::move(y), {&x, &gain, &shift}, nullptr);
  return g.make(std::move(y), {&x, &gain, &shift},
                [xn, gn, sn, xhat = std::move(xhat), rstd = std::move(rstd)](const Matrix<T>& gy) {
                  if (gn->needs_grad) gn->accumulate((gy.array() * xhat.array()).colwise().sum().matrix());
                  if (sn->needs_grad) sn->accumulate(gy.colwise().sum());
                  if (!xn->needs_grad) return;
                  Matrix<T> dxhat = (gy.array().rowwise() * gn->value().row(0).array()).matrix();
                  const Index d = gy.cols();
                  Matrix<T> dx(gy.rows(), d);
                  for (Index i = 0; i < gy.rows(); ++i) {
                    const T m1 = dxhat.row(i).mean();
                    const T m2 = dxhat.row(i).dot(xhat.row(i)) / static_cast<T>(d);
                    dx.row(i) = rstd(i) * (dxhat.row(i).array() - m1 - xhat.row(i).array() * m2);
                  }
                  xn->accumulate(dx);
                });
}

template <class T>
Var<T> concat_cols(const Var<T>& a, const Var<T>& b) {
  require(a.rows() == b.rows(), "concat_cols: row mismatch");
  Matrix<T> y(a.rows(), a.cols() + b.cols());
  y.leftCols(a.cols()) = a.value();
  y.rightCols(b.cols()) = b.value();
  auto an = a.ptr(), bn = b.ptr();
  const Index ca = a.cols(), cb = b.cols();
  return a.graph().make(std::move(y), {&a, &b}, [an, bn, ca, cb](const Matrix<T>& gy) {
    if (an->needs_grad) an->accumulate(gy.leftCols(ca));
    if (bn->needs_grad) bn->accumulate(gy.rightCols(cb));
  });
}

template <class T>
Var<T> concat_rows(const Var<T>& a, const Var<T>& b) {
  require(a.cols() == b.cols(), "concat_rows: column mismatch");
  Matrix<T> y(a.rows() + b.rows(), a.cols());
  y.topRows(a.rows()) = a.value();
  y.bottomRows(b.rows()) = b.value();
  auto an = a.ptr(), bn = b.ptr();
  const Index ra = a.rows(), rb = b.rows();
  return a.graph().make(std::move(y), {&a, &b}, [an, bn, ra, rb](const Matrix<T>& gy) {
    if (an->needs_grad) an->accumulate(gy.topRows(ra));
    if (bn->needs_grad) bn->accumulate(gy.bottomRows(rb));
  });
}

template <class T>
Var<T> slice_cols(const Var<T>& a, Index begin, Index count) {
  require(begin >= 0 && begin + count <= a.cols(), "slice_cols: out of range");
  Matrix<T> y = a.value().middleCols(begin, count);
  auto an = a.ptr();
  const Index rows = a.rows(), cols = a.cols();
  return a.graph().make(std::move(y), {&a}, [an, begin, count, rows, cols](const Matrix<T>& gy) {
    Matrix<T> g = Matrix<T>::Zero(rows, cols);
    g.middleCols(begin, count) = gy;
    an->accumulate(g);
  });
}

template <class T>
Var<T> slice_rows(const Var<T>& a, Index begin, Index count) {
  require(begin >= 0 && begin + count <= a.rows(), "slice_rows: out of range");
  Matrix<T> y = a.value().middleRows(begin, count);
  auto an = a.ptr();
  const Index rows = a.rows(), cols = a.cols();
  return a.graph().make(std::move(y), {&a}, [an, begin, count, rows, cols](const Matrix<T>& gy) {
    Matrix<T> g = Matrix<T>::Zero(rows, cols);
    g.middleRows(begin, count) = gy;
    an->accumulate(g);
  });
}

template <class T>
Var<T> gather_rows(const Var<T>& a, std::span<const Index> ids) {
  const Index n = static_cast<Index>(ids.size());
  Matrix<T> y(n, a.cols());
  for (Index i = 0; i < n; ++i) {
    require(ids[i] >= 0 && ids[i] < a.rows(), "gather_rows: index out of range");
    y.row(i) = a.value().row(ids[i]);
  }
  auto an = a.ptr();
  IndexList idx(ids.begin(), ids.end());
  const Index rows = a.rows(), cols = a.cols();
  return a.graph().make(std::move(y), {&a}, [an, idx = std::move(idx), rows, cols](const Matrix<T>& gy) {
    Matrix<T> g = Matrix<T>::Zero(rows, cols);
    for (std::size_t i = 0; i < idx.size(); ++i) g.row(idx[i]) += gy.row(static_cast<Index>(i));
    an->accumulate(g);
  });
}

/// Mean of rows grouped by `segment[i]` into `segments` outputs. Every
/// segment must receive at least one row.
template <class T>
Var<T> segment_mean(const Var<T>& x, std::span<const Index> segment, Index segments) {
  require(static_cast<Index>(segment.size()) == x.rows(), "segment_mean: one segment id per row");
  Matrix<T> y = Matrix<T>::Zero(segments, x.cols());
  std::vector<T> counts(static_cast<std::size_t>(segments), T(0));
  for (Index i = 0; i < x.rows(); ++i) {
    const Index s = segment[i];
    require(s >= 0 && s < segments, "segment_mean: segment id out of range");
    y.row(s) += x.value().row(i);
    counts[static_cast<std::size_t>(s)] += T(1);
  }
  for (Index s = 0; s < segments; ++s) {
    require(counts[static_cast<std::size_t>(s)] > T(0), "segment_mean: empty segment");
    y.row(s) /= counts[static_cast<std::size_t>(s)];
  }
  auto xn = x.ptr();
  IndexList seg(segment.begin(), segment.end());
  return x.graph().make(std::move(y), {&x},
                        [xn, seg = std::move(seg), counts = std::move(counts)](const Matrix<T>& gy) {
                          Matrix<T> g(static_cast<Index>(seg.size()), gy.cols());
                          for (std::size_t i = 0; i < seg.size(); ++i) {
                            g.row(static_cast<Index>(i)) =
                                gy.row(seg[i]) / counts[static_cast<std::size_t>(seg[i])];
                          }
                          xn->accumulate(g);
                        });
}

/// Mean squared error over the selected rows and columns of `pred` against a
/// constant target. Returns a 1x1 value.
template <class T>
Var<T> masked_mse(const Var<T>& pred, const Matrix<T>& target, std::span<const Index> rows,
                  std::span<const Index> cols) {
  require(pred.rows() == target.rows() && pred.cols() == target.cols(), "masked_mse: shape mismatch");
  require(!rows.empty() && !cols.empty(), "masked_mse: empty mask");
  const T denom = static_cast<T>(rows.size() * cols.size());
  T sum = 0;
  for (Index r : rows) {
    for (Index c : cols) {
      const T e = pred.value()(r, c) - target(r, c);
      sum += e * e;
    }
  }
  Matrix<T> y(1, 1);
  y(0, 0) = sum / denom;
  auto pn = pred.ptr();
  IndexList rr(rows.begin(), rows.end()), cc(cols.begin(), cols.end());
  return pred.graph().make(
      std::move(y), {&pred}, [pn, target, rr = std::move(rr), cc = std::move(cc), denom](const Matrix<T>& gy) {
        Matrix<T> g = Matrix<T>::Zero(target.rows(), target.cols());
        const T s = T(2) * gy(0, 0) / denom;
        for (Index r : rr) {
          for (Index c : cc) g(r, c) = s * (pn->value()(r, c) - target(r, c));
        }
        pn->accumulate(g);
      });
}

/// Sign-preserving square root of each row's magnitude after dividing by
/// `sigma` componentwise: v = x / sigma, y = v / sqrt(|v|), 0 -> 0.
template <class T>
Var<T> sqrt_magnitude(const Var<T>& x, const RowVector<T>& sigma) {
  require(sigma.size() == x.cols(), "sqrt_magnitude: sigma width mismatch");
  Matrix<T> v = (x.value().array().rowwise() / sigma.array()).matrix();
  Matrix<T> y = Matrix<T>::Zero(v.rows(), v.cols());
  for (Index i = 0; i < v.rows(); ++i) {
    const T r = v.row(i).norm();
    if (r > T(0)) y.row(i) = v.row(i) / std::sqrt(r);
  }
  auto xn = x.ptr();
  return x.graph().make(std::move(y), {&x}, [xn, v = std::move(v), sigma](const Matrix<T>& gy) {
    Matrix<T> g = Matrix<T>::Zero(v.rows(), v.cols());
    const T floor = static_cast<T>(1e-8);
    for (Index i = 0; i < v.rows(); ++i) {
      const T r = std::max(v.row(i).norm(), floor);
      const RowVector<T> u = v.row(i) / r;
      g.row(i) = (gy.row(i) - T(0.5) * u.dot(gy.row(i)) * u) / std::sqrt(r);
    }
    xn->accumulate((g.array().rowwise() / sigma.array()).matrix());
  });
}

template <class T>
Var<T> sum_scalars(const std::vector<Var<T>>& xs) {
  require(!xs.empty(), "sum_scalars: no inputs");
  Var<T> acc = xs.front();
  for (std::size_t i = 1; i < xs.size(); ++i) acc = add(acc, xs[i]);
  return acc;
}

}  // namespace abupt::ad
