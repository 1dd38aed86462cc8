#pragma once

// Vorticity as the central-difference curl of the decoded velocity field.
//
// Query positions are expanded into seven copies (center, +x, -x, +y, -y,
// +z, -z shifted by delta network units), decoded in one pass, and the
// shifted velocity rows are combined into the curl. The network-space
// Jacobian is rescaled to physics units with the coordinate scale `a` and
// the velocity output scale `b`.

#include "abupt/model/chunked.hpp"
#include "abupt/physics/differential.hpp"

#include <array>
#include <span>
#include <vector>

namespace abupt::model {

inline constexpr double kDefaultCurlStep = 0.5;  // network units
inline constexpr Index kStencilCopies = 7;
inline constexpr Index kVelocityColumn = 1;  // volume channels: p, u(3), w(3)

/// [x; x+d e0; x-d e0; x+d e1; x-d e1; x+d e2; x-d e2], each block n rows.
inline std::vector<Vec3> curl_stencil_positions(std::span<const Vec3> x_net, double delta) {
  require(delta > 0.0, "curl stencil: step must be positive");
  std::vector<Vec3> pts(x_net.begin(), x_net.end());
  pts.reserve(x_net.size() * kStencilCopies);
  for (int axis = 0; axis < 3; ++axis) {
    for (double s : {delta, -delta}) {
      for (const auto& x : x_net) pts.push_back(physics::shifted(x, axis, s));
    }
  }
  return pts;
}

/// Physics-unit curl (n x 3) from stencil predictions laid out as in
/// curl_stencil_positions; velocity is read from columns [col, col + 3).
template <class T>
ad::Var<T> stencil_curl(const ad::Var<T>& stencil, Index n, double delta, const Vec3& a, const Vec3& b,
                        Index col = kVelocityColumn) {
  require(stencil.rows() == kStencilCopies * n, "stencil_curl: expected 7 stacked copies");
  require(stencil.cols() >= col + 3, "stencil_curl: not enough columns");
  // omega_i = sum over (comp, axis, sign) of sign * b_comp a_axis dU_comp/dx_axis.
  struct Term {
    int out, comp, axis;
    double coef;
  };
  std::vector<Term> terms;
  const std::array<std::array<int, 3>, 3> pairs{{{0, 2, 1}, {1, 0, 2}, {2, 1, 0}}};  // out, comp, axis
  for (const auto& p : pairs) {
    const int out = p[0], comp = p[1], axis = p[2];
    terms.push_back({out, comp, axis, b[comp] * a[axis] / (2.0 * delta)});
    terms.push_back({out, axis, comp, -b[axis] * a[comp] / (2.0 * delta)});
  }
  const Matrix<T>& u = stencil.value();
  Matrix<T> w = Matrix<T>::Zero(n, 3);
  for (const auto& t : terms) {
    const Index plus = (1 + 2 * t.axis) * n, minus = (2 + 2 * t.axis) * n;
    const T c = static_cast<T>(t.coef);
    w.col(t.out) += c * (u.col(col + t.comp).segment(plus, n) - u.col(col + t.comp).segment(minus, n));
  }
  auto sn = stencil.ptr();
  const Index rows = stencil.rows(), cols = stencil.cols();
  return stencil.graph().make(std::move(w), {&stencil}, [sn, terms, n, col, rows, cols](const Matrix<T>& gw) {
    Matrix<T> g = Matrix<T>::Zero(rows, cols);
    for (const auto& t : terms) {
      const Index plus = (1 + 2 * t.axis) * n, minus = (2 + 2 * t.axis) * n;
      const T c = static_cast<T>(t.coef);
      g.col(col + t.comp).segment(plus, n) += c * gw.col(t.out);
      g.col(col + t.comp).segment(minus, n) -= c * gw.col(t.out);
    }
    sn->accumulate(g);
  });
}

template <class T>
struct DivfreeDecode {
  ad::Var<T> center;     // n x 7 normalized predictions at the query points
  ad::Var<T> vorticity;  // n x 3 curl of the decoded velocity, physics units
};

/// Decodes volume positions with the curl vorticity head.
template <class T>
DivfreeDecode<T> decode_divfree(ad::Graph<T>& g, const AbUpt<T>& model, const attn::KVCache<T>& cache,
                                std::span<const Vec3> x_net, double delta, const Vec3& a, const Vec3& b) {
  const Index n = static_cast<Index>(x_net.size());
  const auto pts = curl_stencil_positions(x_net, delta);
  auto stencil = model.decode(g, cache, Branch::kVolume, pts);
  return {ad::slice_rows(stencil, 0, n), stencil_curl(stencil, n, delta, a, b)};
}

/// Velocity field of a predictor in network coordinates and network output
/// units, evaluated in chunks; usable as a physics::BatchField.
template <class T>
physics::BatchField velocity_field(const AnchorPredictor<T>& predictor, Index chunk) {
  return [&predictor, chunk](std::span<const Vec3> x_net) {
    const Matrix<T> out = predictor.predict_network(Branch::kVolume, x_net, chunk);
    std::vector<Vec3> u(x_net.size());
    for (std::size_t i = 0; i < u.size(); ++i) {
      const auto r = static_cast<Index>(i);
      u[i] = Vec3(static_cast<double>(out(r, kVelocityColumn)), static_cast<double>(out(r, kVelocityColumn + 1)),
                  static_cast<double>(out(r, kVelocityColumn + 2)));
    }
    return u;
  };
}

}  // namespace abupt::model
