#pragma once

// Central-difference derivatives of pointwise vector fields, the curl,
// the normalization Jacobian correction and the divergence of a predicted
// vorticity field.
//
// Stencil arithmetic is done in double regardless of the precision the
// field is evaluated in. Stencil points are built coordinate by coordinate,
// so x + d*e_j + d*e_k is the same bit pattern whichever axis is shifted
// first; batched routines evaluate each distinct point once. Together these
// make the mixed second differences inside div(curl u) cancel.

#include "abupt/core/error.hpp"
#include "abupt/core/types.hpp"

#include <array>
#include <functional>
#include <map>
#include <span>
#include <tuple>
#include <vector>

namespace abupt::physics {

/// Pointwise vector field: position -> 3-vector.
using VectorField = std::function<Vec3(const Vec3&)>;

/// Batched vector field: evaluates one value per position. Implementations
/// must be pointwise (a value never depends on the other positions).
using BatchField = std::function<std::vector<Vec3>(std::span<const Vec3>)>;

inline Vec3 shifted(const Vec3& x, int axis, double step) {
  Vec3 y = x;
  y[axis] = x[axis] + step;
  return y;
}

/// d field / d x_axis by central difference; costs two evaluations.
inline Vec3 fd_partial(const VectorField& field, const Vec3& x, int axis, double delta) {
  require(delta > 0.0, "fd_partial: step must be positive");
  require(axis >= 0 && axis < 3, "fd_partial: axis out of range");
  return (field(shifted(x, axis, delta)) - field(shifted(x, axis, -delta))) / (2.0 * delta);
}

/// J(i, j) = d u_i / d x_j; six field evaluations.
inline Mat3 fd_jacobian(const VectorField& field, const Vec3& x, double delta) {
  Mat3 j;
  for (int axis = 0; axis < 3; ++axis) j.col(axis) = fd_partial(field, x, axis, delta);
  return j;
}

inline Vec3 curl_from_jacobian(const Mat3& j) {
  return Vec3(j(2, 1) - j(1, 2), j(0, 2) - j(2, 0), j(1, 0) - j(0, 1));
}

inline Vec3 fd_curl(const VectorField& field, const Vec3& x, double delta) {
  return curl_from_jacobian(fd_jacobian(field, x, delta));
}

/// Physics-space Jacobian from a network-space one: inputs were scaled by `a`
/// (physics -> network), outputs by `b` (network -> physics), so
/// J_phys = (b a^T) ∘ J_net.
inline Mat3 jacobian_correction(const Mat3& j_net, const Vec3& a, const Vec3& b) {
  Mat3 out;
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k) out(i, k) = b[i] * a[k] * j_net(i, k);
  return out;
}

/// Physics-space curl of a field evaluated in network coordinates and
/// network output units.
inline Vec3 fd_curl_network(const VectorField& field_net, const Vec3& x_net, double delta, const Vec3& a,
                            const Vec3& b) {
  return curl_from_jacobian(jacobian_correction(fd_jacobian(field_net, x_net, delta), a, b));
}

/// div of a vector field by central differences (physics coordinates).
inline double fd_divergence(const VectorField& field, const Vec3& x, double delta) {
  double d = 0.0;
  for (int k = 0; k < 3; ++k) d += fd_partial(field, x, k, delta)[k];
  return d;
}

/// div of a physics-valued vorticity field given on network coordinates:
/// sum_k a_k * (w_k(x + d e_k) - w_k(x - d e_k)) / (2 d).
inline double fd_divergence_network(const VectorField& vorticity_net, const Vec3& x_net, double delta,
                                    const Vec3& a) {
  require(delta > 0.0, "divergence: step must be positive");
  double d = 0.0;
  for (int k = 0; k < 3; ++k) {
    d += a[k] * (vorticity_net(shifted(x_net, k, delta))[k] - vorticity_net(shifted(x_net, k, -delta))[k]) /
         (2.0 * delta);
  }
  return d;
}

namespace detail {

struct BitKey {
  bool operator()(const Vec3& l, const Vec3& r) const {
    return std::tie(l[0], l[1], l[2]) < std::tie(r[0], r[1], r[2]);
  }
};

/// Evaluates a batch field once per distinct point and memoizes the values.
class MemoField {
 public:
  MemoField(const BatchField& field, const std::vector<Vec3>& points) {
    std::vector<Vec3> unique;
    for (const auto& p : points) {
      if (values_.emplace(p, Vec3::Zero()).second) unique.push_back(p);
    }
    const std::vector<Vec3> v = field(unique);
    require(v.size() == unique.size(), "batch field returned the wrong number of values");
    for (std::size_t i = 0; i < unique.size(); ++i) values_[unique[i]] = v[i];
  }
  const Vec3& operator()(const Vec3& x) const {
    auto it = values_.find(x);
    require(it != values_.end(), "memo field: point was not pre-evaluated");
    return it->second;
  }

 private:
  std::map<Vec3, Vec3, BitKey> values_;
};

inline void push_curl_stencil(std::vector<Vec3>& pts, const Vec3& x, double delta) {
  for (int j = 0; j < 3; ++j) {
    pts.push_back(shifted(x, j, delta));
    pts.push_back(shifted(x, j, -delta));
  }
}

inline Mat3 memo_jacobian(const MemoField& f, const Vec3& x, double delta) {
  Mat3 j;
  for (int axis = 0; axis < 3; ++axis) {
    j.col(axis) = (f(shifted(x, axis, delta)) - f(shifted(x, axis, -delta))) / (2.0 * delta);
  }
  return j;
}

}  // namespace detail

/// Batched physics-space curl of a network-space field at network points.
inline std::vector<Vec3> fd_curl_network_batch(const BatchField& field_net, std::span<const Vec3> x_net,
                                               double delta, const Vec3& a, const Vec3& b) {
  require(delta > 0.0, "fd_curl: step must be positive");
  std::vector<Vec3> pts;
  pts.reserve(x_net.size() * 6);
  for (const auto& x : x_net) detail::push_curl_stencil(pts, x, delta);
  const detail::MemoField f(field_net, pts);
  std::vector<Vec3> out;
  out.reserve(x_net.size());
  for (const auto& x : x_net) out.push_back(curl_from_jacobian(jacobian_correction(detail::memo_jacobian(f, x, delta), a, b)));
  return out;
}

/// Divergence of the curl-derived vorticity of a network-space velocity
/// field: nested central differences with a shared step.
inline std::vector<double> divergence_of_curl_batch(const BatchField& velocity_net, std::span<const Vec3> x_net,
                                                    double delta, const Vec3& a, const Vec3& b) {
  require(delta > 0.0, "divergence: step must be positive");
  std::vector<Vec3> pts;
  for (const auto& x : x_net) {
    for (int k = 0; k < 3; ++k) {
      detail::push_curl_stencil(pts, shifted(x, k, delta), delta);
      detail::push_curl_stencil(pts, shifted(x, k, -delta), delta);
    }
  }
  const detail::MemoField f(velocity_net, pts);
  auto vort = [&](const Vec3& y) {
    return curl_from_jacobian(jacobian_correction(detail::memo_jacobian(f, y, delta), a, b));
  };
  std::vector<double> out;
  out.reserve(x_net.size());
  for (const auto& x : x_net) out.push_back(fd_divergence_network(vort, x, delta, a));
  return out;
}

/// Divergence of a directly predicted, physics-valued vorticity field given
/// on network coordinates.
inline std::vector<double> divergence_batch(const BatchField& vorticity_net, std::span<const Vec3> x_net,
                                            double delta, const Vec3& a) {
  require(delta > 0.0, "divergence: step must be positive");
  std::vector<Vec3> pts;
  for (const auto& x : x_net) detail::push_curl_stencil(pts, x, delta);
  const detail::MemoField f(vorticity_net, pts);
  auto w = [&](const Vec3& y) { return f(y); };
  std::vector<double> out;
  out.reserve(x_net.size());
  for (const auto& x : x_net) out.push_back(fd_divergence_network(w, x, delta, a));
  return out;
}

/// Nested central-difference divergence of fd_curl for a physics-space field.
inline double divergence_of_predicted_vorticity(const VectorField& velocity, const Vec3& x, double delta) {
  require(delta > 0.0, "divergence: step must be positive");
  auto vort = [&](const Vec3& y) { return fd_curl(velocity, y, delta); };
  return fd_divergence(vort, x, delta);
}

}  // namespace abupt::physics
