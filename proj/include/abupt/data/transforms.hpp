#pragma once

#include "abupt/data/sample.hpp"
#include "abupt/geom/normalization.hpp"

#include <cmath>
#include <span>
#include <vector>

namespace abupt::data {

using geom::NormalizationStats;
using geom::VorticityTransform;

inline double log1p_signed(double x) { return std::copysign(std::log1p(std::abs(x)), x); }
inline double log1p_signed_inverse(double y) { return std::copysign(std::expm1(std::abs(y)), y); }

/// v = w / sigma, then v * sqrt(|v|) / |v|; zero stays zero.
inline Vec3 sqrt_signed(const Vec3& w, const Vec3& sigma) {
  const Vec3 v = w.cwiseQuotient(sigma);
  const double r = v.norm();
  return r > 0.0 ? Vec3(v / std::sqrt(r)) : Vec3::Zero();
}

inline Vec3 sqrt_signed_inverse(const Vec3& y, const Vec3& sigma) {
  // |y| = sqrt(|v|)  =>  v = y * |y|
  return (y * y.norm()).cwiseProduct(sigma);
}

inline Vec3 transform_vorticity(const Vec3& w, VorticityTransform mode, const Vec3& sigma = Vec3::Ones()) {
  switch (mode) {
    case VorticityTransform::kLog1pSigned:
      return Vec3(log1p_signed(w.x()), log1p_signed(w.y()), log1p_signed(w.z()));
    case VorticityTransform::kSqrtSigned:
      return sqrt_signed(w, sigma);
    case VorticityTransform::kNone:
      return w;
  }
  return w;
}

inline Vec3 inverse_transform_vorticity(const Vec3& y, VorticityTransform mode, const Vec3& sigma = Vec3::Ones()) {
  switch (mode) {
    case VorticityTransform::kLog1pSigned:
      return Vec3(log1p_signed_inverse(y.x()), log1p_signed_inverse(y.y()), log1p_signed_inverse(y.z()));
    case VorticityTransform::kSqrtSigned:
      return sqrt_signed_inverse(y, sigma);
    case VorticityTransform::kNone:
      return y;
  }
  return y;
}

namespace detail {

struct RunningMoments {
  std::vector<double> sum, sumsq;
  double n = 0;
  explicit RunningMoments(std::size_t channels) : sum(channels, 0.0), sumsq(channels, 0.0) {}
  void add(std::span<const double> v) {
    for (std::size_t c = 0; c < v.size(); ++c) {
      sum[c] += v[c];
      sumsq[c] += v[c] * v[c];
    }
    n += 1;
  }
  // Two-pass would be more accurate; the data here is O(1)-scaled.
  std::vector<double> mean() const {
    std::vector<double> m(sum.size());
    for (std::size_t c = 0; c < sum.size(); ++c) m[c] = sum[c] / n;
    return m;
  }
  std::vector<double> std() const {
    std::vector<double> s(sum.size());
    for (std::size_t c = 0; c < sum.size(); ++c) {
      const double mu = sum[c] / n;
      s[c] = std::sqrt(std::max(0.0, sumsq[c] / n - mu * mu));
    }
    return s;
  }
};

inline void check_std(const std::vector<double>& s, const char* what) {
  for (std::size_t c = 0; c < s.size(); ++c) {
    if (!(s[c] > 1e-12)) {
      throw InvalidArgument(std::string("fit_normalization: zero variance in ") + what + " channel " +
                            std::to_string(c));
    }
  }
}

}  // namespace detail

/// Bbox, per-channel mean / population std over all training points, and
/// the raw vorticity std. Vorticity channels are standardized after the
/// log1p-signed transform.
inline NormalizationStats fit_normalization(std::span<const SimulationSample> train,
                                            VorticityTransform mode = VorticityTransform::kLog1pSigned) {
  require(!train.empty(), "fit_normalization: at least one training sample is required");
  NormalizationStats st;
  st.vorticity_transform = mode;
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = -lo;
  auto extend = [&](const Array2& pos) {
    for (Index r = 0; r < pos.rows; ++r) {
      lo = lo.cwiseMin(pos.vec3(r));
      hi = hi.cwiseMax(pos.vec3(r));
    }
  };
  detail::RunningMoments surf(4), vol(7), raw_w(3);
  for (const auto& s : train) {
    s.validate();
    extend(s.geometry_pos);
    extend(s.surface_pos);
    extend(s.volume_pos);
    for (Index r = 0; r < s.surface_pos.rows; ++r) {
      const double v[4] = {s.surface_p(r, 0), s.surface_tau(r, 0), s.surface_tau(r, 1), s.surface_tau(r, 2)};
      surf.add(v);
    }
    for (Index r = 0; r < s.volume_pos.rows; ++r) {
      const Vec3 w = s.volume_omega.vec3(r);
      const Vec3 tw = transform_vorticity(w, mode == VorticityTransform::kSqrtSigned ? VorticityTransform::kNone : mode);
      const double v[7] = {s.volume_p(r, 0), s.volume_u(r, 0), s.volume_u(r, 1), s.volume_u(r, 2), tw.x(), tw.y(), tw.z()};
      vol.add(v);
      const double wr[3] = {w.x(), w.y(), w.z()};
      raw_w.add(wr);
    }
  }
  st.bbox_min = lo;
  st.bbox_max = hi;
  for (int a = 0; a < 3; ++a) {
    if (!(hi[a] > lo[a])) throw InvalidArgument("fit_normalization: degenerate bounding box");
  }
  st.surface_mean = surf.mean();
  st.surface_std = surf.std();
  st.volume_mean = vol.mean();
  st.volume_std = vol.std();
  detail::check_std(st.surface_std, "surface");
  detail::check_std(st.volume_std, "volume");
  const auto ws = raw_w.std();
  detail::check_std(ws, "raw vorticity");
  st.vorticity_sigma = Vec3(ws[0], ws[1], ws[2]);
  if (mode == VorticityTransform::kSqrtSigned) {
    // The sqrt-signed transform already brings vorticity to unit scale.
    for (int c = 4; c < 7; ++c) {
      st.volume_mean[static_cast<std::size_t>(c)] = 0.0;
      st.volume_std[static_cast<std::size_t>(c)] = 1.0;
    }
  }
  return st;
}

/// Normalized surface targets (rows x 4).
inline Matrix<double> surface_targets(const SimulationSample& s, const NormalizationStats& st) {
  Matrix<double> t(s.surface_pos.rows, 4);
  for (Index r = 0; r < t.rows(); ++r) {
    const double v[4] = {s.surface_p(r, 0), s.surface_tau(r, 0), s.surface_tau(r, 1), s.surface_tau(r, 2)};
    for (int c = 0; c < 4; ++c) t(r, c) = (v[c] - st.surface_mean[c]) / st.surface_std[c];
  }
  return t;
}

/// Normalized volume targets (rows x 7). With `curl_vorticity` the last
/// three columns hold the sqrt-signed vorticity instead of the standardized
/// direct-head transform.
inline Matrix<double> volume_targets(const SimulationSample& s, const NormalizationStats& st,
                                     bool curl_vorticity = false) {
  Matrix<double> t(s.volume_pos.rows, 7);
  for (Index r = 0; r < t.rows(); ++r) {
    const double v[4] = {s.volume_p(r, 0), s.volume_u(r, 0), s.volume_u(r, 1), s.volume_u(r, 2)};
    for (int c = 0; c < 4; ++c) t(r, c) = (v[c] - st.volume_mean[c]) / st.volume_std[c];
    const Vec3 w = s.volume_omega.vec3(r);
    if (curl_vorticity) {
      const Vec3 y = sqrt_signed(w, st.vorticity_sigma);
      for (int c = 0; c < 3; ++c) t(r, 4 + c) = y[c];
    } else {
      const Vec3 y = transform_vorticity(w, st.vorticity_transform, st.vorticity_sigma);
      for (int c = 0; c < 3; ++c) t(r, 4 + c) = (y[c] - st.volume_mean[4 + c]) / st.volume_std[4 + c];
    }
  }
  return t;
}

/// Physics-unit surface fields from normalized predictions.
template <class Derived>
Matrix<double> surface_physical(const Eigen::MatrixBase<Derived>& pred, const NormalizationStats& st) {
  Matrix<double> out(pred.rows(), 4);
  for (Index r = 0; r < pred.rows(); ++r)
    for (int c = 0; c < 4; ++c) out(r, c) = st.surface_mean[c] + st.surface_std[c] * static_cast<double>(pred(r, c));
  return out;
}

/// Physics-unit volume fields (p, u, w) from normalized direct-head predictions.
template <class Derived>
Matrix<double> volume_physical(const Eigen::MatrixBase<Derived>& pred, const NormalizationStats& st) {
  Matrix<double> out(pred.rows(), 7);
  for (Index r = 0; r < pred.rows(); ++r) {
    for (int c = 0; c < 7; ++c) out(r, c) = st.volume_mean[c] + st.volume_std[c] * static_cast<double>(pred(r, c));
    const Vec3 w = inverse_transform_vorticity(Vec3(out(r, 4), out(r, 5), out(r, 6)), st.vorticity_transform,
                                               st.vorticity_sigma);
    for (int c = 0; c < 3; ++c) out(r, 4 + c) = w[c];
  }
  return out;
}

/// Output scale of the velocity channels (physics units per network unit).
inline Vec3 velocity_scale(const NormalizationStats& st) {
  return Vec3(st.volume_std[1], st.volume_std[2], st.volume_std[3]);
}

}  // namespace abupt::data
