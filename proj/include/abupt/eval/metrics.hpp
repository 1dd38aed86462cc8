#pragma once

#include "abupt/core/error.hpp"
#include "abupt/core/types.hpp"

#include <cmath>
#include <span>
#include <vector>

namespace abupt::eval {

/// ||pred - target||_2 / ||target||_2 over all entries.
template <class A, class B>
double relative_l2(const Eigen::MatrixBase<A>& pred, const Eigen::MatrixBase<B>& target) {
  require(pred.rows() == target.rows() && pred.cols() == target.cols(), "relative_l2: shape mismatch");
  const double den = target.template cast<double>().norm();
  require(den > 0.0, "relative_l2: target has zero norm");
  return (pred.template cast<double>() - target.template cast<double>()).norm() / den;
}

/// sum |pred - target| / sum |target| over all entries.
template <class A, class B>
double relative_l1(const Eigen::MatrixBase<A>& pred, const Eigen::MatrixBase<B>& target) {
  require(pred.rows() == target.rows() && pred.cols() == target.cols(), "relative_l1: shape mismatch");
  const double den = target.template cast<double>().cwiseAbs().sum();
  require(den > 0.0, "relative_l1: target has zero norm");
  return (pred.template cast<double>() - target.template cast<double>()).cwiseAbs().sum() / den;
}

/// Coefficient of determination 1 - SS_res / SS_tot.
inline double r_squared(std::span<const double> pred, std::span<const double> ref) {
  require(pred.size() == ref.size(), "r_squared: length mismatch");
  require(ref.size() >= 2, "r_squared: need at least two reference values");
  double mean = 0.0;
  for (double r : ref) mean += r;
  mean /= static_cast<double>(ref.size());
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    ss_res += (pred[i] - ref[i]) * (pred[i] - ref[i]);
    ss_tot += (ref[i] - mean) * (ref[i] - mean);
  }
  require(ss_tot > 0.0, "r_squared: reference has zero variance");
  return 1.0 - ss_res / ss_tot;
}

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // population
};

inline MeanStd mean_std(std::span<const double> v) {
  require(!v.empty(), "mean_std: no values");
  MeanStd m;
  for (double x : v) m.mean += x;
  m.mean /= static_cast<double>(v.size());
  for (double x : v) m.std += (x - m.mean) * (x - m.mean);
  m.std = std::sqrt(m.std / static_cast<double>(v.size()));
  return m;
}

/// Least-squares slope of log(y) against log(x).
inline double fit_exponent(std::span<const double> x, std::span<const double> y) {
  require(x.size() == y.size() && x.size() >= 2, "fit_exponent: need at least two points");
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    require(x[i] > 0.0 && y[i] > 0.0, "fit_exponent: values must be positive");
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(x.size());
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  require(sxx > 0.0, "fit_exponent: x values are all equal");
  return sxy / sxx;
}

}  // namespace abupt::eval
