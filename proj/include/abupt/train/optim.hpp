#pragma once

#include "abupt/model/weights.hpp"

#include <cmath>
#include <numbers>

namespace abupt::train {

inline constexpr double kLionBeta1 = 0.9;
inline constexpr double kLionBeta2 = 0.99;

/// One LION update of `w` in place:
///   w -= lr * (sign(b1 m + (1 - b1) g) + wd w);  m = b2 m + (1 - b2) g.
template <class T>
void lion_step(Matrix<T>& w, const Matrix<T>& g, Matrix<T>& m, double lr, double wd, double beta1 = kLionBeta1,
               double beta2 = kLionBeta2) {
  require(w.rows() == g.rows() && w.cols() == g.cols() && w.rows() == m.rows() && w.cols() == m.cols(),
          "lion_step: shape mismatch");
  const T b1 = static_cast<T>(beta1), b2 = static_cast<T>(beta2);
  const T step = static_cast<T>(lr), decay = static_cast<T>(wd);
  for (Index i = 0; i < w.size(); ++i) {
    const T c = b1 * m.data()[i] + (T(1) - b1) * g.data()[i];
    const T s = c > T(0) ? T(1) : (c < T(0) ? T(-1) : T(0));
    w.data()[i] -= step * (s + decay * w.data()[i]);
    m.data()[i] = b2 * m.data()[i] + (T(1) - b2) * g.data()[i];
  }
}

/// Linear warmup from 0 to `peak` over round(warmup * total) steps, then
/// cosine decay to `end` at step == total. warmup = 0 starts at `peak`.
struct LrSchedule {
  double peak = 5e-5;
  double end = 1e-6;
  double warmup = 0.05;

  void validate() const {
    require(warmup >= 0.0 && warmup < 1.0, "lr schedule: warmup fraction must be in [0, 1)");
    require(peak > 0.0 && end >= 0.0 && end < peak, "lr schedule: need 0 <= end < peak");
  }

  double operator()(Index step, Index total) const {
    require(total >= 1 && step >= 0 && step <= total, "lr schedule: step out of range");
    const double w = warmup * static_cast<double>(total);
    const double s = static_cast<double>(step);
    if (s < w) return peak * s / w;
    const double span = static_cast<double>(total) - w;
    const double progress = span > 0.0 ? (s - w) / span : 1.0;
    if (progress <= 0.0) return peak;
    return end + 0.5 * (peak - end) * (1.0 + std::cos(std::numbers::pi * progress));
  }
};

inline double lr_schedule(Index step, Index total, const LrSchedule& cfg) { return cfg(step, total); }

/// ema = f * ema + (1 - f) * w, elementwise.
template <class T>
void ema_update(model::ModelWeights<T>& ema, const model::ModelWeights<T>& w, double f) {
  require(f >= 0.0 && f <= 1.0, "ema_update: factor must be in [0, 1]");
  const T a = static_cast<T>(f), b = static_cast<T>(1.0 - f);
  for (const auto& name : w.names()) {
    auto& e = ema.at(name).value;
    e = a * e + b * w.at(name).value;
  }
}

template <class T>
double global_grad_norm(const model::ModelWeights<T>& w) {
  double sq = 0.0;
  for (const auto& name : w.names()) {
    const auto& g = w.at(name).grad;
    if (g.size() > 0) sq += g.template cast<double>().squaredNorm();
  }
  return std::sqrt(sq);
}

/// Scales all gradients by max_norm / norm when the global L2 norm exceeds
/// max_norm. Returns the norm before clipping.
template <class T>
double clip_gradients(model::ModelWeights<T>& w, double max_norm) {
  require(max_norm > 0.0, "clip_gradients: max_norm must be positive");
  const double norm = global_grad_norm(w);
  if (norm > max_norm) {
    const T s = static_cast<T>(max_norm / norm);
    for (const auto& name : w.names()) {
      auto& g = w.at(name).grad;
      if (g.size() > 0) g *= s;
    }
  }
  return norm;
}

/// LION state: one momentum buffer per parameter.
template <class T>
class Lion {
 public:
  explicit Lion(const model::ModelWeights<T>& w) {
    for (const auto& name : w.names()) {
      const auto& v = w.at(name).value;
      momentum_.add(name, Matrix<T>::Zero(v.rows(), v.cols()));
    }
  }

  void step(model::ModelWeights<T>& w, double lr, double wd) {
    for (const auto& name : w.names()) {
      auto& p = w.at(name);
      if (p.grad.size() == 0) p.zero_grad();
      lion_step(p.value, p.grad, momentum_.at(name).value, lr, wd);
    }
  }

 private:
  model::ModelWeights<T> momentum_;
};

}  // namespace abupt::train
