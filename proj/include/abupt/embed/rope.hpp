#pragma once

#include "abupt/autodiff/graph.hpp"
#include "abupt/embed/sincos.hpp"

#include <memory>
#include <span>

namespace abupt::embed {

/// Rotation angles for 3D rotary embeddings. The head dimension is split
/// into three equal groups of 2*pairs channels, one per spatial axis; within
/// a group, channel pairs (2i, 2i+1) rotate by position[axis] * freq(i).
/// Channels beyond 6*pairs pass through unrotated.
template <class T>
struct RopeTable {
  Index head_dim = 0;
  Index pairs = 0;  // per axis
  Matrix<T> cos;    // rows x (3 * pairs)
  Matrix<T> sin;

  RopeTable(std::span<const Vec3> positions, Index head_dim_, double max_wavelength = kDefaultMaxWavelength)
      : head_dim(head_dim_), pairs(head_dim_ / 6) {
    require(head_dim > 0, "rope: head dim must be positive");
    const Index n = static_cast<Index>(positions.size());
    cos.resize(n, 3 * pairs);
    sin.resize(n, 3 * pairs);
    for (Index r = 0; r < n; ++r) {
      for (int axis = 0; axis < 3; ++axis) {
        for (Index i = 0; i < pairs; ++i) {
          // Angles reach ~1e3 rad on the [0, 1000] domain; keep them in double.
          const double angle = positions[static_cast<std::size_t>(r)][axis] *
                               pair_frequency(i, pairs, max_wavelength);
          cos(r, axis * pairs + i) = static_cast<T>(std::cos(angle));
          sin(r, axis * pairs + i) = static_cast<T>(std::sin(angle));
        }
      }
    }
  }

  Index rows() const { return cos.rows(); }
};

/// Rotates every head of `x` (rows x heads*head_dim) in place. `direction`
/// = -1 applies the inverse rotation.
template <class T>
void rope_apply(Matrix<T>& x, const RopeTable<T>& table, int direction = 1) {
  require(x.rows() == table.rows(), "rope: one position per row required");
  require(x.cols() % table.head_dim == 0, "rope: width is not a multiple of the head dim");
  const Index heads = x.cols() / table.head_dim;
  const Index p = table.pairs;
  for (Index r = 0; r < x.rows(); ++r) {
    T* row = x.row(r).data();
    for (Index h = 0; h < heads; ++h) {
      T* head = row + h * table.head_dim;
      for (Index a = 0; a < 3; ++a) {
        for (Index i = 0; i < p; ++i) {
          const T c = table.cos(r, a * p + i);
          const T s = direction > 0 ? table.sin(r, a * p + i) : -table.sin(r, a * p + i);
          T& x0 = head[a * 2 * p + 2 * i];
          T& x1 = head[a * 2 * p + 2 * i + 1];
          const T y0 = x0 * c - x1 * s;
          const T y1 = x0 * s + x1 * c;
          x0 = y0;
          x1 = y1;
        }
      }
    }
  }
}

/// Differentiable rotation; the gradient is the inverse rotation.
template <class T>
ad::Var<T> rope(const ad::Var<T>& x, std::shared_ptr<const RopeTable<T>> table) {
  Matrix<T> y = x.value();
  rope_apply(y, *table);
  auto xn = x.ptr();
  return x.graph().make(std::move(y), {&x}, [xn, table](const Matrix<T>& gy) {
    Matrix<T> g = gy;
    rope_apply(g, *table, -1);
    xn->accumulate(g);
  });
}

}  // namespace abupt::embed
