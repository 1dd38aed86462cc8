#pragma once

#include "abupt/autodiff/ops.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace abupt::train {

inline IndexList mask_rows(std::span<const std::uint8_t> mask) {
  IndexList rows;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i]) rows.push_back(static_cast<Index>(i));
  }
  return rows;
}

inline IndexList column_range(Index begin, Index end) {
  IndexList c;
  for (Index i = begin; i < end; ++i) c.push_back(i);
  return c;
}

/// Mean squared error over the masked rows and the given columns.
template <class T>
ad::Var<T> training_loss(const ad::Var<T>& pred, const Matrix<T>& target, std::span<const std::uint8_t> mask,
                         std::span<const Index> cols) {
  require(static_cast<Index>(mask.size()) == pred.rows(), "training_loss: mask length differs from prediction rows");
  const IndexList rows = mask_rows(mask);
  require(!rows.empty(), "training_loss: empty mask");
  return ad::masked_mse(pred, target, rows, cols);
}

/// Plain-value version of training_loss.
template <class A, class B>
double masked_mse_value(const Eigen::MatrixBase<A>& pred, const Eigen::MatrixBase<B>& target,
                        std::span<const std::uint8_t> mask, std::span<const Index> cols) {
  require(pred.rows() == target.rows() && pred.cols() == target.cols(), "masked_mse: shape mismatch");
  require(static_cast<Index>(mask.size()) == pred.rows(), "masked_mse: mask length differs from rows");
  double sum = 0.0;
  Index n = 0;
  for (Index r = 0; r < pred.rows(); ++r) {
    if (!mask[static_cast<std::size_t>(r)]) continue;
    for (Index c : cols) {
      const double d = static_cast<double>(pred(r, c)) - static_cast<double>(target(r, c));
      sum += d * d;
      ++n;
    }
  }
  require(n > 0, "masked_mse: empty mask");
  return sum / static_cast<double>(n);
}

}  // namespace abupt::train
