#pragma once

#include "abupt/geom/neighbors.hpp"

#include <algorithm>
#include <span>

namespace abupt::physics {

inline constexpr double kKnnDistanceFloor = 1e-12;

/// Inverse-distance weighted average of the k nearest anchors' values.
/// A query that coincides with an anchor returns that anchor's value.
inline Matrix<double> knn_interpolate(std::span<const Vec3> anchor_pos, const Matrix<double>& anchor_val,
                                      std::span<const Vec3> query_pos, Index k = 3) {
  require(k >= 1, "knn_interpolate: k must be >= 1");
  require(static_cast<Index>(anchor_pos.size()) >= k, "knn_interpolate: fewer anchors than k");
  require(anchor_val.rows() == static_cast<Index>(anchor_pos.size()), "knn_interpolate: one value row per anchor");
  Matrix<double> out(static_cast<Index>(query_pos.size()), anchor_val.cols());
  for (std::size_t q = 0; q < query_pos.size(); ++q) {
    const IndexList nn = geom::nearest(anchor_pos, query_pos[q], k);
    const double d0 = (anchor_pos[static_cast<std::size_t>(nn[0])] - query_pos[q]).norm();
    if (d0 == 0.0) {
      out.row(static_cast<Index>(q)) = anchor_val.row(nn[0]);
      continue;
    }
    RowVector<double> acc = RowVector<double>::Zero(anchor_val.cols());
    double wsum = 0.0;
    for (Index i : nn) {
      const double w = 1.0 / std::max((anchor_pos[static_cast<std::size_t>(i)] - query_pos[q]).norm(), kKnnDistanceFloor);
      acc += w * anchor_val.row(i);
      wsum += w;
    }
    out.row(static_cast<Index>(q)) = acc / wsum;
  }
  return out;
}

}  // namespace abupt::physics
