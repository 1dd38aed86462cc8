#pragma once

#include "abupt/core/error.hpp"
#include "abupt/core/types.hpp"

#include <span>
#include <utility>
#include <vector>

namespace abupt::geom {

/// Finite set of 3D points in physics space (meters).
class PointCloud {
 public:
  PointCloud() = default;
  explicit PointCloud(std::vector<Vec3> positions) : positions_(std::move(positions)) {
    for (const auto& p : positions_) require(all_finite(p), "point cloud: non-finite coordinate");
  }

  Index count() const { return static_cast<Index>(positions_.size()); }
  bool empty() const { return positions_.empty(); }
  const Vec3& operator[](Index i) const { return positions_[static_cast<std::size_t>(i)]; }
  std::span<const Vec3> positions() const { return positions_; }

  PointCloud subset(std::span<const Index> ids) const {
    std::vector<Vec3> out;
    out.reserve(ids.size());
    for (Index i : ids) {
      require(i >= 0 && i < count(), "point cloud: index out of range");
      out.push_back(positions_[static_cast<std::size_t>(i)]);
    }
    return PointCloud(std::move(out));
  }

 private:
  std::vector<Vec3> positions_;
};

}  // namespace abupt::geom
