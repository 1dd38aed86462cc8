#pragma once

#include "abupt/geom/point_cloud.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <unordered_map>
#include <vector>

namespace abupt::geom {

struct Edge {
  Index center_slot;  // position of the center within NeighborGraph::center_ids
  Index center_id;
  Index neighbor_id;
  Vec3 offset;        // neighbor - center
  double distance;
};

/// Edges grouped by center in center_ids order; within a center, sorted by
/// neighbor index.
struct NeighborGraph {
  IndexList center_ids;
  std::vector<Edge> edges;

  Index edges_of(Index slot) const {
    return std::count_if(edges.begin(), edges.end(), [slot](const Edge& e) { return e.center_slot == slot; });
  }
};

namespace detail {

inline Edge make_edge(const PointCloud& pts, Index slot, Index center, Index neighbor) {
  Edge e;
  e.center_slot = slot;
  e.center_id = center;
  e.neighbor_id = neighbor;
  e.offset = pts[neighbor] - pts[center];
  e.distance = e.offset.norm();
  return e;
}

/// Uniform hash grid with cubic cells of a fixed size.
class HashGrid {
 public:
  HashGrid(const PointCloud& pts, double cell) : cell_(cell) {
    for (Index i = 0; i < pts.count(); ++i) cells_[key(coord(pts[i]))].push_back(i);
  }

  template <class F>
  void for_each_near(const Vec3& p, F&& f) const {
    const auto c = coord(p);
    for (std::int64_t dx = -1; dx <= 1; ++dx)
      for (std::int64_t dy = -1; dy <= 1; ++dy)
        for (std::int64_t dz = -1; dz <= 1; ++dz) {
          auto it = cells_.find(key({c[0] + dx, c[1] + dy, c[2] + dz}));
          if (it == cells_.end()) continue;
          for (Index i : it->second) f(i);
        }
  }

 private:
  std::array<std::int64_t, 3> coord(const Vec3& p) const {
    return {static_cast<std::int64_t>(std::floor(p.x() / cell_)), static_cast<std::int64_t>(std::floor(p.y() / cell_)),
            static_cast<std::int64_t>(std::floor(p.z() / cell_))};
  }
  static std::uint64_t key(const std::array<std::int64_t, 3>& c) {
    std::uint64_t h = 1469598103934665603ULL;
    for (auto v : c) {
      h ^= static_cast<std::uint64_t>(v) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    }
    return h;
  }

  double cell_;
  // Hash collisions only add candidates; the distance filter removes them.
  std::unordered_map<std::uint64_t, IndexList> cells_;
};

}  // namespace detail

/// All points within distance r of each center (the center itself included).
/// A center with no other point in range keeps exactly its self-edge.
inline NeighborGraph radius_neighbors(const PointCloud& points, std::span<const Index> centers, double r) {
  require(r > 0.0, "radius_neighbors: radius must be positive");
  NeighborGraph g;
  g.center_ids.assign(centers.begin(), centers.end());
  for (Index c : centers) require(c >= 0 && c < points.count(), "radius_neighbors: center index out of range");
  // Cells no smaller than the radius make the 27-cell stencil sufficient.
  // Infinite or huge radii collapse to one cell.
  double cell = r;
  if (!std::isfinite(cell) || cell > 1e12) cell = 1e12;
  detail::HashGrid grid(points, cell);
  IndexList found;
  for (std::size_t s = 0; s < centers.size(); ++s) {
    const Index c = centers[s];
    found.clear();
    grid.for_each_near(points[c], [&](Index i) {
      if ((points[i] - points[c]).norm() <= r) found.push_back(i);
    });
    std::sort(found.begin(), found.end());
    found.erase(std::unique(found.begin(), found.end()), found.end());
    if (found.empty()) found.push_back(c);
    for (Index i : found) g.edges.push_back(detail::make_edge(points, static_cast<Index>(s), c, i));
  }
  return g;
}

/// The k nearest points of each center (the center itself counts); distance
/// ties go to the lower point index.
inline NeighborGraph knn_neighbors(const PointCloud& points, std::span<const Index> centers, Index k) {
  require(k >= 1, "knn_neighbors: k must be >= 1");
  require(k <= points.count(), "knn_neighbors: k exceeds the number of points");
  NeighborGraph g;
  g.center_ids.assign(centers.begin(), centers.end());
  std::vector<std::pair<double, Index>> d(static_cast<std::size_t>(points.count()));
  for (std::size_t s = 0; s < centers.size(); ++s) {
    const Index c = centers[s];
    require(c >= 0 && c < points.count(), "knn_neighbors: center index out of range");
    for (Index i = 0; i < points.count(); ++i) d[static_cast<std::size_t>(i)] = {(points[i] - points[c]).squaredNorm(), i};
    std::partial_sort(d.begin(), d.begin() + k, d.end());
    IndexList nn;
    for (Index j = 0; j < k; ++j) nn.push_back(d[static_cast<std::size_t>(j)].second);
    std::sort(nn.begin(), nn.end());
    for (Index i : nn) g.edges.push_back(detail::make_edge(points, static_cast<Index>(s), c, i));
  }
  return g;
}

/// Indices of the k nearest `points` to an arbitrary position, nearest first,
/// ties toward the lower index.
inline IndexList nearest(std::span<const Vec3> points, const Vec3& x, Index k) {
  require(k >= 1 && k <= static_cast<Index>(points.size()), "nearest: k out of range");
  std::vector<std::pair<double, Index>> d(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) d[i] = {(points[i] - x).squaredNorm(), static_cast<Index>(i)};
  std::partial_sort(d.begin(), d.begin() + k, d.end());
  IndexList out;
  for (Index j = 0; j < k; ++j) out.push_back(d[static_cast<std::size_t>(j)].second);
  return out;
}

}  // namespace abupt::geom
