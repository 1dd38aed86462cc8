#pragma once

// Chooses which points feed each branch's anchors and queries.
//
// cfd-mesh: anchors and queries are disjoint draws from the simulation's
// surface / volume clouds.
// cad-grid: surface anchors come from the raw geometry cloud, volume anchors
// from a regular lattice over the domain box, and queries from the
// simulation clouds. Anchors carry no targets, so only queries enter the loss.

#include "abupt/data/sample.hpp"
#include "abupt/geom/sampling.hpp"
#include "abupt/model/config.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace abupt::data {

enum class PointsMode { kCfdMesh, kCadGrid };

inline std::string to_string(PointsMode m) { return m == PointsMode::kCfdMesh ? "cfd-mesh" : "cad-grid"; }

inline PointsMode points_mode_from_string(const std::string& s) {
  if (s == "cfd-mesh") return PointsMode::kCfdMesh;
  if (s == "cad-grid") return PointsMode::kCadGrid;
  throw InvalidArgument("unknown points mode '" + s + "' (expected cfd-mesh or cad-grid)");
}

/// Which rows contribute to the training loss.
enum class LossMode { kAnchors, kQueries, kAnchorsAndQueries };

inline std::string to_string(LossMode m) {
  switch (m) {
    case LossMode::kAnchors: return "anchors";
    case LossMode::kQueries: return "queries";
    case LossMode::kAnchorsAndQueries: return "anchors+queries";
  }
  return "anchors";
}

inline LossMode loss_mode_from_string(const std::string& s) {
  if (s == "anchors") return LossMode::kAnchors;
  if (s == "queries") return LossMode::kQueries;
  if (s == "anchors+queries") return LossMode::kAnchorsAndQueries;
  throw InvalidArgument("unknown loss mode '" + s + "' (expected anchors, queries or anchors+queries)");
}

struct SourceConfig {
  Index supernodes = 512;
  Index surface_anchors = 512;
  Index volume_anchors = 512;
  Index surface_queries = 0;
  Index volume_queries = 0;
  Index grid_resolution = 8;  // cad-grid volume lattice points per axis
  Vec3 grid_min = Vec3::Zero();
  Vec3 grid_max = Vec3::Zero();  // an empty box means: bbox of the sample's volume cloud
};

struct BranchPoints {
  std::vector<Vec3> anchors;
  std::vector<Vec3> queries;
  IndexList anchor_ids;  // rows of the simulation cloud; empty when anchors have no targets
  IndexList query_ids;
  bool anchors_have_targets = true;
};

struct SourcedPoints {
  PointsMode mode = PointsMode::kCfdMesh;
  IndexList supernode_ids;
  std::array<BranchPoints, model::kBranches> branch;

  /// Per-row loss mask over [anchors; queries] of one branch.
  std::vector<std::uint8_t> loss_mask(model::Branch b, LossMode loss) const {
    const auto& bp = branch[static_cast<std::size_t>(b)];
    const bool use_anchors = bp.anchors_have_targets && loss != LossMode::kQueries;
    const bool use_queries = mode == PointsMode::kCadGrid || loss != LossMode::kAnchors;
    std::vector<std::uint8_t> mask(bp.anchors.size() + bp.queries.size(), 0);
    for (std::size_t i = 0; i < bp.anchors.size(); ++i) mask[i] = use_anchors ? 1 : 0;
    for (std::size_t i = 0; i < bp.queries.size(); ++i) mask[bp.anchors.size() + i] = use_queries ? 1 : 0;
    return mask;
  }
};

/// res^3 lattice points x_i = lo + i (hi - lo) / (res - 1), x fastest.
inline std::vector<Vec3> regular_grid(const Vec3& lo, const Vec3& hi, Index res) {
  require(res >= 2, "regular_grid: resolution must be >= 2");
  require((hi - lo).minCoeff() > 0.0, "regular_grid: empty box");
  std::vector<Vec3> pts;
  pts.reserve(static_cast<std::size_t>(res * res * res));
  const Vec3 step = (hi - lo) / static_cast<double>(res - 1);
  for (Index k = 0; k < res; ++k)
    for (Index j = 0; j < res; ++j)
      for (Index i = 0; i < res; ++i)
        pts.emplace_back(lo.x() + static_cast<double>(i) * step.x(), lo.y() + static_cast<double>(j) * step.y(),
                         lo.z() + static_cast<double>(k) * step.z());
  return pts;
}

namespace detail {

inline std::vector<Vec3> gather(const Array2& pos, const IndexList& ids) {
  std::vector<Vec3> out;
  out.reserve(ids.size());
  for (Index i : ids) out.push_back(pos.vec3(i));
  return out;
}

inline void bbox(const Array2& pos, Vec3& lo, Vec3& hi) {
  lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  hi = -lo;
  for (Index r = 0; r < pos.rows; ++r) {
    lo = lo.cwiseMin(pos.vec3(r));
    hi = hi.cwiseMax(pos.vec3(r));
  }
}

}  // namespace detail

inline SourcedPoints source_points(const SimulationSample& s, PointsMode mode, const SourceConfig& cfg,
                                   std::uint64_t seed) {
  Rng seeds(seed);
  SourcedPoints out;
  out.mode = mode;
  require(cfg.supernodes >= 1, "source_points: at least one supernode is required");
  out.supernode_ids = geom::uniform_sample(s.geometry_pos.rows, cfg.supernodes, seeds.next_u64());

  const std::array<const Array2*, model::kBranches> cloud{&s.surface_pos, &s.volume_pos};
  const std::array<Index, model::kBranches> anchors{cfg.surface_anchors, cfg.volume_anchors};
  const std::array<Index, model::kBranches> queries{cfg.surface_queries, cfg.volume_queries};
  for (std::size_t b = 0; b < model::kBranches; ++b) {
    auto& bp = out.branch[b];
    const std::uint64_t branch_seed = seeds.next_u64();
    if (mode == PointsMode::kCfdMesh) {
      const auto split = geom::split_anchors_queries(to_cloud(*cloud[b]), anchors[b], queries[b], branch_seed);
      bp.anchor_ids = split.anchor_ids;
      bp.query_ids = split.query_ids;
      bp.anchors = detail::gather(*cloud[b], bp.anchor_ids);
      bp.anchors_have_targets = true;
    } else {
      bp.query_ids = geom::uniform_sample(cloud[b]->rows, queries[b], branch_seed);
      bp.anchors_have_targets = false;
      if (b == 0) {
        require(anchors[b] >= 1, "source_points: at least one surface anchor is required");
        bp.anchors = detail::gather(s.geometry_pos, geom::uniform_sample(s.geometry_pos.rows, anchors[b], branch_seed ^ 0x9e37));
      } else {
        Vec3 lo = cfg.grid_min, hi = cfg.grid_max;
        if (!((hi - lo).minCoeff() > 0.0)) detail::bbox(s.volume_pos, lo, hi);
        bp.anchors = regular_grid(lo, hi, cfg.grid_resolution);
      }
    }
    bp.queries = detail::gather(*cloud[b], bp.query_ids);
  }
  return out;
}

}  // namespace abupt::data
