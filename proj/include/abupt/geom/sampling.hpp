#pragma once

#include "abupt/core/rng.hpp"
#include "abupt/geom/point_cloud.hpp"

#include <cstdint>
#include <numeric>

namespace abupt::geom {

/// `count` distinct indices from [0, population) drawn uniformly without
/// replacement (partial Fisher-Yates). Deterministic in (population, count, seed).
inline IndexList uniform_sample(Index population, Index count, std::uint64_t seed) {
  require(count >= 0, "uniform_sample: negative count");
  require(count <= population, "uniform_sample: count " + std::to_string(count) + " exceeds population " +
                                   std::to_string(population));
  IndexList pool(static_cast<std::size_t>(population));
  std::iota(pool.begin(), pool.end(), Index{0});
  Rng rng(seed);
  for (Index i = 0; i < count; ++i) {
    const Index j = i + static_cast<Index>(rng.below(static_cast<std::uint64_t>(population - i)));
    std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
  }
  pool.resize(static_cast<std::size_t>(count));
  return pool;
}

inline IndexList uniform_sample(const PointCloud& cloud, Index count, std::uint64_t seed) {
  return uniform_sample(cloud.count(), count, seed);
}

/// Anchor and query index sets of one branch.
struct AnchorQuerySplit {
  IndexList anchor_ids;
  IndexList query_ids;
  std::uint64_t seed = 0;
};

/// Draws m anchors and n_query queries from one cloud; the two sets are
/// disjoint and together form one uniform draw of m + n_query points.
inline AnchorQuerySplit split_anchors_queries(const PointCloud& cloud, Index m, Index n_query, std::uint64_t seed) {
  require(m >= 1, "split_anchors_queries: at least one anchor is required");
  require(n_query >= 0, "split_anchors_queries: negative query count");
  require(m + n_query <= cloud.count(), "split_anchors_queries: anchors + queries exceed the cloud size");
  IndexList all = uniform_sample(cloud, m + n_query, seed);
  AnchorQuerySplit split;
  split.seed = seed;
  split.anchor_ids.assign(all.begin(), all.begin() + m);
  split.query_ids.assign(all.begin() + m, all.end());
  return split;
}

}  // namespace abupt::geom
