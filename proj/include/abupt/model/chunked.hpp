#pragma once

#include "abupt/model/abupt.hpp"

#include <algorithm>
#include <thread>
#include <vector>

namespace abupt::model {

/// Decodes `positions_net` of one branch in chunks of at most `chunk` rows
/// against a sealed anchor cache. Each chunk is evaluated in its own
/// non-recording graph, so live activation memory is bounded by one chunk
/// per worker plus the cache. Rows of the result do not depend on `chunk`
/// beyond floating-point reassociation inside the matrix kernels.
template <class T>
Matrix<T> chunked_decode(const AbUpt<T>& model, const attn::KVCache<T>& cache, Branch b,
                         std::span<const Vec3> positions_net, Index chunk, int threads = 1) {
  require(chunk >= 1, "chunked_decode: chunk size must be >= 1");
  require(cache.sealed(), "chunked_decode: anchor cache is not sealed");
  const Index n = static_cast<Index>(positions_net.size());
  Matrix<T> out(n, model.config().channels(b));
  if (n == 0) return out;
  const Index chunks = (n + chunk - 1) / chunk;
  auto run = [&](Index first, Index stride) {
    for (Index c = first; c < chunks; c += stride) {
      const Index begin = c * chunk;
      const Index count = std::min(chunk, n - begin);
      ad::Graph<T> g(false);
      auto pred = model.decode(g, cache, b, positions_net.subspan(static_cast<std::size_t>(begin),
                                                                  static_cast<std::size_t>(count)));
      out.middleRows(begin, count) = pred.value();
    }
  };
  const Index workers = std::clamp<Index>(threads, 1, chunks);
  if (workers == 1) {
    run(0, 1);
    return out;
  }
  std::vector<std::jthread> pool;
  for (Index w = 0; w < workers; ++w) pool.emplace_back(run, w, workers);
  pool.clear();
  return out;
}

/// Anchor context built once from physics-space inputs, for repeated
/// chunked decoding. Holds no recording state.
template <class T>
class AnchorPredictor {
 public:
  AnchorPredictor(const AbUpt<T>& model, const geom::NormalizationStats& stats, const geom::PointCloud& geometry,
                  std::span<const Index> supernode_ids, std::span<const Vec3> surface_anchors,
                  std::span<const Vec3> volume_anchors)
      : model_(&model), stats_(stats) {
    const PreparedGeometry geo = prepare_geometry(geometry, supernode_ids, model.config().radius, stats);
    ad::Graph<T> g(false);
    ctx_ = model.encode_anchors(g, geo, to_network(surface_anchors, stats), to_network(volume_anchors, stats));
  }

  const AnchorContext<T>& context() const { return ctx_; }
  const Matrix<T>& anchor_predictions(Branch b) const { return ctx_.anchor_predictions[static_cast<std::size_t>(b)].value(); }

  /// Normalized predictions at physics-space positions.
  Matrix<T> predict(Branch b, std::span<const Vec3> positions, Index chunk, int threads = 1) const {
    const auto net = to_network(positions, stats_);
    return chunked_decode(*model_, ctx_.cache, b, net, chunk, threads);
  }

  /// Normalized predictions at network-space positions.
  Matrix<T> predict_network(Branch b, std::span<const Vec3> positions_net, Index chunk, int threads = 1) const {
    return chunked_decode(*model_, ctx_.cache, b, positions_net, chunk, threads);
  }

  const AbUpt<T>& model() const { return *model_; }
  const geom::NormalizationStats& stats() const { return stats_; }

 private:
  const AbUpt<T>* model_;
  geom::NormalizationStats stats_;
  AnchorContext<T> ctx_;
};

}  // namespace abupt::model
