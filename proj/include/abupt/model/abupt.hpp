#pragma once

// Anchored multi-branch transformer: supernode pooling + geometry block,
// surface / volume point encoders, geometry cross-attention, interleaved
// self / cross-branch physics blocks, shared and branch-specific decoder
// blocks, linear heads.
//
// Evaluation is split in two passes. The anchor pass runs both branches'
// anchor tokens through every stage and records each stage's key/value
// arrays. The query pass decodes any set of positions of one branch against
// those cached arrays; queries never feed keys or values, so they cannot
// influence anchors or each other.

#include "abupt/attention/attention.hpp"
#include "abupt/autodiff/ops.hpp"
#include "abupt/embed/rope.hpp"
#include "abupt/embed/sincos.hpp"
#include "abupt/geom/neighbors.hpp"
#include "abupt/geom/normalization.hpp"
#include "abupt/model/weights.hpp"

#include <array>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace abupt::model {

enum class StageKind { kGeometryCross, kSelf, kBranchCross };

struct Stage {
  StageKind kind;
  std::array<std::string, kBranches> prefix;  // weight prefix per branch
};

inline std::vector<Stage> build_stages(const ModelConfig& c) {
  std::vector<Stage> s;
  s.push_back({StageKind::kGeometryCross, {"geometry_cross", "geometry_cross"}});
  for (Index k = 0; k < c.physics_blocks; ++k) {
    const std::string p = "physics." + std::to_string(k);
    s.push_back({StageKind::kSelf, {p + ".self", p + ".self"}});
    s.push_back({StageKind::kBranchCross, {p + ".cross", p + ".cross"}});
  }
  for (Index i = 0; i < c.shared_blocks(); ++i) {
    s.push_back({StageKind::kSelf, {"shared." + std::to_string(i), "shared." + std::to_string(i)}});
  }
  for (Index i = 0; i < c.decoder_blocks; ++i) {
    s.push_back({StageKind::kSelf, {"decoder.surface." + std::to_string(i), "decoder.volume." + std::to_string(i)}});
  }
  return s;
}

/// Geometry input in network space: supernode positions and the radius
/// graph from supernodes to geometry points.
struct PreparedGeometry {
  std::vector<Vec3> supernode_net;
  std::vector<Vec3> edge_offset_net;
  std::vector<double> edge_distance;  // in units of the radius
  IndexList edge_slot;
};

inline PreparedGeometry prepare_geometry(const geom::PointCloud& geometry, std::span<const Index> supernode_ids,
                                         double radius, const geom::NormalizationStats& stats) {
  require(!supernode_ids.empty(), "prepare_geometry: at least one supernode is required");
  const geom::NeighborGraph graph = geom::radius_neighbors(geometry, supernode_ids, radius);
  const Vec3 a = stats.coord_scale();
  PreparedGeometry g;
  for (Index id : supernode_ids) g.supernode_net.push_back(geom::scale_coordinates(geometry[id], stats));
  g.edge_offset_net.reserve(graph.edges.size());
  for (const auto& e : graph.edges) {
    g.edge_offset_net.push_back(e.offset.cwiseProduct(a));
    g.edge_distance.push_back(e.distance / radius);
    g.edge_slot.push_back(e.center_slot);
  }
  return g;
}

/// Result of the anchor pass.
template <class T>
struct AnchorContext {
  attn::KVCache<T> cache;
  std::array<ad::Var<T>, kBranches> anchor_predictions;  // normalized, anchors x channels
  ad::Var<T> geometry_tokens;
};

template <class T>
class AbUpt {
 public:
  AbUpt(ModelConfig config, ModelWeights<T>& weights)
      : config_(std::move(config)), weights_(&weights), stages_(build_stages(config_)) {
    config_.validate();
  }

  const ModelConfig& config() const { return config_; }
  ModelWeights<T>& weights() const { return *weights_; }
  const std::vector<Stage>& stages() const { return stages_; }

  std::shared_ptr<const embed::RopeTable<T>> rope_table(std::span<const Vec3> positions_net) const {
    return std::make_shared<const embed::RopeTable<T>>(positions_net, config_.head_dim(), config_.max_wavelength);
  }

  /// Supernode pooling: per-edge messages from the embedded relative offset
  /// and distance, averaged per supernode, then concatenated with the
  /// supernode's absolute embedding and projected back to the model width.
  ad::Var<T> pool(ad::Graph<T>& g, const PreparedGeometry& geo) const {
    return pool_project(g, pool_messages(g, geo), geo);
  }

  /// Mean-aggregated messages before the absolute-position concatenation.
  ad::Var<T> pool_messages(ad::Graph<T>& g, const PreparedGeometry& geo) const {
    const Index e = config_.embed_dim();
    const Index edges = static_cast<Index>(geo.edge_offset_net.size());
    Matrix<T> feat(edges, e + 1);
    feat.leftCols(e) = embed::sincos_embed_rows<T>(geo.edge_offset_net, e, config_.max_wavelength);
    for (Index i = 0; i < edges; ++i) feat(i, e) = static_cast<T>(geo.edge_distance[static_cast<std::size_t>(i)]);
    auto h = ad::gelu(linear(g, g.constant(std::move(feat)), "pool.message.fc1"));
    auto m = linear(g, h, "pool.message.fc2");
    return ad::segment_mean(m, std::span<const Index>(geo.edge_slot), static_cast<Index>(geo.supernode_net.size()));
  }

  ad::Var<T> pool_project(ad::Graph<T>& g, const ad::Var<T>& pooled, const PreparedGeometry& geo) const {
    auto absolute = g.constant(embed::sincos_embed_rows<T>(geo.supernode_net, config_.embed_dim(), config_.max_wavelength));
    return linear(g, ad::concat_cols(pooled, absolute), "pool.project");
  }

  /// One self-attention block over the supernode tokens.
  ad::Var<T> geometry_branch(ad::Graph<T>& g, const ad::Var<T>& supernode_tokens,
                             std::span<const Vec3> supernode_net) const {
    auto rope = rope_table(supernode_net);
    auto kv = key_value(g, "geometry.block", supernode_tokens, rope, false);
    return block(g, "geometry.block", supernode_tokens, rope, kv);
  }

  /// Branch-specific MLP over the sincos embedding of network positions.
  ad::Var<T> encode(ad::Graph<T>& g, Branch b, std::span<const Vec3> positions_net) const {
    const std::string p = std::string("encoder.") + branch_name(b);
    auto x = g.constant(embed::sincos_embed_rows<T>(positions_net, config_.embed_dim(), config_.max_wavelength));
    return linear(g, ad::gelu(linear(g, x, p + ".fc1")), p + ".fc2");
  }

  /// Keys (rotated) and values from context tokens for the block `prefix`.
  attn::KeyValue<T> key_value(ad::Graph<T>& g, const std::string& prefix, const ad::Var<T>& context,
                              const std::shared_ptr<const embed::RopeTable<T>>& rope, bool cross) const {
    auto h = norm(g, context, prefix + (cross ? ".kv_norm" : ".norm1"));
    attn::KeyValue<T> kv;
    kv.key = embed::rope(linear(g, h, prefix + ".k"), rope);
    kv.value = linear(g, h, prefix + ".v");
    return kv;
  }

  /// Pre-norm attention + MLP block; `x` queries the given keys/values.
  ad::Var<T> block(ad::Graph<T>& g, const std::string& prefix, const ad::Var<T>& x,
                   const std::shared_ptr<const embed::RopeTable<T>>& rope, const attn::KeyValue<T>& kv) const {
    auto h = norm(g, x, prefix + ".norm1");
    auto q = embed::rope(linear(g, h, prefix + ".q"), rope);
    auto a = attn::attention(q, kv.key, kv.value, config_.heads);
    auto y = ad::add(x, linear(g, a, prefix + ".o"));
    auto h2 = norm(g, y, prefix + ".norm2");
    auto m = linear(g, ad::gelu(linear(g, h2, prefix + ".mlp.fc1")), prefix + ".mlp.fc2");
    return ad::add(y, m);
  }

  ad::Var<T> head(ad::Graph<T>& g, Branch b, const ad::Var<T>& x) const {
    const std::string p = std::string("head.") + branch_name(b);
    return linear(g, norm(g, x, p + ".norm"), p + ".out");
  }

  /// Runs geometry, both branches' anchors through every stage, and the
  /// heads. The returned cache holds every stage's anchor keys/values.
  AnchorContext<T> encode_anchors(ad::Graph<T>& g, const PreparedGeometry& geo,
                                  std::span<const Vec3> surface_anchors_net,
                                  std::span<const Vec3> volume_anchors_net) const {
    require(!surface_anchors_net.empty() && !volume_anchors_net.empty(), "forward: both branches need anchors");
    AnchorContext<T> ctx;
    ctx.geometry_tokens = geometry_branch(g, pool(g, geo), geo.supernode_net);
    auto geo_rope = rope_table(geo.supernode_net);

    std::array<std::span<const Vec3>, kBranches> pos{surface_anchors_net, volume_anchors_net};
    std::array<std::shared_ptr<const embed::RopeTable<T>>, kBranches> rope{rope_table(pos[0]), rope_table(pos[1])};
    std::array<ad::Var<T>, kBranches> tokens{encode(g, Branch::kSurface, pos[0]), encode(g, Branch::kVolume, pos[1])};

    ctx.cache = attn::KVCache<T>(kBranches, static_cast<Index>(stages_.size()));
    for (std::size_t si = 0; si < stages_.size(); ++si) {
      const Stage& st = stages_[si];
      std::array<attn::KeyValue<T>, kBranches> kv;
      switch (st.kind) {
        case StageKind::kGeometryCross:
          kv[0] = key_value(g, st.prefix[0], ctx.geometry_tokens, geo_rope, true);
          kv[1] = kv[0];
          break;
        case StageKind::kSelf:
          for (std::size_t b = 0; b < kBranches; ++b) kv[b] = key_value(g, st.prefix[b], tokens[b], rope[b], false);
          break;
        case StageKind::kBranchCross:
          // Each branch attends to the other branch's anchors.
          kv[0] = key_value(g, st.prefix[0], tokens[1], rope[1], true);
          kv[1] = key_value(g, st.prefix[1], tokens[0], rope[0], true);
          break;
      }
      for (std::size_t b = 0; b < kBranches; ++b) {
        tokens[b] = block(g, st.prefix[b], tokens[b], rope[b], kv[b]);
        ctx.cache.put(static_cast<Index>(b), static_cast<Index>(si), kv[b]);
      }
    }
    ctx.cache.seal();
    ctx.anchor_predictions[0] = head(g, Branch::kSurface, tokens[0]);
    ctx.anchor_predictions[1] = head(g, Branch::kVolume, tokens[1]);
    return ctx;
  }

  /// Decodes query positions of one branch against the anchor context.
  ad::Var<T> decode(ad::Graph<T>& g, const attn::KVCache<T>& cache, Branch b,
                    std::span<const Vec3> positions_net) const {
    require(!positions_net.empty(), "decode: no query positions");
    const auto bi = static_cast<Index>(b);
    auto rope = rope_table(positions_net);
    auto x = encode(g, b, positions_net);
    for (std::size_t si = 0; si < stages_.size(); ++si) {
      x = block(g, stages_[si].prefix[static_cast<std::size_t>(bi)], x, rope, cache.get(bi, static_cast<Index>(si)));
    }
    return head(g, b, x);
  }

 private:
  ad::Var<T> linear(ad::Graph<T>& g, const ad::Var<T>& x, const std::string& name) const {
    return ad::linear(x, g.param(weights_->at(name + ".weight")), g.param(weights_->at(name + ".bias")));
  }
  ad::Var<T> norm(ad::Graph<T>& g, const ad::Var<T>& x, const std::string& name) const {
    return ad::layer_norm(x, g.param(weights_->at(name + ".gain")), g.param(weights_->at(name + ".shift")));
  }

  ModelConfig config_;
  ModelWeights<T>* weights_;
  std::vector<Stage> stages_;
};

/// Inputs of one forward evaluation in physics space.
struct ForwardInput {
  geom::PointCloud geometry;
  IndexList supernode_ids;
  std::vector<Vec3> surface_anchors, surface_queries;  // physics positions
  std::vector<Vec3> volume_anchors, volume_queries;
};

template <class T>
struct ForwardOutput {
  std::array<ad::Var<T>, kBranches> anchors;
  std::array<ad::Var<T>, kBranches> queries;  // invalid when a branch has no queries
  AnchorContext<T> context;
};

inline std::vector<Vec3> to_network(std::span<const Vec3> phys, const geom::NormalizationStats& stats) {
  std::vector<Vec3> out;
  out.reserve(phys.size());
  for (const auto& p : phys) out.push_back(geom::scale_coordinates(p, stats));
  return out;
}

/// Full forward: anchor pass plus query pass for both branches. Predictions
/// are in normalized (network) units.
template <class T>
ForwardOutput<T> forward(ad::Graph<T>& g, const AbUpt<T>& model, const ForwardInput& in,
                         const geom::NormalizationStats& stats) {
  const PreparedGeometry geo = prepare_geometry(in.geometry, in.supernode_ids, model.config().radius, stats);
  const auto sa = to_network(in.surface_anchors, stats), va = to_network(in.volume_anchors, stats);
  ForwardOutput<T> out;
  out.context = model.encode_anchors(g, geo, sa, va);
  out.anchors = out.context.anchor_predictions;
  if (!in.surface_queries.empty()) {
    out.queries[0] = model.decode(g, out.context.cache, Branch::kSurface, to_network(in.surface_queries, stats));
  }
  if (!in.volume_queries.empty()) {
    out.queries[1] = model.decode(g, out.context.cache, Branch::kVolume, to_network(in.volume_queries, stats));
  }
  return out;
}

}  // namespace abupt::model
