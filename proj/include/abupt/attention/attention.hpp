#pragma once

#include "abupt/autodiff/graph.hpp"
#include "abupt/core/memory.hpp"
#include "abupt/core/rng.hpp"
#include "abupt/embed/rope.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>
#include <span>
#include <vector>

namespace abupt::attn {

namespace detail {

/// In-place numerically stable row softmax.
template <class T>
void softmax_rows(Matrix<T>& s) {
  for (Index r = 0; r < s.rows(); ++r) {
    auto row = s.row(r).array();
    const T mx = row.maxCoeff();
    row = (row - mx).exp();
    row /= row.sum();
  }
}

}  // namespace detail

/// Multi-head softmax(q k^T / sqrt(head_dim)) v on already-projected inputs.
/// Query rows are processed in tiles so the score buffer never exceeds
/// tile_rows x keys per head.
template <class T>
Matrix<T> multihead_attention(const Matrix<T>& q, const Matrix<T>& k, const Matrix<T>& v, Index heads,
                              Index tile_rows = 256) {
  require(k.rows() >= 1, "attention: at least one key/value row is required");
  require(k.rows() == v.rows(), "attention: keys and values differ in row count");
  require(q.cols() == k.cols() && k.cols() == v.cols(), "attention: width mismatch");
  require(heads >= 1 && q.cols() % heads == 0, "attention: width not divisible by heads");
  const Index dh = q.cols() / heads;
  const T scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(dh)));
  Matrix<T> out(q.rows(), q.cols());
  const Index tile = std::max<Index>(1, std::min<Index>(tile_rows, q.rows()));
  memory::Scoped scratch(static_cast<std::size_t>(tile * k.rows()) * sizeof(T));
  Matrix<T> s(tile, k.rows());
  for (Index r0 = 0; r0 < q.rows(); r0 += tile) {
    const Index nr = std::min(tile, q.rows() - r0);
    for (Index h = 0; h < heads; ++h) {
      auto sb = s.topRows(nr);
      sb.noalias() = (q.block(r0, h * dh, nr, dh) * scale) * k.middleCols(h * dh, dh).transpose();
      for (Index r = 0; r < nr; ++r) {
        auto row = sb.row(r).array();
        const T mx = row.maxCoeff();
        row = (row - mx).exp();
        row /= row.sum();
      }
      out.block(r0, h * dh, nr, dh).noalias() = sb * v.middleCols(h * dh, dh);
    }
  }
  return out;
}

/// Differentiable multi-head attention core.
template <class T>
ad::Var<T> attention(const ad::Var<T>& q, const ad::Var<T>& k, const ad::Var<T>& v, Index heads) {
  ad::Graph<T>& g = q.graph();
  if (!g.recording() || !(q.needs_grad() || k.needs_grad() || v.needs_grad())) {
    return g.make(multihead_attention(q.value(), k.value(), v.value(), heads), {&q, &k, &v}, nullptr);
  }
  require(k.rows() >= 1, "attention: at least one key/value row is required");
  require(k.rows() == v.rows(), "attention: keys and values differ in row count");
  require(q.cols() == k.cols() && k.cols() == v.cols(), "attention: width mismatch");
  require(heads >= 1 && q.cols() % heads == 0, "attention: width not divisible by heads");
  const Index dh = q.cols() / heads;
  const T scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(dh)));
  auto probs = std::make_shared<std::vector<Matrix<T>>>();
  probs->reserve(static_cast<std::size_t>(heads));
  Matrix<T> out(q.rows(), q.cols());
  for (Index h = 0; h < heads; ++h) {
    Matrix<T> p(q.rows(), k.rows());
    p.noalias() = (q.value().middleCols(h * dh, dh) * scale) * k.value().middleCols(h * dh, dh).transpose();
    detail::softmax_rows(p);
    out.middleCols(h * dh, dh).noalias() = p * v.value().middleCols(h * dh, dh);
    probs->push_back(std::move(p));
  }
  auto qn = q.ptr(), kn = k.ptr(), vn = v.ptr();
  return g.make(std::move(out), {&q, &k, &v}, [qn, kn, vn, probs, heads, dh, scale](const Matrix<T>& gy) {
    Matrix<T> gq = Matrix<T>::Zero(qn->value().rows(), qn->value().cols());
    Matrix<T> gk = Matrix<T>::Zero(kn->value().rows(), kn->value().cols());
    Matrix<T> gv = Matrix<T>::Zero(vn->value().rows(), vn->value().cols());
    for (Index h = 0; h < heads; ++h) {
      const Matrix<T>& p = (*probs)[static_cast<std::size_t>(h)];
      const auto go = gy.middleCols(h * dh, dh);
      gv.middleCols(h * dh, dh).noalias() += p.transpose() * go;
      Matrix<T> dp(p.rows(), p.cols());
      dp.noalias() = go * vn->value().middleCols(h * dh, dh).transpose();
      const Eigen::Matrix<T, Eigen::Dynamic, 1> rowdot = (dp.array() * p.array()).rowwise().sum();
      Matrix<T> ds = (p.array() * (dp.array().colwise() - rowdot.array())).matrix();
      ds *= scale;
      gq.middleCols(h * dh, dh).noalias() += ds * kn->value().middleCols(h * dh, dh);
      gk.middleCols(h * dh, dh).noalias() += ds.transpose() * qn->value().middleCols(h * dh, dh);
    }
    qn->accumulate(gq);
    kn->accumulate(gk);
    vn->accumulate(gv);
  });
}

/// Projection weights of one attention layer. Weights are stored (in x out).
template <class T>
struct AttentionParams {
  Index dim = 0;
  Index heads = 1;
  Matrix<T> wq, wk, wv, wo;
  RowVector<T> bq, bk, bv, bo;

  Index head_dim() const { return dim / heads; }

  static AttentionParams random(Index dim, Index heads, Rng& rng, double std = 0.02) {
    require(heads >= 1 && dim % heads == 0, "attention params: dim must be divisible by heads");
    AttentionParams p;
    p.dim = dim;
    p.heads = heads;
    auto init = [&](Matrix<T>& m) {
      m.resize(dim, dim);
      for (Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<T>(rng.truncated_normal(std));
    };
    init(p.wq);
    init(p.wk);
    init(p.wv);
    init(p.wo);
    p.bq = p.bk = p.bv = p.bo = RowVector<T>::Zero(dim);
    return p;
  }
};

namespace detail {

template <class T>
Matrix<T> project(const Matrix<T>& x, const Matrix<T>& w, const RowVector<T>& b) {
  Matrix<T> y(x.rows(), w.cols());
  y.noalias() = x * w;
  y.rowwise() += b;
  return y;
}

}  // namespace detail

/// Full scaled dot-product attention layer: project, (optionally) rotate,
/// attend per head, concatenate, output-project.
template <class T>
Matrix<T> sdp_attention(const Matrix<T>& queries, const Matrix<T>& keys, const Matrix<T>& values,
                        const AttentionParams<T>& p, const embed::RopeTable<T>* query_rope = nullptr,
                        const embed::RopeTable<T>* key_rope = nullptr) {
  require(keys.rows() >= 1, "sdp_attention: M must be >= 1");
  require(keys.rows() == values.rows(), "sdp_attention: keys and values differ in row count");
  require(queries.cols() == p.dim && keys.cols() == p.dim && values.cols() == p.dim,
          "sdp_attention: input width differs from params.dim");
  Matrix<T> q = detail::project(queries, p.wq, p.bq);
  Matrix<T> k = detail::project(keys, p.wk, p.bk);
  Matrix<T> v = detail::project(values, p.wv, p.bv);
  if (query_rope) embed::rope_apply(q, *query_rope);
  if (key_rope) embed::rope_apply(k, *key_rope);
  return detail::project(multihead_attention(q, k, v, p.heads), p.wo, p.bo);
}

/// Anchor attention: keys and values come from the anchor rows only, every
/// row of `tokens` queries them. Cost is O(rows * anchors).
template <class T>
Matrix<T> anchor_attention(const Matrix<T>& tokens, std::span<const Index> anchor_ids, const AttentionParams<T>& p,
                           const embed::RopeTable<T>* rope = nullptr) {
  require(!anchor_ids.empty(), "anchor_attention: at least one anchor is required");
  require(tokens.cols() == p.dim, "anchor_attention: token width differs from params.dim");
  const Index m = static_cast<Index>(anchor_ids.size());
  Matrix<T> anchors(m, tokens.cols());
  for (Index i = 0; i < m; ++i) {
    require(anchor_ids[i] >= 0 && anchor_ids[i] < tokens.rows(), "anchor_attention: anchor id out of range");
    anchors.row(i) = tokens.row(anchor_ids[i]);
  }
  Matrix<T> q = detail::project(tokens, p.wq, p.bq);
  Matrix<T> k = detail::project(anchors, p.wk, p.bk);
  Matrix<T> v = detail::project(anchors, p.wv, p.bv);
  if (rope) {
    embed::rope_apply(q, *rope);
    // Anchor keys use the anchor rows' angles.
    embed::RopeTable<T> anchor_rope = *rope;
    anchor_rope.cos.resize(m, rope->cos.cols());
    anchor_rope.sin.resize(m, rope->sin.cols());
    for (Index i = 0; i < m; ++i) {
      anchor_rope.cos.row(i) = rope->cos.row(anchor_ids[i]);
      anchor_rope.sin.row(i) = rope->sin.row(anchor_ids[i]);
    }
    embed::rope_apply(k, anchor_rope);
  }
  return detail::project(multihead_attention(q, k, v, p.heads), p.wo, p.bo);
}

/// Keys and values of one attention layer, computed from anchor tokens.
template <class T>
struct KeyValue {
  ad::Var<T> key;    // post-rotation
  ad::Var<T> value;
};

/// Per-stage, per-branch anchor key/value arrays. Populated once by the
/// anchor pass, then only read while queries are decoded.
template <class T>
class KVCache {
 public:
  KVCache() = default;
  KVCache(Index branches, Index stages)
      : entries_(static_cast<std::size_t>(branches), std::vector<std::optional<KeyValue<T>>>(
                                                          static_cast<std::size_t>(stages))) {}

  void put(Index branch, Index stage, KeyValue<T> kv) {
    require(!sealed_, "kv cache is sealed");
    auto& slot = at(branch, stage);
    require(!slot.has_value(), "kv cache entry already populated");
    slot = std::move(kv);
  }

  const KeyValue<T>& get(Index branch, Index stage) const {
    const auto& slot = entries_.at(static_cast<std::size_t>(branch)).at(static_cast<std::size_t>(stage));
    require(slot.has_value(), "kv cache entry missing");
    return *slot;
  }

  void seal() { sealed_ = true; }
  bool sealed() const { return sealed_; }
  Index branches() const { return static_cast<Index>(entries_.size()); }
  Index stages() const { return entries_.empty() ? 0 : static_cast<Index>(entries_.front().size()); }

  std::size_t bytes() const {
    std::size_t total = 0;
    for (const auto& b : entries_) {
      for (const auto& e : b) {
        if (e) total += static_cast<std::size_t>(e->key.value().size() + e->value.value().size()) * sizeof(T);
      }
    }
    return total;
  }

 private:
  std::optional<KeyValue<T>>& at(Index branch, Index stage) {
    return entries_.at(static_cast<std::size_t>(branch)).at(static_cast<std::size_t>(stage));
  }

  std::vector<std::vector<std::optional<KeyValue<T>>>> entries_;
  bool sealed_ = false;
};

}  // namespace abupt::attn
