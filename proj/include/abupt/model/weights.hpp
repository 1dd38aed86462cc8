#pragma once

#include "abupt/autodiff/graph.hpp"
#include "abupt/core/rng.hpp"
#include "abupt/model/config.hpp"

#include <map>
#include <string>
#include <vector>

namespace abupt::model {

/// Named learnable parameters. Creation order is preserved and defines the
/// checkpoint layout and the initialization draw order.
template <class T>
class ModelWeights {
 public:
  ModelWeights() = default;

  ad::Parameter<T>& add(const std::string& name, Matrix<T> value) {
    require(!params_.contains(name), "weights: duplicate parameter '" + name + "'");
    order_.push_back(name);
    auto& p = params_[name];
    p.value = std::move(value);
    return p;
  }

  ad::Parameter<T>& at(const std::string& name) {
    auto it = params_.find(name);
    require(it != params_.end(), "weights: unknown parameter '" + name + "'");
    return it->second;
  }
  const ad::Parameter<T>& at(const std::string& name) const {
    auto it = params_.find(name);
    require(it != params_.end(), "weights: unknown parameter '" + name + "'");
    return it->second;
  }
  bool contains(const std::string& name) const { return params_.contains(name); }

  const std::vector<std::string>& names() const { return order_; }

  Index parameter_count() const {
    Index n = 0;
    for (const auto& [_, p] : params_) n += p.value.size();
    return n;
  }

  void zero_grad() {
    for (auto& [_, p] : params_) p.zero_grad();
  }

  bool all_finite() const {
    for (const auto& [_, p] : params_) {
      if (!p.value.allFinite()) return false;
    }
    return true;
  }

  template <class U>
  ModelWeights<U> cast() const {
    ModelWeights<U> out;
    for (const auto& n : order_) out.add(n, params_.at(n).value.template cast<U>());
    return out;
  }

 private:
  std::vector<std::string> order_;
  std::map<std::string, ad::Parameter<T>> params_;
};

namespace detail {

template <class T>
Matrix<T> truncated_normal(Index rows, Index cols, Rng& rng, double std) {
  Matrix<T> m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<T>(rng.truncated_normal(std));
  return m;
}

template <class T>
void add_linear(ModelWeights<T>& w, const std::string& name, Index in, Index out, Rng& rng, bool zero = false) {
  w.add(name + ".weight", zero ? Matrix<T>::Zero(in, out) : truncated_normal<T>(in, out, rng, 0.02));
  w.add(name + ".bias", Matrix<T>::Zero(1, out));
}

template <class T>
void add_norm(ModelWeights<T>& w, const std::string& name, Index dim) {
  w.add(name + ".gain", Matrix<T>::Ones(1, dim));
  w.add(name + ".shift", Matrix<T>::Zero(1, dim));
}

template <class T>
void add_block(ModelWeights<T>& w, const std::string& prefix, const ModelConfig& c, bool cross, Rng& rng) {
  const Index d = c.dim;
  add_norm(w, prefix + ".norm1", d);
  if (cross) add_norm(w, prefix + ".kv_norm", d);
  add_linear(w, prefix + ".q", d, d, rng);
  add_linear(w, prefix + ".k", d, d, rng);
  add_linear(w, prefix + ".v", d, d, rng);
  add_linear(w, prefix + ".o", d, d, rng);
  add_norm(w, prefix + ".norm2", d);
  add_linear(w, prefix + ".mlp.fc1", d, c.hidden_dim(), rng);
  add_linear(w, prefix + ".mlp.fc2", c.hidden_dim(), d, rng);
}

}  // namespace detail

/// Fresh weights: truncated-normal (std 0.02) projections, zero biases,
/// unit norms, zero output heads (so step-0 predictions are the target mean).
template <class T>
ModelWeights<T> init_weights(const ModelConfig& c, std::uint64_t seed) {
  c.validate();
  Rng rng(seed);
  ModelWeights<T> w;
  const Index d = c.dim, e = c.embed_dim();
  detail::add_linear(w, "pool.message.fc1", e + 1, d, rng);
  detail::add_linear(w, "pool.message.fc2", d, d, rng);
  detail::add_linear(w, "pool.project", d + e, d, rng);
  detail::add_block(w, "geometry.block", c, false, rng);
  for (const char* b : {"surface", "volume"}) {
    detail::add_linear(w, std::string("encoder.") + b + ".fc1", e, d, rng);
    detail::add_linear(w, std::string("encoder.") + b + ".fc2", d, d, rng);
  }
  detail::add_block(w, "geometry_cross", c, true, rng);
  for (Index k = 0; k < c.physics_blocks; ++k) {
    detail::add_block(w, "physics." + std::to_string(k) + ".self", c, false, rng);
    detail::add_block(w, "physics." + std::to_string(k) + ".cross", c, true, rng);
  }
  for (Index i = 0; i < c.shared_blocks(); ++i) detail::add_block(w, "shared." + std::to_string(i), c, false, rng);
  for (const char* b : {"surface", "volume"}) {
    for (Index i = 0; i < c.decoder_blocks; ++i) {
      detail::add_block(w, std::string("decoder.") + b + "." + std::to_string(i), c, false, rng);
    }
  }
  detail::add_norm(w, "head.surface.norm", d);
  detail::add_linear(w, "head.surface.out", d, c.surface_channels, rng, true);
  detail::add_norm(w, "head.volume.norm", d);
  detail::add_linear(w, "head.volume.out", d, c.volume_channels, rng, true);
  return w;
}

}  // namespace abupt::model
