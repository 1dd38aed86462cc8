#pragma once

#include "abupt/core/error.hpp"
#include "abupt/core/types.hpp"
#include "abupt/embed/sincos.hpp"

#include <cmath>
#include <string>

namespace abupt::model {

enum class Branch : int { kSurface = 0, kVolume = 1 };

inline constexpr Index kBranches = 2;

inline const char* branch_name(Branch b) { return b == Branch::kSurface ? "surface" : "volume"; }

/// Architecture hyperparameters. Per branch, tokens traverse `blocks`
/// transformer blocks: one geometry cross-attention block, `physics_blocks`
/// (self, cross-branch) pairs, shared self-attention blocks, then
/// `decoder_blocks` branch-specific self-attention blocks.
struct ModelConfig {
  Index dim = 192;
  Index heads = 3;
  Index blocks = 12;
  Index physics_blocks = 2;
  Index decoder_blocks = 6;
  Index supernodes = 16384;
  double radius = 0.25;  // meters
  Index surface_anchors = 16384;
  Index volume_anchors = 16384;
  double mlp_ratio = 4.0;
  Index surface_channels = 4;  // p, tau_x, tau_y, tau_z
  Index volume_channels = 7;   // p, u_x, u_y, u_z, w_x, w_y, w_z
  double max_wavelength = embed::kDefaultMaxWavelength;

  Index shared_blocks() const { return blocks - 1 - 2 * physics_blocks - decoder_blocks; }
  Index head_dim() const { return dim / heads; }
  Index hidden_dim() const { return static_cast<Index>(std::lround(static_cast<double>(dim) * mlp_ratio)); }
  Index embed_dim() const { return embed::embed_width(dim); }
  Index stages() const { return blocks; }

  Index channels(Branch b) const { return b == Branch::kSurface ? surface_channels : volume_channels; }
  Index anchors(Branch b) const { return b == Branch::kSurface ? surface_anchors : volume_anchors; }

  void validate() const {
    require(dim >= 6, "model config: dim must be >= 6");
    require(heads >= 1 && dim % heads == 0, "model config: dim must be divisible by heads");
    require(head_dim() >= 6, "model config: head dim must be >= 6 for 3D rotary embeddings");
    require(physics_blocks >= 0 && decoder_blocks >= 0, "model config: negative block count");
    require(shared_blocks() >= 0, "model config: 1 + 2*physics_blocks + decoder_blocks exceeds blocks");
    require(supernodes >= 1, "model config: at least one supernode is required");
    require(radius > 0.0, "model config: radius must be positive");
    require(surface_anchors >= 1 && volume_anchors >= 1, "model config: anchor counts must be >= 1");
    require(mlp_ratio > 0.0, "model config: mlp_ratio must be positive");
    require(surface_channels == 4 && volume_channels == 7, "model config: channel layout is fixed at 4 / 7");
    require(max_wavelength > 1.0, "model config: max_wavelength must exceed 1");
  }

  /// 12 blocks: geometry cross, 2x(self, cross), 1 shared self, 6 branch-specific.
  static ModelConfig drivaerml() { return ModelConfig{}; }

  /// 12 blocks: geometry cross, 4x(self, cross), 1 shared self, 2 branch-specific.
  static ModelConfig ahmedml() {
    ModelConfig c;
    c.physics_blocks = 4;
    c.decoder_blocks = 2;
    return c;
  }
};

}  // namespace abupt::model
