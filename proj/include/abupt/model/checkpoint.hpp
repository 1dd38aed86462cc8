#pragma once

// Checkpoint directory: `manifest` (JSON with the model config, the
// normalization statistics and a key/shape/dtype/offset table) and
// `weights.f32`, all tensors concatenated as little-endian float32.

#include "abupt/core/blob.hpp"
#include "abupt/geom/normalization.hpp"
#include "abupt/model/weights.hpp"

#include <nlohmann/json.hpp>

#include <set>
#include <string>

namespace abupt::model {

namespace fs = std::filesystem;
using json = nlohmann::json;

inline constexpr const char* kCheckpointFormat = "abupt-checkpoint-1";

namespace detail {

inline void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& what) {
  require(j.is_object(), what + ": expected an object");
  for (const auto& [k, _] : j.items()) {
    if (!known.contains(k)) throw InvalidArgument(what + ": unknown key '" + k + "'");
  }
}

inline json vec3_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

inline Vec3 json_vec3(const json& j, const std::string& what) {
  require(j.is_array() && j.size() == 3, what + ": expected a 3-vector");
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

}  // namespace detail

inline json to_json(const ModelConfig& c) {
  return {{"dim", c.dim},
          {"heads", c.heads},
          {"blocks", c.blocks},
          {"physics_blocks", c.physics_blocks},
          {"decoder_blocks", c.decoder_blocks},
          {"supernodes", c.supernodes},
          {"radius", c.radius},
          {"surface_anchors", c.surface_anchors},
          {"volume_anchors", c.volume_anchors},
          {"mlp_ratio", c.mlp_ratio},
          {"max_wavelength", c.max_wavelength}};
}

/// Applies the keys present in `j` on top of `base`; unknown keys are errors.
inline ModelConfig model_config_from_json(const json& j, ModelConfig base = {}) {
  detail::reject_unknown(j,
                         {"dim", "heads", "blocks", "physics_blocks", "decoder_blocks", "supernodes", "radius",
                          "surface_anchors", "volume_anchors", "mlp_ratio", "max_wavelength"},
                         "model config");
  try {
    auto set = [&](const char* key, auto& field) {
      if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    set("dim", base.dim);
    set("heads", base.heads);
    set("blocks", base.blocks);
    set("physics_blocks", base.physics_blocks);
    set("decoder_blocks", base.decoder_blocks);
    set("supernodes", base.supernodes);
    set("radius", base.radius);
    set("surface_anchors", base.surface_anchors);
    set("volume_anchors", base.volume_anchors);
    set("mlp_ratio", base.mlp_ratio);
    set("max_wavelength", base.max_wavelength);
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("model config: ") + e.what());
  }
  base.validate();
  return base;
}

inline json to_json(const geom::NormalizationStats& s) {
  return {{"bbox_min", detail::vec3_json(s.bbox_min)},
          {"bbox_max", detail::vec3_json(s.bbox_max)},
          {"surface_mean", s.surface_mean},
          {"surface_std", s.surface_std},
          {"volume_mean", s.volume_mean},
          {"volume_std", s.volume_std},
          {"vorticity_transform", geom::to_string(s.vorticity_transform)},
          {"vorticity_sigma", detail::vec3_json(s.vorticity_sigma)}};
}

inline geom::NormalizationStats normalization_from_json(const json& j) {
  detail::reject_unknown(j,
                         {"bbox_min", "bbox_max", "surface_mean", "surface_std", "volume_mean", "volume_std",
                          "vorticity_transform", "vorticity_sigma"},
                         "normalization");
  geom::NormalizationStats s;
  try {
    s.bbox_min = detail::json_vec3(j.at("bbox_min"), "bbox_min");
    s.bbox_max = detail::json_vec3(j.at("bbox_max"), "bbox_max");
    s.surface_mean = j.at("surface_mean").get<std::vector<double>>();
    s.surface_std = j.at("surface_std").get<std::vector<double>>();
    s.volume_mean = j.at("volume_mean").get<std::vector<double>>();
    s.volume_std = j.at("volume_std").get<std::vector<double>>();
    s.vorticity_transform = geom::vorticity_transform_from_string(j.at("vorticity_transform").get<std::string>());
    s.vorticity_sigma = detail::json_vec3(j.at("vorticity_sigma"), "vorticity_sigma");
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("normalization: ") + e.what());
  }
  s.validate();
  return s;
}

struct CheckpointInfo {
  std::string kind = "raw";     // raw | ema
  std::string head = "direct";  // direct | divfree
  Index step = 0;
};

struct Checkpoint {
  ModelConfig config;
  geom::NormalizationStats stats;
  ModelWeights<float> weights;
  CheckpointInfo info;
};

template <class T>
void save_checkpoint(const fs::path& dir, const ModelConfig& config, const geom::NormalizationStats& stats,
                     const ModelWeights<T>& weights, const CheckpointInfo& info = {}) {
  std::string blob;
  json tensors = json::array();
  for (const auto& name : weights.names()) {
    const Matrix<T>& v = weights.at(name).value;
    const Matrix<float> f = v.template cast<float>();
    tensors.push_back({{"key", name},
                       {"shape", {v.rows(), v.cols()}},
                       {"dtype", "f32"},
                       {"offset", blob.size()}});
    blob += io::encode_f32(std::span<const float>(f.data(), static_cast<std::size_t>(f.size())));
  }
  json m = {{"format", kCheckpointFormat},
            {"kind", info.kind},
            {"head", info.head},
            {"step", info.step},
            {"model_config", to_json(config)},
            {"normalization", to_json(stats)},
            {"blob", "weights.f32"},
            {"tensors", tensors}};
  io::write_file(dir / "weights.f32", blob);
  io::write_file(dir / "manifest", m.dump(2) + "\n");
}

/// Loads and checks a checkpoint: every tensor of the configured
/// architecture must be present with the expected shape.
inline Checkpoint load_checkpoint(const fs::path& dir) {
  if (!fs::exists(dir / "manifest")) throw InvalidArgument("no checkpoint manifest in " + dir.string());
  json m;
  try {
    m = json::parse(io::read_file<IoError>(dir / "manifest"));
  } catch (const json::exception& e) {
    throw CorruptData(std::string("checkpoint manifest is not valid JSON: ") + e.what());
  }
  if (m.value("format", std::string()) != kCheckpointFormat) throw CorruptData("unknown checkpoint format");
  Checkpoint ck;
  try {
    ck.config = model_config_from_json(m.at("model_config"));
    ck.stats = normalization_from_json(m.at("normalization"));
    ck.info.kind = m.at("kind").get<std::string>();
    ck.info.head = m.at("head").get<std::string>();
    ck.info.step = m.at("step").get<Index>();
    const std::string blob = io::read_file<CorruptData>(dir / m.at("blob").get<std::string>());
    const auto expected = init_weights<float>(ck.config, 0);
    std::set<std::string> seen;
    for (const auto& t : m.at("tensors")) {
      const auto key = t.at("key").get<std::string>();
      const auto shape = t.at("shape").get<std::vector<Index>>();
      const auto offset = t.at("offset").get<std::size_t>();
      if (t.at("dtype").get<std::string>() != "f32") throw CorruptData("checkpoint tensor " + key + ": unsupported dtype");
      if (!expected.contains(key)) throw InvalidArgument("checkpoint/config mismatch: unexpected tensor " + key);
      const auto& ref = expected.at(key).value;
      if (shape.size() != 2 || shape[0] != ref.rows() || shape[1] != ref.cols()) {
        throw InvalidArgument("checkpoint/config mismatch: tensor " + key + " has the wrong shape");
      }
      const auto bytes = static_cast<std::size_t>(shape[0] * shape[1]) * 4;
      if (offset + bytes > blob.size()) throw CorruptData("checkpoint tensor " + key + " runs past the blob");
      Matrix<float> v(shape[0], shape[1]);
      io::decode_f32(blob.data() + offset, std::span<float>(v.data(), static_cast<std::size_t>(v.size())));
      if (!v.allFinite()) throw CorruptData("checkpoint tensor " + key + " has non-finite values");
      seen.insert(key);
      ck.weights.add(key, std::move(v));
    }
    for (const auto& name : expected.names()) {
      if (!seen.contains(name)) throw InvalidArgument("checkpoint/config mismatch: missing tensor " + name);
    }
  } catch (const json::exception& e) {
    throw CorruptData(std::string("checkpoint manifest: ") + e.what());
  }
  return ck;
}

}  // namespace abupt::model
