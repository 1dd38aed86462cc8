#pragma once

#include "abupt/geom/point_cloud.hpp"

#include <string>
#include <vector>

namespace abupt::geom {

/// Network coordinates span [0, kCoordinateRange] over the training bbox.
inline constexpr double kCoordinateRange = 1000.0;

enum class VorticityTransform { kLog1pSigned, kSqrtSigned, kNone };

inline std::string to_string(VorticityTransform t) {
  switch (t) {
    case VorticityTransform::kLog1pSigned: return "log1p-signed";
    case VorticityTransform::kSqrtSigned: return "sqrt-signed";
    case VorticityTransform::kNone: return "none";
  }
  return "none";
}

inline VorticityTransform vorticity_transform_from_string(const std::string& s) {
  if (s == "log1p-signed") return VorticityTransform::kLog1pSigned;
  if (s == "sqrt-signed") return VorticityTransform::kSqrtSigned;
  if (s == "none") return VorticityTransform::kNone;
  throw InvalidArgument("unknown vorticity transform '" + s + "'");
}

/// Frozen dataset statistics: the coordinate map physics -> network space
/// and per-channel target standardization (physics = mean + std * network,
/// so std is the output scale).
struct NormalizationStats {
  Vec3 bbox_min = Vec3::Zero();
  Vec3 bbox_max = Vec3::Ones();
  std::vector<double> surface_mean, surface_std;  // p, tau_x, tau_y, tau_z
  std::vector<double> volume_mean, volume_std;    // p, u_x, u_y, u_z, w_x, w_y, w_z (w after transform)
  VorticityTransform vorticity_transform = VorticityTransform::kLog1pSigned;
  Vec3 vorticity_sigma = Vec3::Ones();            // raw per-component std, used by the sqrt-signed transform

  /// Network units per meter, per axis.
  Vec3 coord_scale() const {
    const Vec3 extent = bbox_max - bbox_min;
    return Vec3(kCoordinateRange / extent.x(), kCoordinateRange / extent.y(), kCoordinateRange / extent.z());
  }

  void validate() const {
    for (int a = 0; a < 3; ++a) {
      require(std::isfinite(bbox_min[a]) && std::isfinite(bbox_max[a]), "normalization: non-finite bbox");
      require(bbox_max[a] > bbox_min[a], "normalization: degenerate bbox axis " + std::to_string(a));
    }
    auto check = [](const std::vector<double>& m, const std::vector<double>& s, std::size_t n, const char* what) {
      require(m.size() == n && s.size() == n, std::string("normalization: wrong channel count for ") + what);
      for (double v : s) require(v > 0.0 && std::isfinite(v), std::string("normalization: non-positive std in ") + what);
      for (double v : m) require(std::isfinite(v), std::string("normalization: non-finite mean in ") + what);
    };
    check(surface_mean, surface_std, 4, "surface");
    check(volume_mean, volume_std, 7, "volume");
    for (int a = 0; a < 3; ++a) require(vorticity_sigma[a] > 0.0, "normalization: non-positive vorticity sigma");
  }
};

/// Physics -> network coordinates: bbox_min maps to 0, bbox_max to 1000.
inline Vec3 scale_coordinates(const Vec3& x, const NormalizationStats& stats) {
  Vec3 out;
  for (int a = 0; a < 3; ++a) {
    const double extent = stats.bbox_max[a] - stats.bbox_min[a];
    require(extent > 0.0, "scale_coordinates: degenerate bbox axis " + std::to_string(a));
    // Dividing by the extent (instead of multiplying by its reciprocal) maps
    // the bbox corners to exactly 0 and 1000.
    out[a] = (x[a] - stats.bbox_min[a]) / extent * kCoordinateRange;
  }
  return out;
}

inline std::vector<Vec3> scale_coordinates(const PointCloud& cloud, const NormalizationStats& stats) {
  std::vector<Vec3> out;
  out.reserve(static_cast<std::size_t>(cloud.count()));
  for (const auto& p : cloud.positions()) out.push_back(scale_coordinates(p, stats));
  return out;
}

inline Vec3 unscale_coordinates(const Vec3& x_net, const NormalizationStats& stats) {
  Vec3 out;
  for (int a = 0; a < 3; ++a) {
    out[a] = stats.bbox_min[a] + x_net[a] / kCoordinateRange * (stats.bbox_max[a] - stats.bbox_min[a]);
  }
  return out;
}

}  // namespace abupt::geom
