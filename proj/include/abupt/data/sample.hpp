#pragma once

#include "abupt/core/error.hpp"
#include "abupt/geom/point_cloud.hpp"

#include <cmath>
#include <string>
#include <utility>
#include <vector>

namespace abupt::data {

/// Row-major 32-bit float array, the in-memory twin of one blob file.
struct Array2 {
  Index rows = 0;
  Index cols = 0;
  std::vector<float> values;

  Array2() = default;
  Array2(Index r, Index c) : rows(r), cols(c), values(static_cast<std::size_t>(r * c), 0.0f) {}

  float& operator()(Index r, Index c) { return values[static_cast<std::size_t>(r * cols + c)]; }
  float operator()(Index r, Index c) const { return values[static_cast<std::size_t>(r * cols + c)]; }
  bool empty() const { return rows == 0; }

  Vec3 vec3(Index r) const { return Vec3((*this)(r, 0), (*this)(r, 1), (*this)(r, 2)); }
  void set_vec3(Index r, const Vec3& v) {
    for (int a = 0; a < 3; ++a) (*this)(r, a) = static_cast<float>(v[a]);
  }

  bool all_finite() const {
    for (float v : values) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

  bool operator==(const Array2&) const = default;
};

inline geom::PointCloud to_cloud(const Array2& pos) {
  require(pos.cols == 3, "positions must have 3 columns");
  std::vector<Vec3> pts;
  pts.reserve(static_cast<std::size_t>(pos.rows));
  for (Index r = 0; r < pos.rows; ++r) pts.push_back(pos.vec3(r));
  return geom::PointCloud(std::move(pts));
}

/// One geometry with its surface and volume point clouds and target fields.
struct SimulationSample {
  std::string id;
  Array2 geometry_pos;                                  // Ng x 3
  Array2 surface_pos, surface_p, surface_tau;           // Ns x 3, Ns x 1, Ns x 3
  Array2 surface_normal, surface_area;                  // optional: Ns x 3, Ns x 1
  Array2 volume_pos, volume_p, volume_u, volume_omega;  // Nv x 3, Nv x 1, Nv x 3, Nv x 3

  /// (blob name, array) pairs in on-disk naming.
  std::vector<std::pair<std::string, const Array2*>> arrays() const {
    return {{"geometry.pos", &geometry_pos}, {"surface.pos", &surface_pos},     {"surface.p", &surface_p},
            {"surface.tau", &surface_tau},   {"surface.normal", &surface_normal}, {"surface.area", &surface_area},
            {"volume.pos", &volume_pos},     {"volume.p", &volume_p},           {"volume.u", &volume_u},
            {"volume.omega", &volume_omega}};
  }

  Array2* array(const std::string& name) {
    for (auto& [n, a] : arrays()) {
      if (n == name) return const_cast<Array2*>(a);
    }
    return nullptr;
  }

  bool has_surface_geometry() const { return !surface_normal.empty() && !surface_area.empty(); }

  geom::PointCloud geometry() const { return to_cloud(geometry_pos); }
  geom::PointCloud surface() const { return to_cloud(surface_pos); }
  geom::PointCloud volume() const { return to_cloud(volume_pos); }

  void validate() const {
    auto shape = [&](const Array2& a, Index rows, Index cols, const char* name) {
      if (a.rows != rows || a.cols != cols) {
        throw CorruptData(std::string("sample ") + id + ": array " + name + " has shape " + std::to_string(a.rows) +
                          "x" + std::to_string(a.cols) + ", expected " + std::to_string(rows) + "x" +
                          std::to_string(cols));
      }
    };
    if (geometry_pos.rows < 1 || surface_pos.rows < 1 || volume_pos.rows < 1) {
      throw CorruptData("sample " + id + ": empty point cloud");
    }
    shape(geometry_pos, geometry_pos.rows, 3, "geometry.pos");
    const Index ns = surface_pos.rows, nv = volume_pos.rows;
    shape(surface_pos, ns, 3, "surface.pos");
    shape(surface_p, ns, 1, "surface.p");
    shape(surface_tau, ns, 3, "surface.tau");
    if (!surface_normal.empty()) shape(surface_normal, ns, 3, "surface.normal");
    if (!surface_area.empty()) shape(surface_area, ns, 1, "surface.area");
    shape(volume_pos, nv, 3, "volume.pos");
    shape(volume_p, nv, 1, "volume.p");
    shape(volume_u, nv, 3, "volume.u");
    shape(volume_omega, nv, 3, "volume.omega");
    for (const auto& [name, a] : arrays()) {
      if (!a->all_finite()) throw CorruptData("sample " + id + ": non-finite values in " + name);
    }
  }
};

}  // namespace abupt::data
