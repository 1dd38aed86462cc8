#pragma once

#include "abupt/core/error.hpp"
#include "abupt/core/types.hpp"

#include <cmath>
#include <utility>
#include <vector>

namespace abupt::physics {

/// Surface cells with outward unit normals, areas (m^2), pressure (Pa) and
/// wall shear stress (Pa).
struct SurfacePatchSet {
  std::vector<Vec3> normals;
  std::vector<double> areas;
  std::vector<double> pressure;
  std::vector<Vec3> shear;

  std::size_t size() const { return areas.size(); }

  void validate() const {
    const std::size_t n = areas.size();
    require(normals.size() == n && pressure.size() == n && shear.size() == n, "surface patches: ragged arrays");
    for (std::size_t i = 0; i < n; ++i) {
      require(areas[i] > 0.0, "surface patches: non-positive area");
      require(std::abs(normals[i].norm() - 1.0) <= 1e-6, "surface patches: normal is not unit length");
    }
  }
};

/// F = sum over cells of (-(p - p_inf) n + tau_w) dS.
inline Vec3 surface_force(const SurfacePatchSet& patches, double p_inf = 0.0) {
  require(patches.size() > 0, "surface_force: no patches");
  patches.validate();
  Vec3 f = Vec3::Zero();
  for (std::size_t i = 0; i < patches.size(); ++i) {
    f += (-(patches.pressure[i] - p_inf) * patches.normals[i] + patches.shear[i]) * patches.areas[i];
  }
  return f;
}

struct Coefficients {
  double drag = 0.0;
  double lift = 0.0;
};

/// C = 2 (F . e) / (rho v^2 A_ref) along the flow and lift directions.
inline Coefficients drag_lift_coefficients(const Vec3& force, const Vec3& e_flow, const Vec3& e_lift, double rho,
                                           double velocity, double area_ref) {
  require(rho > 0.0 && velocity > 0.0 && area_ref > 0.0,
          "drag_lift_coefficients: density, velocity and reference area must be positive");
  require(std::abs(e_flow.norm() - 1.0) <= 1e-6 && std::abs(e_lift.norm() - 1.0) <= 1e-6,
          "drag_lift_coefficients: direction vectors must be unit length");
  const double q = rho * velocity * velocity * area_ref;
  return {2.0 * force.dot(e_flow) / q, 2.0 * force.dot(e_lift) / q};
}

}  // namespace abupt::physics
