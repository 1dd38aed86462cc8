#pragma once

// Analytic flows around simple parametric bodies.
//
// The vector potential is psi(x) = U y e_z + sum_m sin(theta_m) A_m with
// theta_m = k_m . (x - c) + phi_m, so
//   u     = curl psi = U e_x + sum_m cos(theta_m) (k_m x A_m)
//   omega = curl u   = sum_m sin(theta_m) (|k_m|^2 A_m - k_m (k_m . A_m))
// and div u = 0 identically.

#include "abupt/core/rng.hpp"
#include "abupt/data/sample.hpp"

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

namespace abupt::data {

enum class BodyKind { kSphere, kBox };

inline std::string to_string(BodyKind b) { return b == BodyKind::kSphere ? "sphere" : "box"; }

inline BodyKind body_kind_from_string(const std::string& s) {
  if (s == "sphere") return BodyKind::kSphere;
  if (s == "box") return BodyKind::kBox;
  throw InvalidArgument("unknown body kind '" + s + "' (expected sphere or box)");
}

struct SyntheticConfig {
  Index geometry_points = 2048;
  Index surface_points = 2048;
  Index volume_points = 2048;
  Index modes = 6;
  BodyKind body = BodyKind::kSphere;
  double freestream = 1.0;
  double density = 1.0;
  double shear_coefficient = 0.05;
  Vec3 domain_min = Vec3(-2.0, -1.0, -1.0);
  Vec3 domain_max = Vec3(2.0, 1.0, 1.0);

  void validate() const {
    require(geometry_points >= 1 && surface_points >= 1 && volume_points >= 1,
            "synthetic: point counts must be >= 1");
    require(modes >= 1 && modes <= 8, "synthetic: mode count must be in [1, 8]");
    require((domain_max - domain_min).minCoeff() > 0.0, "synthetic: empty domain box");
  }
};

struct FlowMode {
  Vec3 k;
  Vec3 amplitude;
  double phase = 0.0;
};

/// Closed-form potential, velocity, vorticity and pressure of one sample.
struct AnalyticFlow {
  double freestream = 1.0;
  double density = 1.0;
  Vec3 center = Vec3::Zero();
  std::vector<FlowMode> modes;

  double theta(const FlowMode& m, const Vec3& x) const { return m.k.dot(x - center) + m.phase; }

  Vec3 potential(const Vec3& x) const {
    Vec3 psi(0.0, 0.0, freestream * x.y());
    for (const auto& m : modes) psi += std::sin(theta(m, x)) * m.amplitude;
    return psi;
  }

  Vec3 velocity(const Vec3& x) const {
    Vec3 u(freestream, 0.0, 0.0);
    for (const auto& m : modes) u += std::cos(theta(m, x)) * m.k.cross(m.amplitude);
    return u;
  }

  Vec3 vorticity(const Vec3& x) const {
    Vec3 w = Vec3::Zero();
    for (const auto& m : modes) {
      w += std::sin(theta(m, x)) * (m.k.squaredNorm() * m.amplitude - m.k * m.k.dot(m.amplitude));
    }
    return w;
  }

  /// Bernoulli-like: p = 1/2 rho (U^2 - |u|^2).
  double pressure(const Vec3& x) const {
    return 0.5 * density * (freestream * freestream - velocity(x).squaredNorm());
  }
};

/// Parametric closed body: a sphere or an axis-aligned box.
struct Body {
  BodyKind kind = BodyKind::kSphere;
  Vec3 center = Vec3::Zero();
  double radius = 0.4;                     // sphere
  Vec3 half = Vec3::Constant(0.3);         // box

  bool contains(const Vec3& x) const {
    const Vec3 d = x - center;
    if (kind == BodyKind::kSphere) return d.norm() <= radius;
    return (d.cwiseAbs() - half).maxCoeff() <= 0.0;
  }

  double surface_area() const {
    if (kind == BodyKind::kSphere) return 4.0 * std::numbers::pi * radius * radius;
    return 8.0 * (half.x() * half.y() + half.y() * half.z() + half.x() * half.z());
  }

  /// Uniformly distributed surface point.
  Vec3 random_surface_point(Rng& rng) const {
    if (kind == BodyKind::kSphere) {
      Vec3 v(rng.normal(), rng.normal(), rng.normal());
      while (v.norm() < 1e-12) v = Vec3(rng.normal(), rng.normal(), rng.normal());
      return center + radius * v.normalized();
    }
    const double face_area[3] = {half.y() * half.z(), half.x() * half.z(), half.x() * half.y()};
    const double total = face_area[0] + face_area[1] + face_area[2];
    double r = rng.uniform(0.0, total);
    int axis = 0;
    while (axis < 2 && r > face_area[axis]) r -= face_area[axis++];
    Vec3 p;
    for (int a = 0; a < 3; ++a) p[a] = rng.uniform(-half[a], half[a]);
    p[axis] = rng.uniform() < 0.5 ? -half[axis] : half[axis];
    return center + p;
  }
};

struct SurfaceCell {
  Vec3 position;
  Vec3 normal;
  double area;
};

namespace detail {

/// Fibonacci lattice: n equal-area cells on the sphere.
inline std::vector<SurfaceCell> sphere_cells(const Body& body, Index n) {
  std::vector<SurfaceCell> cells;
  cells.reserve(static_cast<std::size_t>(n));
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  const double area = body.surface_area() / static_cast<double>(n);
  for (Index i = 0; i < n; ++i) {
    const double z = 1.0 - (2.0 * static_cast<double>(i) + 1.0) / static_cast<double>(n);
    const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = golden * static_cast<double>(i);
    const Vec3 nrm(rho * std::cos(phi), rho * std::sin(phi), z);
    cells.push_back({body.center + body.radius * nrm, nrm.normalized(), area});
  }
  return cells;
}

/// Box faces split into near-square grid cells; the cell count is
/// distributed over the faces by area, remainders going to the largest faces.
inline std::vector<SurfaceCell> box_cells(const Body& body, Index n) {
  struct Face {
    int axis;
    double sign;
    double area;
    Index count;
  };
  std::vector<Face> faces;
  for (int axis = 0; axis < 3; ++axis) {
    const int u = (axis + 1) % 3, v = (axis + 2) % 3;
    for (double s : {-1.0, 1.0}) faces.push_back({axis, s, 4.0 * body.half[u] * body.half[v], 0});
  }
  const double total = body.surface_area();
  Index assigned = 0;
  for (auto& f : faces) {
    f.count = static_cast<Index>(std::floor(static_cast<double>(n) * f.area / total));
    assigned += f.count;
  }
  for (std::size_t i = 0; assigned < n; i = (i + 1) % faces.size(), ++assigned) faces[i].count += 1;

  std::vector<SurfaceCell> cells;
  cells.reserve(static_cast<std::size_t>(n));
  for (const auto& f : faces) {
    if (f.count == 0) continue;
    const int u = (f.axis + 1) % 3, v = (f.axis + 2) % 3;
    const double lu = 2.0 * body.half[u], lv = 2.0 * body.half[v];
    // Rows of nu cells; the last row may be partial and gets wider cells.
    const Index nu = std::max<Index>(1, static_cast<Index>(std::round(std::sqrt(static_cast<double>(f.count) * lu / lv))));
    const Index rows = (f.count + nu - 1) / nu;
    const double row_h = lv / static_cast<double>(rows);
    Vec3 nrm = Vec3::Zero();
    nrm[f.axis] = f.sign;
    Index left = f.count;
    for (Index r = 0; r < rows; ++r) {
      const Index in_row = std::min(nu, left);
      left -= in_row;
      const double w = lu / static_cast<double>(in_row);
      for (Index c = 0; c < in_row; ++c) {
        Vec3 p = body.center;
        p[f.axis] += f.sign * body.half[f.axis];
        p[u] += -body.half[u] + (static_cast<double>(c) + 0.5) * w;
        p[v] += -body.half[v] + (static_cast<double>(r) + 0.5) * row_h;
        cells.push_back({p, nrm, w * row_h});
      }
    }
  }
  return cells;
}

}  // namespace detail

inline std::vector<SurfaceCell> surface_cells(const Body& body, Index n) {
  require(n >= 1, "surface_cells: need at least one cell");
  return body.kind == BodyKind::kSphere ? detail::sphere_cells(body, n) : detail::box_cells(body, n);
}

/// Seeded body and flow for one sample.
struct SyntheticCase {
  Body body;
  AnalyticFlow flow;
};

inline SyntheticCase synthetic_case(const SyntheticConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng(seed);
  SyntheticCase sc;
  sc.body.kind = cfg.body;
  const Vec3 mid = 0.5 * (cfg.domain_min + cfg.domain_max);
  const Vec3 ext = cfg.domain_max - cfg.domain_min;
  for (int a = 0; a < 3; ++a) sc.body.center[a] = mid[a] + rng.uniform(-0.1, 0.1) * ext[a];
  const double size = rng.uniform(0.25, 0.4) * ext.minCoeff() / 2.0 * 1.6;
  sc.body.radius = size;
  for (int a = 0; a < 3; ++a) sc.body.half[a] = size * rng.uniform(0.7, 1.1);

  sc.flow.freestream = cfg.freestream;
  sc.flow.density = cfg.density;
  sc.flow.center = sc.body.center;
  const double strength = size / 0.4;
  for (Index m = 0; m < cfg.modes; ++m) {
    FlowMode fm;
    Vec3 dir(rng.normal(), rng.normal(), rng.normal());
    while (dir.norm() < 1e-6) dir = Vec3(rng.normal(), rng.normal(), rng.normal());
    const double kmag = rng.uniform(1.0, 2.5);
    fm.k = kmag * dir.normalized();
    const double amp = 0.1 * strength / kmag;
    fm.amplitude = Vec3(amp * rng.normal(), amp * rng.normal(), amp * rng.normal());
    fm.phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    sc.flow.modes.push_back(fm);
  }
  return sc;
}

/// Builds one sample; identical (config, seed) gives a byte-identical sample.
inline SimulationSample generate_synthetic(const SyntheticConfig& cfg, std::uint64_t seed,
                                           std::string id = "sample") {
  const SyntheticCase sc = synthetic_case(cfg, seed);
  Rng rng = Rng(seed).fork(0x5eed);
  SimulationSample s;
  s.id = std::move(id);

  s.geometry_pos = Array2(cfg.geometry_points, 3);
  for (Index i = 0; i < cfg.geometry_points; ++i) s.geometry_pos.set_vec3(i, sc.body.random_surface_point(rng));

  const auto cells = surface_cells(sc.body, cfg.surface_points);
  const Index ns = static_cast<Index>(cells.size());
  s.surface_pos = Array2(ns, 3);
  s.surface_p = Array2(ns, 1);
  s.surface_tau = Array2(ns, 3);
  s.surface_normal = Array2(ns, 3);
  s.surface_area = Array2(ns, 1);
  for (Index i = 0; i < ns; ++i) {
    const auto& c = cells[static_cast<std::size_t>(i)];
    const Vec3 u = sc.flow.velocity(c.position);
    s.surface_pos.set_vec3(i, c.position);
    s.surface_p(i, 0) = static_cast<float>(sc.flow.pressure(c.position));
    s.surface_tau.set_vec3(i, cfg.shear_coefficient * (u - u.dot(c.normal) * c.normal));
    s.surface_normal.set_vec3(i, c.normal);
    s.surface_area(i, 0) = static_cast<float>(c.area);
  }

  const Index nv = cfg.volume_points;
  s.volume_pos = Array2(nv, 3);
  s.volume_p = Array2(nv, 1);
  s.volume_u = Array2(nv, 3);
  s.volume_omega = Array2(nv, 3);
  for (Index i = 0; i < nv; ++i) {
    Vec3 x;
    do {
      for (int a = 0; a < 3; ++a) x[a] = rng.uniform(cfg.domain_min[a], cfg.domain_max[a]);
    } while (sc.body.contains(x));
    s.volume_pos.set_vec3(i, x);
    s.volume_p(i, 0) = static_cast<float>(sc.flow.pressure(x));
    s.volume_u.set_vec3(i, sc.flow.velocity(x));
    s.volume_omega.set_vec3(i, sc.flow.vorticity(x));
  }
  return s;
}

}  // namespace abupt::data
