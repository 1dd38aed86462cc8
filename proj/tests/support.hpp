#pragma once

// Shared fixtures for the unit suites.

#include "abupt/core/rng.hpp"
#include "abupt/core/types.hpp"
#include "abupt/geom/point_cloud.hpp"

#include <atomic>
#include <filesystem>
#include <string>
#include <unistd.h>
#include <vector>

namespace abupt::fixture {

namespace fs = std::filesystem;

inline std::vector<Vec3> random_points(Index n, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  Rng rng(seed);
  std::vector<Vec3> pts(static_cast<std::size_t>(n));
  for (auto& p : pts) p = Vec3(rng.uniform(lo, hi), rng.uniform(lo, hi), rng.uniform(lo, hi));
  return pts;
}

inline geom::PointCloud random_cloud(Index n, std::uint64_t seed) { return geom::PointCloud(random_points(n, seed)); }

template <class T>
Matrix<T> random_matrix(Index rows, Index cols, Rng& rng, double scale = 1.0) {
  Matrix<T> m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<T>(scale * rng.normal());
  return m;
}

/// Fresh empty directory under the system temp dir, unique per call.
inline fs::path temp_dir(const std::string& tag) {
  static std::atomic<int> counter{0};
  const fs::path p = fs::temp_directory_path() /
                     ("abupt_test_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace abupt::fixture
