#pragma once

#include "abupt/core/error.hpp"
#include "abupt/core/types.hpp"

#include <cmath>
#include <span>

namespace abupt::embed {

inline constexpr double kDefaultMaxWavelength = 10000.0;

/// Frequency of pair `i` out of `pairs`: geometric from 1 (wavelength 1) down
/// to 1 / max_wavelength.
inline double pair_frequency(Index i, Index pairs, double max_wavelength) {
  if (pairs <= 1) return 1.0;
  return std::pow(max_wavelength, -static_cast<double>(i) / static_cast<double>(pairs - 1));
}

/// Transformer positional encoding of a 3D position. Each axis gets dim/3
/// channels laid out as interleaved (sin, cos) pairs; axes are concatenated.
/// Always evaluated in double and then narrowed.
template <class T = double>
RowVector<T> sincos_embed(const Vec3& position, Index dim, double max_wavelength = kDefaultMaxWavelength) {
  require(dim > 0 && dim % 6 == 0, "sincos_embed: dim must be a positive multiple of 6, got " + std::to_string(dim));
  const Index per_axis = dim / 3;
  const Index pairs = per_axis / 2;
  RowVector<T> out(dim);
  for (int axis = 0; axis < 3; ++axis) {
    for (Index i = 0; i < pairs; ++i) {
      const double angle = position[axis] * pair_frequency(i, pairs, max_wavelength);
      out(axis * per_axis + 2 * i) = static_cast<T>(std::sin(angle));
      out(axis * per_axis + 2 * i + 1) = static_cast<T>(std::cos(angle));
    }
  }
  return out;
}

/// Largest embedding width not exceeding `dim` that sincos_embed accepts.
inline Index embed_width(Index dim) { return dim - dim % 6; }

/// Embeds every position as one row.
template <class T>
Matrix<T> sincos_embed_rows(std::span<const Vec3> positions, Index dim,
                            double max_wavelength = kDefaultMaxWavelength) {
  Matrix<T> out(static_cast<Index>(positions.size()), dim);
  for (std::size_t r = 0; r < positions.size(); ++r) {
    out.row(static_cast<Index>(r)) = sincos_embed<T>(positions[r], dim, max_wavelength);
  }
  return out;
}

}  // namespace abupt::embed
