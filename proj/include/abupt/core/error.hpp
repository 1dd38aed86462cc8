#pragma once

#include <stdexcept>
#include <string>

namespace abupt {

/// Precondition violated by the caller (bad count, radius, shape, mode).
class InvalidArgument : public std::invalid_argument {
 public:
  explicit InvalidArgument(const std::string& what) : std::invalid_argument(what) {}
};

/// On-disk data is missing, truncated, mis-shaped or non-finite.
class CorruptData : public std::runtime_error {
 public:
  explicit CorruptData(const std::string& what) : std::runtime_error(what) {}
};

class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

/// Training produced a non-finite loss or weight.
class NumericDivergence : public std::runtime_error {
 public:
  explicit NumericDivergence(const std::string& what) : std::runtime_error(what) {}
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw InvalidArgument(msg);
}

}  // namespace abupt
