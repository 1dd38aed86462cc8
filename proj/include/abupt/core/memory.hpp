#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdint>

namespace abupt::memory {

// Process-wide accounting of live activation buffers. Graph nodes and
// attention temporaries register their bytes here; the benchmark harness
// reads the peak.
struct Counter {
  std::atomic<std::int64_t> live{0};
  std::atomic<std::int64_t> peak{0};
};

inline Counter& counter() {
  static Counter c;
  return c;
}

inline void acquire(std::size_t bytes) {
  auto& c = counter();
  const std::int64_t now = c.live.fetch_add(static_cast<std::int64_t>(bytes)) +
                           static_cast<std::int64_t>(bytes);
  std::int64_t prev = c.peak.load();
  while (now > prev && !c.peak.compare_exchange_weak(prev, now)) {
  }
}

inline void release(std::size_t bytes) {
  counter().live.fetch_sub(static_cast<std::int64_t>(bytes));
}

inline std::int64_t live_bytes() { return counter().live.load(); }
inline std::int64_t peak_bytes() { return counter().peak.load(); }

/// Resets the peak to the current live value.
inline void reset_peak() { counter().peak.store(counter().live.load()); }

/// RAII registration for a scratch buffer whose storage is managed elsewhere.
class Scoped {
 public:
  explicit Scoped(std::size_t bytes) : bytes_(bytes) { acquire(bytes_); }
  ~Scoped() { release(bytes_); }
  Scoped(const Scoped&) = delete;
  Scoped& operator=(const Scoped&) = delete;

 private:
  std::size_t bytes_;
};

}  // namespace abupt::memory
