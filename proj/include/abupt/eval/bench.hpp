#pragma once

// Runtime / memory scaling of the attention variants.
//
// anchor:  N query tokens attend to a fixed set of M anchor keys, O(N M).
// full:    N tokens attend to each other, O(N^2).
// chunked: a model decodes N positions in fixed-size chunks against a
//          cached anchor context; peak live activation memory is recorded.

#include "abupt/attention/attention.hpp"
#include "abupt/core/memory.hpp"
#include "abupt/eval/metrics.hpp"
#include "abupt/model/chunked.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <string>
#include <vector>

namespace abupt::eval {

struct BenchConfig {
  std::vector<Index> sizes{2048, 4096, 8192, 16384, 32768, 65536};
  Index anchors = 2048;
  Index dim = 64;
  Index heads = 1;
  Index chunk = 2048;
  Index repeats = 3;
  Index warmup = 1;
  std::vector<std::string> modes{"anchor", "full", "chunked"};

  void validate() const {
    require(!sizes.empty(), "bench: no sizes");
    require(std::is_sorted(sizes.begin(), sizes.end()), "bench: sizes must be sorted ascending");
    require(sizes.front() >= 1, "bench: sizes must be positive");
    require(anchors >= 1 && chunk >= 1 && repeats >= 1 && warmup >= 0, "bench: invalid counts");
    require(dim % heads == 0, "bench: dim must be divisible by heads");
    for (const auto& m : modes) {
      require(m == "anchor" || m == "full" || m == "chunked", "bench: unknown mode '" + m + "'");
    }
  }
};

struct BenchRow {
  Index n = 0;
  std::string mode;
  double seconds = 0.0;  // minimum over repeats
  std::size_t peak_bytes = 0;
};

inline std::string bench_csv_header() { return "n,mode,seconds,peak_bytes"; }

inline std::string bench_csv_row(const BenchRow& r) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%lld,%s,%.6g,%zu", static_cast<long long>(r.n), r.mode.c_str(), r.seconds,
                r.peak_bytes);
  return buf;
}

namespace detail {

template <class F>
BenchRow time_it(Index n, const std::string& mode, const BenchConfig& cfg, F&& f) {
  for (Index i = 0; i < cfg.warmup; ++i) f();
  BenchRow row{n, mode, 0.0, 0};
  double best = std::numeric_limits<double>::infinity();
  for (Index r = 0; r < cfg.repeats; ++r) {
    memory::reset_peak();
    const std::size_t base = memory::live_bytes();
    const auto t0 = std::chrono::steady_clock::now();
    f();
    best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    row.peak_bytes = std::max(row.peak_bytes, memory::peak_bytes() - base);
  }
  row.seconds = best;
  return row;
}

inline Matrix<float> random_matrix(Index rows, Index cols, Rng& rng) {
  Matrix<float> m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<float>(rng.normal());
  return m;
}

}  // namespace detail

/// Runs every configured mode over the size sweep. `predictor` drives the
/// chunked mode and may be null when that mode is not requested.
inline std::vector<BenchRow> bench_scaling(const BenchConfig& cfg, const model::AnchorPredictor<float>* predictor,
                                           std::uint64_t seed) {
  cfg.validate();
  Rng rng(seed);
  std::vector<BenchRow> rows;
  const Matrix<float> ka = detail::random_matrix(cfg.anchors, cfg.dim, rng);
  const Matrix<float> va = detail::random_matrix(cfg.anchors, cfg.dim, rng);
  for (const auto& mode : cfg.modes) {
    for (Index n : cfg.sizes) {
      if (mode == "anchor") {
        const Matrix<float> q = detail::random_matrix(n, cfg.dim, rng);
        rows.push_back(detail::time_it(n, mode, cfg, [&] {
          volatile float sink = attn::multihead_attention(q, ka, va, cfg.heads)(0, 0);
          (void)sink;
        }));
      } else if (mode == "full") {
        const Matrix<float> x = detail::random_matrix(n, cfg.dim, rng);
        rows.push_back(detail::time_it(n, mode, cfg, [&] {
          volatile float sink = attn::multihead_attention(x, x, x, cfg.heads)(0, 0);
          (void)sink;
        }));
      } else {
        require(predictor != nullptr, "bench: chunked mode needs a model");
        const auto& stats = predictor->stats();
        std::vector<Vec3> pos(static_cast<std::size_t>(n));
        for (auto& p : pos) {
          for (int a = 0; a < 3; ++a) p[a] = rng.uniform(stats.bbox_min[a], stats.bbox_max[a]);
        }
        const auto net = model::to_network(pos, stats);
        rows.push_back(detail::time_it(n, mode, cfg, [&] {
          volatile float sink = predictor->predict_network(model::Branch::kVolume, net, cfg.chunk)(0, 0);
          (void)sink;
        }));
      }
    }
  }
  return rows;
}

/// Time-vs-N exponent of one mode.
inline double mode_exponent(std::span<const BenchRow> rows, const std::string& mode) {
  std::vector<double> n, t;
  for (const auto& r : rows) {
    if (r.mode == mode) {
      n.push_back(static_cast<double>(r.n));
      t.push_back(r.seconds);
    }
  }
  return fit_exponent(n, t);
}

/// (peak at largest N - peak at smallest N) / peak at smallest N.
inline double memory_growth(std::span<const BenchRow> rows, const std::string& mode) {
  const BenchRow* lo = nullptr;
  const BenchRow* hi = nullptr;
  for (const auto& r : rows) {
    if (r.mode != mode) continue;
    if (!lo || r.n < lo->n) lo = &r;
    if (!hi || r.n > hi->n) hi = &r;
  }
  require(lo && hi && lo->peak_bytes > 0, "memory_growth: no rows for mode " + mode);
  return (static_cast<double>(hi->peak_bytes) - static_cast<double>(lo->peak_bytes)) /
         static_cast<double>(lo->peak_bytes);
}

}  // namespace abupt::eval
