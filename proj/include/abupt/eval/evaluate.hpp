#pragma once

// Full-mesh evaluation: one anchor context per sample, every surface and
// volume point decoded in chunks, metrics in physics units.

#include "abupt/core/memory.hpp"
#include "abupt/data/source_points.hpp"
#include "abupt/data/transforms.hpp"
#include "abupt/eval/metrics.hpp"
#include "abupt/model/divfree.hpp"

#include <array>
#include <chrono>
#include <cstdio>
#include <string>
#include <vector>

namespace abupt::eval {

enum class HeadMode { kDirect, kDivfree };

inline std::string to_string(HeadMode h) { return h == HeadMode::kDirect ? "direct" : "divfree"; }

inline HeadMode head_mode_from_string(const std::string& s) {
  if (s == "direct") return HeadMode::kDirect;
  if (s == "divfree") return HeadMode::kDivfree;
  throw InvalidArgument("unknown head mode '" + s + "' (expected direct or divfree)");
}

struct EvalConfig {
  Index chunk = 4096;
  int threads = 1;
  HeadMode head = HeadMode::kDirect;
  double curl_step = model::kDefaultCurlStep;
  Index divergence_points = 100;
  data::PointsMode points_mode = data::PointsMode::kCfdMesh;
  Index grid_resolution = 8;
  Index repeats = 10;

  void validate() const {
    require(chunk >= 1, "eval config: chunk size must be >= 1");
    require(threads >= 1, "eval config: threads must be >= 1");
    require(curl_step > 0.0, "eval config: curl step must be positive");
    require(divergence_points >= 0, "eval config: negative divergence point count");
    require(repeats >= 1, "eval config: repeats must be >= 1");
  }
};

/// Physics-unit fields at every point of a sample.
struct FieldPrediction {
  Matrix<double> surface;  // N_s x 4: p, tau
  Matrix<double> volume;   // N_v x 7: p, u, omega
};

inline constexpr std::array<const char*, 5> kMetricFields{"surface_p", "surface_tau", "volume_p", "volume_u",
                                                          "volume_omega"};

struct MetricReport {
  std::string sample_id;
  Index repeat = 0;
  std::array<double, 5> rel_l2{};
  std::array<double, 5> rel_l1{};
  double divergence_mean_abs = 0.0;
  double seconds = 0.0;
  std::size_t peak_bytes = 0;
};

/// Anchor context for one sample: supernodes and anchors drawn with `seed`.
template <class T>
model::AnchorPredictor<T> make_predictor(const model::AbUpt<T>& m, const geom::NormalizationStats& stats,
                                         const data::SimulationSample& s, data::PointsMode mode, Index grid_resolution,
                                         std::uint64_t seed) {
  const auto& c = m.config();
  data::SourceConfig src;
  src.supernodes = std::min(c.supernodes, s.geometry_pos.rows);
  src.surface_anchors = std::min(c.surface_anchors, mode == data::PointsMode::kCadGrid ? s.geometry_pos.rows : s.surface_pos.rows);
  src.volume_anchors = std::min(c.volume_anchors, s.volume_pos.rows);
  src.grid_resolution = grid_resolution;
  src.grid_min = stats.bbox_min;
  src.grid_max = stats.bbox_max;
  const auto pts = data::source_points(s, mode, src, seed);
  return model::AnchorPredictor<T>(m, stats, s.geometry(), pts.supernode_ids, pts.branch[0].anchors,
                                   pts.branch[1].anchors);
}

inline std::vector<Vec3> positions(const data::Array2& pos) {
  std::vector<Vec3> out;
  out.reserve(static_cast<std::size_t>(pos.rows));
  for (Index r = 0; r < pos.rows; ++r) out.push_back(pos.vec3(r));
  return out;
}

/// Physics-space vorticity at network points from the direct head.
template <class T>
physics::BatchField direct_vorticity_field(const model::AnchorPredictor<T>& p, Index chunk) {
  return [&p, chunk](std::span<const Vec3> x_net) {
    const Matrix<double> phys = data::volume_physical(p.predict_network(model::Branch::kVolume, x_net, chunk), p.stats());
    std::vector<Vec3> w(x_net.size());
    for (std::size_t i = 0; i < w.size(); ++i) {
      const auto r = static_cast<Index>(i);
      w[i] = Vec3(phys(r, 4), phys(r, 5), phys(r, 6));
    }
    return w;
  };
}

/// Predicts every surface and volume point of `s`.
template <class T>
FieldPrediction predict_fields(const model::AnchorPredictor<T>& p, const data::SimulationSample& s,
                               const EvalConfig& cfg) {
  cfg.validate();
  const auto& stats = p.stats();
  FieldPrediction f;
  f.surface = data::surface_physical(p.predict(model::Branch::kSurface, positions(s.surface_pos), cfg.chunk, cfg.threads), stats);
  const auto vol_net = model::to_network(positions(s.volume_pos), stats);
  f.volume = data::volume_physical(p.predict_network(model::Branch::kVolume, vol_net, cfg.chunk, cfg.threads), stats);
  if (cfg.head == HeadMode::kDivfree) {
    const auto w = physics::fd_curl_network_batch(model::velocity_field(p, cfg.chunk), vol_net, cfg.curl_step,
                                                  stats.coord_scale(), data::velocity_scale(stats));
    for (std::size_t i = 0; i < w.size(); ++i) f.volume.row(static_cast<Index>(i)).tail(3) = w[i].transpose();
  }
  return f;
}

/// Mean |div omega| at `count` random volume points of `s`.
template <class T>
double divergence_statistic(const model::AnchorPredictor<T>& p, const data::SimulationSample& s, const EvalConfig& cfg,
                            Index count, std::uint64_t seed) {
  count = std::min(count, s.volume_pos.rows);
  if (count == 0) return 0.0;
  const auto& stats = p.stats();
  const IndexList ids = geom::uniform_sample(s.volume_pos.rows, count, seed);
  std::vector<Vec3> x;
  for (Index i : ids) x.push_back(geom::scale_coordinates(s.volume_pos.vec3(i), stats));
  const std::vector<double> div =
      cfg.head == HeadMode::kDivfree
          ? physics::divergence_of_curl_batch(model::velocity_field(p, cfg.chunk), x, cfg.curl_step,
                                              stats.coord_scale(), data::velocity_scale(stats))
          : physics::divergence_batch(direct_vorticity_field(p, cfg.chunk), x, cfg.curl_step, stats.coord_scale());
  double sum = 0.0;
  for (double d : div) sum += std::abs(d);
  return sum / static_cast<double>(div.size());
}

inline void fill_metrics(MetricReport& r, const FieldPrediction& f, const data::SimulationSample& s) {
  Matrix<double> sp(s.surface_pos.rows, 4), vp(s.volume_pos.rows, 7);
  for (Index i = 0; i < sp.rows(); ++i) {
    sp(i, 0) = s.surface_p(i, 0);
    for (int c = 0; c < 3; ++c) sp(i, 1 + c) = s.surface_tau(i, c);
  }
  for (Index i = 0; i < vp.rows(); ++i) {
    vp(i, 0) = s.volume_p(i, 0);
    for (int c = 0; c < 3; ++c) {
      vp(i, 1 + c) = s.volume_u(i, c);
      vp(i, 4 + c) = s.volume_omega(i, c);
    }
  }
  const std::array<std::pair<const Matrix<double>*, const Matrix<double>*>, 5> src{
      {{&f.surface, &sp}, {&f.surface, &sp}, {&f.volume, &vp}, {&f.volume, &vp}, {&f.volume, &vp}}};
  const std::array<std::pair<Index, Index>, 5> cols{{{0, 1}, {1, 3}, {0, 1}, {1, 3}, {4, 3}}};
  for (std::size_t k = 0; k < 5; ++k) {
    const auto pred = src[k].first->middleCols(cols[k].first, cols[k].second);
    const auto ref = src[k].second->middleCols(cols[k].first, cols[k].second);
    r.rel_l2[k] = relative_l2(pred, ref);
    r.rel_l1[k] = relative_l1(pred, ref);
  }
}

/// One evaluation of one sample with anchors drawn from `seed`.
template <class T>
MetricReport chunked_evaluate(const model::AbUpt<T>& m, const geom::NormalizationStats& stats,
                              const data::SimulationSample& s, const EvalConfig& cfg, std::uint64_t seed,
                              Index repeat = 0) {
  cfg.validate();
  memory::reset_peak();
  const auto t0 = std::chrono::steady_clock::now();
  const auto p = make_predictor(m, stats, s, cfg.points_mode, cfg.grid_resolution, seed);
  const FieldPrediction f = predict_fields(p, s, cfg);
  MetricReport r;
  r.sample_id = s.id;
  r.repeat = repeat;
  fill_metrics(r, f, s);
  r.divergence_mean_abs = divergence_statistic(p, s, cfg, cfg.divergence_points, Rng::derive(seed, 0xd1u));
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  r.peak_bytes = memory::peak_bytes();
  return r;
}

/// `cfg.repeats` evaluations with independent anchor draws.
template <class T>
std::vector<MetricReport> evaluate_repeats(const model::AbUpt<T>& m, const geom::NormalizationStats& stats,
                                           const data::SimulationSample& s, const EvalConfig& cfg,
                                           std::uint64_t seed) {
  std::vector<MetricReport> out;
  for (Index r = 0; r < cfg.repeats; ++r) {
    out.push_back(chunked_evaluate(m, stats, s, cfg, Rng::derive(seed, static_cast<std::uint64_t>(r)), r));
  }
  return out;
}

struct MetricSummary {
  std::array<MeanStd, 5> rel_l2{};
  std::array<MeanStd, 5> rel_l1{};
  MeanStd divergence;
};

inline MetricSummary summarize(std::span<const MetricReport> reports) {
  require(!reports.empty(), "summarize: no reports");
  MetricSummary s;
  std::vector<double> v(reports.size());
  auto collect = [&](auto get) {
    for (std::size_t i = 0; i < reports.size(); ++i) v[i] = get(reports[i]);
    return mean_std(v);
  };
  for (std::size_t k = 0; k < 5; ++k) {
    s.rel_l2[k] = collect([k](const MetricReport& r) { return r.rel_l2[k]; });
    s.rel_l1[k] = collect([k](const MetricReport& r) { return r.rel_l1[k]; });
  }
  s.divergence = collect([](const MetricReport& r) { return r.divergence_mean_abs; });
  return s;
}

/// Long-format CSV: one row per (sample, repeat, metric).
inline std::string report_csv_header() { return "sample,repeat,metric,value"; }

inline std::vector<std::string> report_csv_rows(const MetricReport& r) {
  std::vector<std::string> rows;
  char buf[256];
  auto add = [&](const std::string& metric, double v) {
    std::snprintf(buf, sizeof buf, "%s,%lld,%s,%.9g", r.sample_id.c_str(), static_cast<long long>(r.repeat),
                  metric.c_str(), v);
    rows.emplace_back(buf);
  };
  for (std::size_t k = 0; k < 5; ++k) {
    add(std::string("rel_l2_") + kMetricFields[k], r.rel_l2[k]);
    add(std::string("rel_l1_") + kMetricFields[k], r.rel_l1[k]);
  }
  add("divergence_mean_abs", r.divergence_mean_abs);
  add("seconds", r.seconds);
  add("peak_bytes", static_cast<double>(r.peak_bytes));
  return rows;
}

inline std::string summary_text(const MetricSummary& s, Index reports) {
  std::string out = "relative errors in % (mean +- std over " + std::to_string(reports) + " evaluations)\n";
  char buf[160];
  for (std::size_t k = 0; k < 5; ++k) {
    std::snprintf(buf, sizeof buf, "  %-13s L2 %8.3f +- %-7.3f L1 %8.3f +- %.3f\n", kMetricFields[k],
                  100.0 * s.rel_l2[k].mean, 100.0 * s.rel_l2[k].std, 100.0 * s.rel_l1[k].mean, 100.0 * s.rel_l1[k].std);
    out += buf;
  }
  std::snprintf(buf, sizeof buf, "  mean |div omega| %.6g +- %.3g\n", s.divergence.mean, s.divergence.std);
  return out + buf;
}

}  // namespace abupt::eval
