#include "abupt/eval/bench.hpp"
#include "abupt/eval/evaluate.hpp"
#include "abupt/eval/metrics.hpp"

#include "model_fixture.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <sstream>

using namespace abupt;
using namespace abupt::eval;
using abupt::fixture::TinyWorld;

namespace {

Matrix<double> ramp(Index rows, Index cols) {
  Matrix<double> m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = 0.5 + 0.25 * static_cast<double>(i % 7) - 0.1 * static_cast<double>(i);
  return m;
}

// Exact fields of a sample in the layout predict_fields returns.
FieldPrediction truth(const data::SimulationSample& s) {
  FieldPrediction f;
  f.surface.resize(s.surface_pos.rows, 4);
  f.volume.resize(s.volume_pos.rows, 7);
  for (Index i = 0; i < s.surface_pos.rows; ++i) {
    f.surface(i, 0) = s.surface_p(i, 0);
    for (int c = 0; c < 3; ++c) f.surface(i, 1 + c) = s.surface_tau(i, c);
  }
  for (Index i = 0; i < s.volume_pos.rows; ++i) {
    f.volume(i, 0) = s.volume_p(i, 0);
    for (int c = 0; c < 3; ++c) {
      f.volume(i, 1 + c) = s.volume_u(i, c);
      f.volume(i, 4 + c) = s.volume_omega(i, c);
    }
  }
  return f;
}

template <class T>
struct Trained {
  TinyWorld world;
  model::ModelWeights<T> weights = fixture::busy_weights<T>(world.config, 31);
  model::AbUpt<T> net{world.config, weights};
};

}  // namespace

TEST(Metrics, RelativeL2Examples) {
  const Matrix<double> t = ramp(5, 3);
  EXPECT_EQ(relative_l2(t, t), 0.0);
  EXPECT_DOUBLE_EQ(relative_l2(Matrix<double>::Zero(5, 3), t), 1.0);
  EXPECT_DOUBLE_EQ(relative_l2(Matrix<double>(2.0 * t), t), 1.0);
  Matrix<double> p = t;
  p(0, 0) += 3.0;
  EXPECT_NEAR(relative_l2(p, t), 3.0 / t.norm(), 1e-15);
  EXPECT_THROW(relative_l2(t, Matrix<double>::Zero(5, 3)), InvalidArgument);
  EXPECT_THROW(relative_l2(t, ramp(5, 2)), InvalidArgument);
}

TEST(Metrics, RelativeL2GrowsWithErrorMagnitude) {
  const Matrix<double> t = ramp(6, 2);
  Matrix<double> e = ramp(6, 2).reverse();
  double prev = 0.0;
  for (double a : {0.01, 0.1, 0.5, 1.0, 4.0}) {
    const double up = relative_l2(Matrix<double>(t + a * e), t);
    const double down = relative_l2(Matrix<double>(t - a * e), t);
    EXPECT_GT(up, prev);
    EXPECT_NEAR(up, down, 1e-12);
    EXPECT_NEAR(up, a * e.norm() / t.norm(), 1e-12);
    prev = up;
  }
}

TEST(Metrics, RelativeL1Examples) {
  Matrix<double> t(2, 2), p(2, 2);
  t << 1, -2, 3, -4;
  p << 2, -2, 3, -1;
  EXPECT_DOUBLE_EQ(relative_l1(p, t), 4.0 / 10.0);
  EXPECT_EQ(relative_l1(t, t), 0.0);
  EXPECT_THROW(relative_l1(t, Matrix<double>::Zero(2, 2)), InvalidArgument);
}

TEST(Metrics, RSquaredExamples) {
  const std::vector<double> ref{1.0, 2.0, 4.0, 5.0};
  EXPECT_EQ(r_squared(ref, ref), 1.0);
  const std::vector<double> mean(4, 3.0);
  EXPECT_DOUBLE_EQ(r_squared(mean, ref), 0.0);
  const std::vector<double> anti{5.0, 4.0, 2.0, 1.0};
  // SS_res = 16 + 4 + 4 + 16, SS_tot = 4 + 1 + 1 + 4.
  EXPECT_DOUBLE_EQ(r_squared(anti, ref), 1.0 - 40.0 / 10.0);
  EXPECT_THROW(r_squared(ref, mean), InvalidArgument);
  EXPECT_THROW(r_squared(std::vector<double>{1.0}, std::vector<double>{1.0}), InvalidArgument);
  EXPECT_THROW(r_squared(ref, std::vector<double>{1.0, 2.0}), InvalidArgument);
}

TEST(Metrics, MeanStdIsPopulation) {
  const auto m = mean_std(std::vector<double>{1.0, 2.0, 3.0, 4.0});
  EXPECT_DOUBLE_EQ(m.mean, 2.5);
  EXPECT_DOUBLE_EQ(m.std, std::sqrt(1.25));
  EXPECT_EQ(mean_std(std::vector<double>{7.0}).std, 0.0);
  EXPECT_THROW(mean_std(std::vector<double>{}), InvalidArgument);
}

TEST(Metrics, FitExponentRecoversPowerLaw) {
  std::vector<double> x, y;
  for (double n : {100.0, 200.0, 400.0, 800.0}) {
    x.push_back(n);
    y.push_back(3e-7 * std::pow(n, 1.7));
  }
  EXPECT_NEAR(fit_exponent(x, y), 1.7, 1e-12);
  EXPECT_THROW(fit_exponent(std::vector<double>{1.0}, std::vector<double>{1.0}), InvalidArgument);
  EXPECT_THROW(fit_exponent(std::vector<double>{2.0, 2.0}, std::vector<double>{1.0, 3.0}), InvalidArgument);
  EXPECT_THROW(fit_exponent(std::vector<double>{1.0, 2.0}, std::vector<double>{0.0, 3.0}), InvalidArgument);
}

TEST(Evaluate, ExactFieldsGiveZeroError) {
  TinyWorld world;
  MetricReport r;
  fill_metrics(r, truth(world.samples[0]), world.samples[0]);
  for (std::size_t k = 0; k < 5; ++k) {
    EXPECT_EQ(r.rel_l2[k], 0.0) << kMetricFields[k];
    EXPECT_EQ(r.rel_l1[k], 0.0) << kMetricFields[k];
  }
  // Error in the pressure column only reaches the two pressure metrics.
  auto f = truth(world.samples[0]);
  f.volume.col(0).array() += 1.0;
  f.surface.col(0) *= 2.0;
  fill_metrics(r, f, world.samples[0]);
  EXPECT_DOUBLE_EQ(r.rel_l2[0], 1.0);
  EXPECT_EQ(r.rel_l2[1], 0.0);
  EXPECT_GT(r.rel_l2[2], 0.0);
  EXPECT_EQ(r.rel_l2[3], 0.0);
  EXPECT_EQ(r.rel_l2[4], 0.0);
}

TEST(Evaluate, CoversEveryPoint) {
  Trained<float> t;
  const auto& s = t.world.samples[1];
  const auto p = make_predictor(t.net, t.world.stats, s, data::PointsMode::kCfdMesh, 8, 3);
  EvalConfig cfg;
  cfg.chunk = 17;
  const auto f = predict_fields(p, s, cfg);
  EXPECT_EQ(f.surface.rows(), s.surface_pos.rows);
  EXPECT_EQ(f.surface.cols(), 4);
  EXPECT_EQ(f.volume.rows(), s.volume_pos.rows);
  EXPECT_EQ(f.volume.cols(), 7);
  EXPECT_TRUE(f.surface.allFinite());
  EXPECT_TRUE(f.volume.allFinite());
}

TEST(Evaluate, ChunkSizeDoesNotChangeMetrics) {
  Trained<float> t;
  const auto& s = t.world.samples[0];
  EvalConfig whole;
  whole.chunk = s.surface_pos.rows + s.volume_pos.rows;
  const auto ref = chunked_evaluate(t.net, t.world.stats, s, whole, 11);
  for (Index chunk : {1, 5, 64}) {
    EvalConfig cfg = whole;
    cfg.chunk = chunk;
    const auto r = chunked_evaluate(t.net, t.world.stats, s, cfg, 11);
    for (std::size_t k = 0; k < 5; ++k) {
      EXPECT_NEAR(r.rel_l2[k], ref.rel_l2[k], 1e-5) << chunk << " " << kMetricFields[k];
      EXPECT_NEAR(r.rel_l1[k], ref.rel_l1[k], 1e-5) << chunk << " " << kMetricFields[k];
    }
  }
}

TEST(Evaluate, ThreadsAreBitwiseIdentical) {
  Trained<float> t;
  const auto& s = t.world.samples[0];
  EvalConfig one;
  one.chunk = 13;
  EvalConfig four = one;
  four.threads = 4;
  const auto a = chunked_evaluate(t.net, t.world.stats, s, one, 2);
  const auto b = chunked_evaluate(t.net, t.world.stats, s, four, 2);
  EXPECT_EQ(a.rel_l2, b.rel_l2);
  EXPECT_EQ(a.rel_l1, b.rel_l1);
  EXPECT_EQ(a.divergence_mean_abs, b.divergence_mean_abs);
}

TEST(Evaluate, RepeatsDrawDifferentAnchors) {
  Trained<float> t;
  const auto& s = t.world.samples[0];
  EvalConfig cfg;
  cfg.repeats = 3;
  const auto reps = evaluate_repeats(t.net, t.world.stats, s, cfg, 5);
  ASSERT_EQ(reps.size(), 3u);
  for (Index r = 0; r < 3; ++r) EXPECT_EQ(reps[static_cast<std::size_t>(r)].repeat, r);
  EXPECT_NE(reps[0].rel_l2[3], reps[1].rel_l2[3]);
  EXPECT_NE(reps[1].rel_l2[3], reps[2].rel_l2[3]);
  // Same seed, same draws.
  const auto again = evaluate_repeats(t.net, t.world.stats, s, cfg, 5);
  EXPECT_EQ(again[1].rel_l2, reps[1].rel_l2);

  const auto sum = summarize(reps);
  for (std::size_t k = 0; k < 5; ++k) {
    const auto m = mean_std(std::vector<double>{reps[0].rel_l2[k], reps[1].rel_l2[k], reps[2].rel_l2[k]});
    EXPECT_DOUBLE_EQ(sum.rel_l2[k].mean, m.mean);
    EXPECT_DOUBLE_EQ(sum.rel_l2[k].std, m.std);
  }
  EXPECT_GT(sum.rel_l2[3].std, 0.0);
  EXPECT_THROW(summarize(std::vector<MetricReport>{}), InvalidArgument);
}

TEST(Evaluate, DivfreeHeadHasNegligibleDivergence) {
  Trained<double> t;
  const auto& s = t.world.samples[0];
  const auto p = make_predictor(t.net, t.world.stats, s, data::PointsMode::kCfdMesh, 8, 9);
  EvalConfig direct;
  EvalConfig divfree;
  divfree.head = HeadMode::kDivfree;
  const double d_direct = divergence_statistic(p, s, direct, 40, 1);
  const double d_free = divergence_statistic(p, s, divfree, 40, 1);
  EXPECT_GT(d_direct, 1e-3);
  EXPECT_LT(d_free, 1e-6 * d_direct);
  EXPECT_EQ(divergence_statistic(p, s, direct, 0, 1), 0.0);
}

TEST(Evaluate, DivfreeVorticityIsCurlOfVelocity) {
  Trained<double> t;
  const auto& s = t.world.samples[0];
  const auto p = make_predictor(t.net, t.world.stats, s, data::PointsMode::kCfdMesh, 8, 4);
  EvalConfig cfg;
  cfg.head = HeadMode::kDivfree;
  const auto f = predict_fields(p, s, cfg);
  const auto& st = t.world.stats;
  // Central differences of the physical velocity in physical coordinates.
  const Vec3 h = cfg.curl_step * st.coord_scale().cwiseInverse();
  const auto u = [&](const Vec3& x) {
    const auto net = model::to_network(std::vector<Vec3>{x}, st);
    const Matrix<double> v = data::volume_physical(p.predict_network(model::Branch::kVolume, net, 8), st);
    return Vec3(v(0, 1), v(0, 2), v(0, 3));
  };
  for (Index i = 0; i < 5; ++i) {
    const Vec3 x = s.volume_pos.vec3(i);
    Matrix<double> d(3, 3);  // d(a, b) = d u_a / d x_b
    for (int b = 0; b < 3; ++b) {
      Vec3 e = Vec3::Zero();
      e[b] = h[b];
      d.col(b) = (u(x + e) - u(x - e)) / (2.0 * h[b]);
    }
    const Vec3 curl(d(2, 1) - d(1, 2), d(0, 2) - d(2, 0), d(1, 0) - d(0, 1));
    for (int c = 0; c < 3; ++c) EXPECT_NEAR(f.volume(i, 4 + c), curl[c], 1e-6 * (1.0 + curl.norm()));
  }
}

TEST(Evaluate, ConfigValidation) {
  EvalConfig c;
  c.chunk = 0;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = {};
  c.threads = 0;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = {};
  c.repeats = 0;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = {};
  c.curl_step = 0.0;
  EXPECT_THROW(c.validate(), InvalidArgument);
  EXPECT_EQ(EvalConfig{}.repeats, 10);
}

TEST(Evaluate, HeadModeNames) {
  EXPECT_EQ(head_mode_from_string("direct"), HeadMode::kDirect);
  EXPECT_EQ(head_mode_from_string("divfree"), HeadMode::kDivfree);
  EXPECT_EQ(to_string(HeadMode::kDivfree), "divfree");
  EXPECT_THROW(head_mode_from_string("curl"), InvalidArgument);
}

TEST(Report, CsvRowsAndSummary) {
  MetricReport r;
  r.sample_id = "run_3";
  r.repeat = 2;
  r.rel_l2 = {0.1, 0.2, 0.3, 0.4, 0.5};
  r.rel_l1 = {0.01, 0.02, 0.03, 0.04, 0.05};
  r.divergence_mean_abs = 1.5e-9;
  r.seconds = 0.25;
  r.peak_bytes = 4096;
  const auto rows = report_csv_rows(r);
  ASSERT_EQ(rows.size(), 13u);
  EXPECT_EQ(report_csv_header(), "sample,repeat,metric,value");
  EXPECT_EQ(rows[0], "run_3,2,rel_l2_surface_p,0.1");
  EXPECT_EQ(rows[7], "run_3,2,rel_l1_volume_u,0.04");
  EXPECT_EQ(rows[10], "run_3,2,divergence_mean_abs,1.5e-09");
  EXPECT_EQ(rows[12], "run_3,2,peak_bytes,4096");
  std::set<std::string> metrics;
  for (const auto& row : rows) {
    std::istringstream in(row);
    std::string a, b, m, v;
    std::getline(in, a, ',');
    std::getline(in, b, ',');
    std::getline(in, m, ',');
    std::getline(in, v);
    EXPECT_EQ(a, "run_3");
    metrics.insert(m);
  }
  EXPECT_EQ(metrics.size(), 13u);

  MetricReport r2 = r;
  r2.rel_l2[3] = 0.6;
  const std::vector<MetricReport> both{r, r2};
  const auto text = summary_text(summarize(both), 2);
  EXPECT_NE(text.find("over 2 evaluations"), std::string::npos);
  EXPECT_NE(text.find("volume_u"), std::string::npos);
  EXPECT_NE(text.find("50.000 +- 10.000"), std::string::npos) << text;
}

TEST(Bench, RowsPerModeAndSize) {
  Trained<float> t;
  const auto p = make_predictor(t.net, t.world.stats, t.world.samples[0], data::PointsMode::kCfdMesh, 8, 1);
  BenchConfig cfg;
  cfg.sizes = {64, 128, 256};
  cfg.anchors = 32;
  cfg.dim = 16;
  cfg.chunk = 64;
  cfg.repeats = 1;
  cfg.warmup = 0;
  const auto rows = bench_scaling(cfg, &p, 3);
  ASSERT_EQ(rows.size(), 9u);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(rows[i].mode, cfg.modes[i / 3]);
    EXPECT_EQ(rows[i].n, cfg.sizes[i % 3]);
    EXPECT_GT(rows[i].seconds, 0.0);
    EXPECT_GT(rows[i].peak_bytes, 0u);
  }
  // Full attention holds an n x n score matrix; anchor attention n x M.
  EXPECT_GT(rows[5].peak_bytes, 3 * rows[3].peak_bytes);
  EXPECT_LT(rows[2].peak_bytes, 5 * rows[0].peak_bytes);
  EXPECT_LT(memory_growth(rows, "chunked"), 0.25);
  EXPECT_GT(memory_growth(rows, "full"), 3.0);
  EXPECT_TRUE(std::isfinite(mode_exponent(rows, "anchor")));
  EXPECT_EQ(bench_csv_header(), "n,mode,seconds,peak_bytes");
  EXPECT_EQ(bench_csv_row(BenchRow{64, "full", 0.5, 10}), "64,full,0.5,10");
}

TEST(Bench, Validation) {
  BenchConfig cfg;
  cfg.sizes = {128, 64};
  EXPECT_THROW(cfg.validate(), InvalidArgument);
  cfg.sizes = {64};
  cfg.modes = {"sparse"};
  EXPECT_THROW(cfg.validate(), InvalidArgument);
  cfg.modes = {"chunked"};
  EXPECT_THROW(bench_scaling(cfg, nullptr, 0), InvalidArgument);
  cfg.modes = {"anchor"};
  cfg.dim = 10;
  cfg.heads = 3;
  EXPECT_THROW(cfg.validate(), InvalidArgument);
  EXPECT_THROW(memory_growth(std::vector<BenchRow>{}, "anchor"), InvalidArgument);
}
