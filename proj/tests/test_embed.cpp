#include "abupt/embed/rope.hpp"
#include "abupt/embed/sincos.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace abupt;
using namespace abupt::embed;

TEST(Sincos, OriginIsSinZeroCosOne) {
  const auto e = sincos_embed<double>(Vec3::Zero(), 48);
  for (Index i = 0; i < 48; i += 2) {
    EXPECT_EQ(e(i), 0.0);
    EXPECT_EQ(e(i + 1), 1.0);
  }
}

TEST(Sincos, AxesAreSeparable) {
  const auto a = sincos_embed<double>(Vec3(3.0, 7.0, -2.0), 60);
  const auto b = sincos_embed<double>(Vec3(91.0, 7.0, -2.0), 60);
  EXPECT_NE(a.head(20), b.head(20));
  EXPECT_EQ(a.tail(40), b.tail(40));
}

TEST(Sincos, ClosedFormValues) {
  const Index dim = 48, pairs = 8;
  const Vec3 x(1.0, 250.0, 999.0);
  const auto e = sincos_embed<double>(x, dim);
  // First pair of axis 0 has wavelength 1 (frequency 1).
  EXPECT_NEAR(e(0), std::sin(1.0), 1e-15);
  EXPECT_NEAR(e(1), std::cos(1.0), 1e-15);
  // Last pair has frequency 1 / max_wavelength.
  for (int axis = 0; axis < 3; ++axis) {
    for (Index i = 0; i < pairs; ++i) {
      const double f = std::pow(kDefaultMaxWavelength, -static_cast<double>(i) / (pairs - 1));
      EXPECT_NEAR(e(axis * 16 + 2 * i), std::sin(x[axis] * f), 1e-12);
      EXPECT_NEAR(e(axis * 16 + 2 * i + 1), std::cos(x[axis] * f), 1e-12);
    }
  }
  EXPECT_NEAR(pair_frequency(pairs - 1, pairs, kDefaultMaxWavelength), 1e-4, 1e-18);
}

TEST(Sincos, FloatMatchesDoubleOnCoordinateRange) {
  Rng rng(1);
  for (int t = 0; t < 50; ++t) {
    const Vec3 x(rng.uniform(0, 1000), rng.uniform(0, 1000), rng.uniform(0, 1000));
    const auto d = sincos_embed<double>(x, 192);
    const auto f = sincos_embed<float>(x, 192);
    EXPECT_LT((d - f.cast<double>()).cwiseAbs().maxCoeff(), 1e-6);
  }
}

TEST(Sincos, DimMustBeMultipleOfSix) {
  EXPECT_THROW(sincos_embed<double>(Vec3::Zero(), 64), InvalidArgument);
  EXPECT_THROW(sincos_embed<double>(Vec3::Zero(), 0), InvalidArgument);
  EXPECT_EQ(embed_width(64), 60);
  EXPECT_EQ(embed_width(192), 192);
}

TEST(Sincos, Deterministic) {
  EXPECT_EQ(sincos_embed<double>(Vec3(1, 2, 3), 30), sincos_embed<double>(Vec3(1, 2, 3), 30));
}

TEST(Rope, OriginIsIdentity) {
  Rng rng(2);
  Matrix<double> x = fixture::random_matrix<double>(3, 24, rng);
  const std::vector<Vec3> pos(3, Vec3::Zero());
  const RopeTable<double> t(pos, 12);
  Matrix<double> y = x;
  rope_apply(y, t);
  EXPECT_EQ(x, y);
}

TEST(Rope, PreservesPairNorms) {
  Rng rng(3);
  const auto pos = fixture::random_points(10, 4, 0.0, 1000.0);
  Matrix<double> x = fixture::random_matrix<double>(10, 36, rng);
  const RopeTable<double> t(pos, 18);
  Matrix<double> y = x;
  rope_apply(y, t);
  for (Index r = 0; r < 10; ++r) {
    for (Index c = 0; c < 36; c += 2) {
      EXPECT_NEAR(std::hypot(x(r, c), x(r, c + 1)), std::hypot(y(r, c), y(r, c + 1)), 1e-9);
    }
  }
}

TEST(Rope, InverseUndoesRotation) {
  Rng rng(5);
  const auto pos = fixture::random_points(4, 6, 0.0, 1000.0);
  Matrix<double> x = fixture::random_matrix<double>(4, 12, rng);
  const RopeTable<double> t(pos, 12);
  Matrix<double> y = x;
  rope_apply(y, t);
  rope_apply(y, t, -1);
  EXPECT_LT((x - y).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Rope, ScoresDependOnlyOnRelativePosition) {
  Rng rng(7);
  const Index dh = 24;
  for (int trial = 0; trial < 20; ++trial) {
    Matrix<float> q = fixture::random_matrix<float>(1, dh, rng), k = fixture::random_matrix<float>(1, dh, rng);
    const Vec3 p1(rng.uniform(0, 1000), rng.uniform(0, 1000), rng.uniform(0, 1000));
    const Vec3 p2(rng.uniform(0, 1000), rng.uniform(0, 1000), rng.uniform(0, 1000));
    const Vec3 shift(rng.uniform(-100, 100), rng.uniform(-100, 100), rng.uniform(-100, 100));
    auto score = [&](const Vec3& a, const Vec3& b) {
      Matrix<float> qa = q, kb = k;
      const std::vector<Vec3> pa{a}, pb{b};
      rope_apply(qa, RopeTable<float>(pa, dh));
      rope_apply(kb, RopeTable<float>(pb, dh));
      return static_cast<double>(qa.row(0).dot(kb.row(0)));
    };
    EXPECT_NEAR(score(p1, p2), score(p1 + shift, p2 + shift), 1e-5 * dh);
  }
}

TEST(Rope, UnrotatedTailWhenHeadDimNotMultipleOfSix) {
  // head_dim 32: 5 pairs per axis rotate channels 0..29, channels 30, 31 pass through.
  Rng rng(8);
  const auto pos = fixture::random_points(2, 9, 0.0, 1000.0);
  Matrix<double> x = fixture::random_matrix<double>(2, 64, rng);
  const RopeTable<double> t(pos, 32);
  EXPECT_EQ(t.pairs, 5);
  Matrix<double> y = x;
  rope_apply(y, t);
  for (Index h = 0; h < 2; ++h) {
    EXPECT_EQ(y.block(0, h * 32 + 30, 2, 2), x.block(0, h * 32 + 30, 2, 2));
    EXPECT_NE(y.block(0, h * 32, 2, 30), x.block(0, h * 32, 2, 30));
  }
}

TEST(Rope, GradientIsInverseRotation) {
  Rng rng(10);
  const auto pos = fixture::random_points(3, 11, 0.0, 1000.0);
  auto table = std::make_shared<const RopeTable<double>>(pos, 6);
  ad::Graph<double> g(true);
  ad::Parameter<double> p;
  p.value = fixture::random_matrix<double>(3, 12, rng);
  p.zero_grad();
  const Matrix<double> w = fixture::random_matrix<double>(3, 12, rng);
  auto y = rope(g.param(p), table);
  // loss = sum(w .* y) => dL/dx = R^T w
  g.backward(g.make(Matrix<double>::Constant(1, 1, (y.value().array() * w.array()).sum()), {&y},
                    [yn = y.ptr(), w](const Matrix<double>& gy) { yn->accumulate(w * gy(0, 0)); }));
  Matrix<double> expect = w;
  rope_apply(expect, *table, -1);
  EXPECT_LT((p.grad - expect).cwiseAbs().maxCoeff(), 1e-12);
}
