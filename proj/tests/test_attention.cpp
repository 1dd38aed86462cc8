#include "abupt/attention/attention.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

using namespace abupt;
using namespace abupt::attn;

namespace {

// Independent two-loop oracle: project, per head softmax(q k^T / sqrt(dh)) v, output projection.
Matrix<double> naive_sdp(const Matrix<double>& x_q, const Matrix<double>& x_k, const Matrix<double>& x_v,
                         const AttentionParams<double>& p) {
  const Matrix<double> q = (x_q * p.wq).rowwise() + p.bq;
  const Matrix<double> k = (x_k * p.wk).rowwise() + p.bk;
  const Matrix<double> v = (x_v * p.wv).rowwise() + p.bv;
  const Index dh = p.head_dim();
  Matrix<double> o = Matrix<double>::Zero(q.rows(), p.dim);
  for (Index h = 0; h < p.heads; ++h) {
    for (Index i = 0; i < q.rows(); ++i) {
      std::vector<double> s(static_cast<std::size_t>(k.rows()));
      for (Index j = 0; j < k.rows(); ++j) {
        double d = 0;
        for (Index c = 0; c < dh; ++c) d += q(i, h * dh + c) * k(j, h * dh + c);
        s[static_cast<std::size_t>(j)] = d / std::sqrt(static_cast<double>(dh));
      }
      double z = 0;
      for (double e : s) z += std::exp(e);
      for (Index j = 0; j < k.rows(); ++j) {
        for (Index c = 0; c < dh; ++c) o(i, h * dh + c) += std::exp(s[static_cast<std::size_t>(j)]) / z * v(j, h * dh + c);
      }
    }
  }
  return (o * p.wo).rowwise() + p.bo;
}

AttentionParams<double> params(Index dim, Index heads, std::uint64_t seed, double std = 0.3) {
  Rng rng(seed);
  auto p = AttentionParams<double>::random(dim, heads, rng, std);
  p.bq = fixture::random_matrix<double>(1, dim, rng, 0.1);
  p.bk = fixture::random_matrix<double>(1, dim, rng, 0.1);
  p.bv = fixture::random_matrix<double>(1, dim, rng, 0.1);
  p.bo = fixture::random_matrix<double>(1, dim, rng, 0.1);
  return p;
}

}  // namespace

TEST(Sdp, MatchesNaiveOracle) {
  Rng rng(1);
  const auto p = params(8, 2, 2);
  const Matrix<double> q = fixture::random_matrix<double>(5, 8, rng), kv = fixture::random_matrix<double>(7, 8, rng);
  EXPECT_LT((sdp_attention(q, kv, kv, p) - naive_sdp(q, kv, kv, p)).cwiseAbs().maxCoeff(), 1e-12);
  const auto pf = params(8, 2, 2);
  AttentionParams<float> f{8, 2, pf.wq.cast<float>(), pf.wk.cast<float>(), pf.wv.cast<float>(), pf.wo.cast<float>(),
                           pf.bq.cast<float>(), pf.bk.cast<float>(), pf.bv.cast<float>(), pf.bo.cast<float>()};
  const Matrix<float> out = sdp_attention<float>(q.cast<float>(), kv.cast<float>(), kv.cast<float>(), f);
  EXPECT_LT((out.cast<double>() - naive_sdp(q, kv, kv, p)).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Sdp, SingleKeyReturnsItsValue) {
  Rng rng(3);
  const auto p = params(6, 3, 4);
  const Matrix<double> q = fixture::random_matrix<double>(4, 6, rng), kv = fixture::random_matrix<double>(1, 6, rng);
  const Matrix<double> out = sdp_attention(q, kv, kv, p);
  const RowVector<double> expect = (((kv * p.wv).rowwise() + p.bv) * p.wo).rowwise() + p.bo;
  for (Index i = 0; i < 4; ++i) EXPECT_LT((out.row(i) - expect).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Sdp, IdenticalKeysAverageValues) {
  Rng rng(5);
  const Index d = 6;
  const Matrix<double> q = fixture::random_matrix<double>(3, d, rng);
  Matrix<double> k(4, d);
  k.rowwise() = fixture::random_matrix<double>(1, d, rng).row(0);
  const Matrix<double> v = fixture::random_matrix<double>(4, d, rng);
  const Matrix<double> out = multihead_attention(q, k, v, 2);
  for (Index i = 0; i < 3; ++i) EXPECT_LT((out.row(i) - v.colwise().mean()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Sdp, EmptyKeysThrow) {
  const auto p = params(6, 1, 1);
  EXPECT_THROW(sdp_attention(Matrix<double>(2, 6), Matrix<double>(0, 6), Matrix<double>(0, 6), p), InvalidArgument);
}

TEST(Sdp, StableForLargeInputs) {
  Rng rng(6);
  const Matrix<float> q = fixture::random_matrix<float>(16, 12, rng, 1e3);
  const Matrix<float> k = fixture::random_matrix<float>(16, 12, rng, 1e3);
  const Matrix<float> v = fixture::random_matrix<float>(16, 12, rng, 1e3);
  EXPECT_TRUE(multihead_attention(q, k, v, 2).allFinite());
}

TEST(Sdp, SoftmaxRowsSumToOne) {
  Rng rng(7);
  Matrix<float> s = fixture::random_matrix<float>(20, 30, rng, 50.0);
  detail::softmax_rows(s);
  for (Index r = 0; r < 20; ++r) EXPECT_NEAR(s.row(r).sum(), 1.0f, 1e-6f);
  EXPECT_GE(s.minCoeff(), 0.0f);
}

TEST(Sdp, TilingDoesNotChangeResult) {
  Rng rng(8);
  const Matrix<double> q = fixture::random_matrix<double>(37, 12, rng);
  const Matrix<double> k = fixture::random_matrix<double>(9, 12, rng), v = fixture::random_matrix<double>(9, 12, rng);
  const Matrix<double> ref = multihead_attention(q, k, v, 3, 1000);
  for (Index tile : {1, 5, 36}) EXPECT_LT((multihead_attention(q, k, v, 3, tile) - ref).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(AnchorAttention, AllAnchorsEqualsFullSelfAttention) {
  Rng rng(9);
  for (int trial = 0; trial < 10; ++trial) {
    const Index n = 2 + static_cast<Index>(rng.below(20));
    const auto p = params(12, 2, rng.next_u64());
    const Matrix<double> x = fixture::random_matrix<double>(n, 12, rng);
    IndexList all(static_cast<std::size_t>(n));
    std::iota(all.begin(), all.end(), Index{0});
    EXPECT_LT((anchor_attention(x, all, p) - sdp_attention(x, x, x, p)).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(AnchorAttention, AnchorRowsEqualSelfAttentionOverAnchors) {
  Rng rng(10);
  const auto p = params(12, 2, 11);
  const Matrix<double> x = fixture::random_matrix<double>(10, 12, rng);
  const IndexList anchors{1, 4, 7};
  Matrix<double> xa(3, 12);
  for (Index i = 0; i < 3; ++i) xa.row(i) = x.row(anchors[static_cast<std::size_t>(i)]);
  const Matrix<double> full = anchor_attention(x, anchors, p);
  const Matrix<double> self = sdp_attention(xa, xa, xa, p);
  for (Index i = 0; i < 3; ++i) EXPECT_LT((full.row(anchors[static_cast<std::size_t>(i)]) - self.row(i)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(AnchorAttention, DeletingQueryRowKeepsAnchorRowsBitwise) {
  Rng rng(12);
  const auto pd = params(12, 2, 13);
  AttentionParams<float> p{12, 2, pd.wq.cast<float>(), pd.wk.cast<float>(), pd.wv.cast<float>(), pd.wo.cast<float>(),
                           pd.bq.cast<float>(), pd.bk.cast<float>(), pd.bv.cast<float>(), pd.bo.cast<float>()};
  const Matrix<float> x = fixture::random_matrix<float>(12, 12, rng);
  const auto pos = fixture::random_points(12, 14, 0.0, 1000.0);
  const IndexList anchors{0, 1, 2, 3};
  const embed::RopeTable<float> rope(pos, 6);
  const Matrix<float> out = anchor_attention(x, anchors, p, &rope);
  // Drop query row 8.
  Matrix<float> x2(11, 12);
  std::vector<Vec3> pos2;
  for (Index r = 0, o = 0; r < 12; ++r) {
    if (r == 8) continue;
    x2.row(o++) = x.row(r);
    pos2.push_back(pos[static_cast<std::size_t>(r)]);
  }
  const embed::RopeTable<float> rope2(pos2, 6);
  const Matrix<float> out2 = anchor_attention(x2, anchors, p, &rope2);
  EXPECT_TRUE((out.topRows(4).array() == out2.topRows(4).array()).all());
}

TEST(AnchorAttention, SingleAnchorGivesItsValue) {
  Rng rng(15);
  const auto p = params(6, 1, 16);
  const Matrix<double> x = fixture::random_matrix<double>(5, 6, rng);
  const IndexList one{3};
  const Matrix<double> out = anchor_attention(x, one, p);
  const RowVector<double> expect = (((x.row(3) * p.wv) + p.bv) * p.wo) + p.bo;
  for (Index i = 0; i < 5; ++i) EXPECT_LT((out.row(i) - expect).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(AnchorAttention, InvalidAnchors) {
  const auto p = params(6, 1, 1);
  const Matrix<double> x = Matrix<double>::Ones(3, 6);
  EXPECT_THROW(anchor_attention(x, IndexList{}, p), InvalidArgument);
  EXPECT_THROW(anchor_attention(x, IndexList{3}, p), InvalidArgument);
}

TEST(AttentionParams, HeadsMustDivideDim) {
  Rng rng(1);
  EXPECT_THROW(AttentionParams<double>::random(10, 3, rng), InvalidArgument);
}

TEST(KVCache, WriteOnceThenSealed) {
  ad::Graph<float> g;
  KVCache<float> cache(2, 3);
  EXPECT_EQ(cache.branches(), 2);
  EXPECT_EQ(cache.stages(), 3);
  KeyValue<float> kv{g.constant(Matrix<float>::Ones(4, 6)), g.constant(Matrix<float>::Zero(4, 6))};
  cache.put(1, 2, kv);
  EXPECT_THROW(cache.put(1, 2, kv), InvalidArgument);
  EXPECT_THROW(cache.get(0, 0), InvalidArgument);
  EXPECT_EQ(cache.get(1, 2).key.value()(0, 0), 1.0f);
  EXPECT_EQ(cache.bytes(), 48 * sizeof(float));
  cache.seal();
  EXPECT_TRUE(cache.sealed());
  EXPECT_THROW(cache.put(0, 0, kv), InvalidArgument);
}
