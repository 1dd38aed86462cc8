#include "abupt/data/dataset_io.hpp"
#include "abupt/data/source_points.hpp"
#include "abupt/data/synthetic.hpp"
#include "abupt/data/transforms.hpp"
#include "abupt/physics/differential.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <numbers>
#include <numeric>

using namespace abupt;
using namespace abupt::data;

namespace {

SyntheticConfig small(BodyKind body = BodyKind::kSphere) {
  SyntheticConfig c;
  c.geometry_points = 200;
  c.surface_points = 150;
  c.volume_points = 120;
  c.body = body;
  return c;
}

// Minimal valid sample with n points per cloud and linear fields.
SimulationSample ramp_sample(Index n) {
  SimulationSample s;
  s.id = "ramp";
  s.geometry_pos = Array2(n, 3);
  s.surface_pos = Array2(n, 3);
  s.surface_p = Array2(n, 1);
  s.surface_tau = Array2(n, 3);
  s.volume_pos = Array2(n, 3);
  s.volume_p = Array2(n, 1);
  s.volume_u = Array2(n, 3);
  s.volume_omega = Array2(n, 3);
  for (Index i = 0; i < n; ++i) {
    const auto f = static_cast<float>(2 * i);
    for (int a = 0; a < 3; ++a) {
      s.geometry_pos(i, a) = f + static_cast<float>(a);
      s.surface_pos(i, a) = f - static_cast<float>(a);
      s.volume_pos(i, a) = f * static_cast<float>(a + 1);
      s.surface_tau(i, a) = f + static_cast<float>(a);
      s.volume_u(i, a) = f - static_cast<float>(a);
      s.volume_omega(i, a) = f * static_cast<float>(a + 1);
    }
    s.surface_p(i, 0) = f;
    s.volume_p(i, 0) = f;
  }
  return s;
}

}  // namespace

TEST(Normalization, PopulationMeanAndStd) {
  const auto s = ramp_sample(2);  // values 0 and 2
  const auto st = fit_normalization(std::span(&s, 1), VorticityTransform::kNone);
  EXPECT_DOUBLE_EQ(st.surface_mean[0], 1.0);
  EXPECT_DOUBLE_EQ(st.surface_std[0], 1.0);
  EXPECT_DOUBLE_EQ(st.volume_mean[1], 1.0);
  EXPECT_DOUBLE_EQ(st.volume_std[1], 1.0);
  EXPECT_DOUBLE_EQ(st.volume_std[6], 3.0);
}

TEST(Normalization, ConstantChannelRejected) {
  auto s = ramp_sample(4);
  for (Index i = 0; i < 4; ++i) s.volume_p(i, 0) = 5.0f;
  EXPECT_THROW(fit_normalization(std::span(&s, 1)), InvalidArgument);
  EXPECT_THROW(fit_normalization(std::span<const SimulationSample>()), InvalidArgument);
}

TEST(Normalization, BboxCoversAllCloudsAndRefitIsIdentical) {
  std::vector<SimulationSample> train{generate_synthetic(small(), 1), generate_synthetic(small(BodyKind::kBox), 2)};
  const auto a = fit_normalization(train), b = fit_normalization(train);
  EXPECT_EQ(a.bbox_min, b.bbox_min);
  EXPECT_EQ(a.volume_std, b.volume_std);
  EXPECT_EQ(a.vorticity_sigma, b.vorticity_sigma);
  for (const auto& s : train) {
    for (const auto* arr : {&s.geometry_pos, &s.surface_pos, &s.volume_pos}) {
      for (Index r = 0; r < arr->rows; ++r) {
        const Vec3 x = arr->vec3(r);
        EXPECT_TRUE((x.array() >= a.bbox_min.array()).all() && (x.array() <= a.bbox_max.array()).all());
      }
    }
  }
}

TEST(Normalization, SqrtSignedModeLeavesVorticityUnscaled) {
  std::vector<SimulationSample> train{generate_synthetic(small(), 1)};
  const auto st = fit_normalization(train, VorticityTransform::kSqrtSigned);
  for (int c = 4; c < 7; ++c) {
    EXPECT_EQ(st.volume_mean[static_cast<std::size_t>(c)], 0.0);
    EXPECT_EQ(st.volume_std[static_cast<std::size_t>(c)], 1.0);
  }
}

TEST(Normalization, TargetsRoundTripToPhysicalUnits) {
  std::vector<SimulationSample> train{generate_synthetic(small(), 4)};
  for (auto mode : {VorticityTransform::kLog1pSigned, VorticityTransform::kSqrtSigned, VorticityTransform::kNone}) {
    const auto st = fit_normalization(train, mode);
    const auto& s = train[0];
    const auto vol = volume_physical(volume_targets(s, st), st);
    const auto surf = surface_physical(surface_targets(s, st), st);
    for (Index r = 0; r < s.volume_pos.rows; ++r) {
      EXPECT_NEAR(vol(r, 0), s.volume_p(r, 0), 1e-6);
      for (int c = 0; c < 3; ++c) {
        EXPECT_NEAR(vol(r, 1 + c), s.volume_u(r, c), 1e-6);
        EXPECT_NEAR(vol(r, 4 + c), s.volume_omega(r, c), 1e-6 * (1.0 + std::abs(s.volume_omega(r, c))));
      }
    }
    for (Index r = 0; r < s.surface_pos.rows; ++r) EXPECT_NEAR(surf(r, 0), s.surface_p(r, 0), 1e-6);
  }
}

TEST(Transforms, ZeroMapsToZero) {
  for (auto mode : {VorticityTransform::kLog1pSigned, VorticityTransform::kSqrtSigned}) {
    EXPECT_EQ(transform_vorticity(Vec3::Zero(), mode), Vec3::Zero());
    EXPECT_EQ(inverse_transform_vorticity(Vec3::Zero(), mode), Vec3::Zero());
  }
}

TEST(Transforms, ClosedForms) {
  const double e1 = std::numbers::e - 1.0;
  const Vec3 y = transform_vorticity(Vec3(e1, -e1, 0), VorticityTransform::kLog1pSigned);
  EXPECT_NEAR(y.x(), 1.0, 1e-15);
  EXPECT_NEAR(y.y(), -1.0, 1e-15);
  EXPECT_NEAR(inverse_transform_vorticity(y, VorticityTransform::kLog1pSigned).x(), e1, 1e-15);

  const Vec3 w = Vec3(1, 2, -1).normalized() * 4.0;
  const Vec3 s = sqrt_signed(w, Vec3::Ones());
  EXPECT_NEAR(s.norm(), 2.0, 1e-14);
  EXPECT_NEAR(s.normalized().dot(w.normalized()), 1.0, 1e-14);
}

TEST(Transforms, RoundTripsAreIdentity) {
  Rng rng(5);
  const Vec3 sigma(0.5, 2.0, 7.0);
  for (int i = 0; i < 1000; ++i) {
    const double scale = std::pow(10.0, rng.uniform(-4, 4));
    const Vec3 w = scale * Vec3(rng.normal(), rng.normal(), rng.normal());
    for (auto mode : {VorticityTransform::kLog1pSigned, VorticityTransform::kSqrtSigned, VorticityTransform::kNone}) {
      const Vec3 back = inverse_transform_vorticity(transform_vorticity(w, mode, sigma), mode, sigma);
      EXPECT_LE((back - w).norm(), 1e-6 * w.norm());
    }
  }
}

TEST(Synthetic, VelocityIsCurlOfPotential) {
  const auto sc = synthetic_case(small(), 11);
  const physics::VectorField psi = [&](const Vec3& x) { return sc.flow.potential(x); };
  const auto pts = fixture::random_points(100, 2);
  for (const auto& x : pts) {
    const Vec3 u = sc.flow.velocity(x);
    const Vec3 c = physics::fd_curl(psi, x, 1e-4);
    EXPECT_LE((u - c).norm(), 1e-6);
  }
}

TEST(Synthetic, VelocityIsDivergenceFreeAndVorticityIsItsCurl) {
  const auto sc = synthetic_case(small(), 12);
  const physics::VectorField u = [&](const Vec3& x) { return sc.flow.velocity(x); };
  for (const auto& x : fixture::random_points(100, 3)) {
    EXPECT_LE(std::abs(physics::fd_divergence(u, x, 1e-3)), 1e-5);
    EXPECT_LE((physics::fd_curl(u, x, 1e-4) - sc.flow.vorticity(x)).norm(), 1e-6);
  }
}

TEST(Synthetic, StoredFieldsMatchAnalyticFlow) {
  const auto cfg = small();
  const auto s = generate_synthetic(cfg, 13);
  const auto sc = synthetic_case(cfg, 13);
  s.validate();
  for (Index r = 0; r < s.volume_pos.rows; ++r) {
    const Vec3 x = s.volume_pos.vec3(r);
    EXPECT_FALSE(sc.body.contains(x));
    EXPECT_LE((s.volume_u.vec3(r) - sc.flow.velocity(x)).norm(), 1e-6);
    EXPECT_LE((s.volume_omega.vec3(r) - sc.flow.vorticity(x)).norm(), 1e-6);
    EXPECT_NEAR(s.volume_p(r, 0), sc.flow.pressure(x), 1e-6);
  }
}

TEST(Synthetic, SurfaceCellsTileTheBody) {
  for (auto kind : {BodyKind::kSphere, BodyKind::kBox}) {
    const auto cfg = small(kind);
    const auto s = generate_synthetic(cfg, 14);
    const auto sc = synthetic_case(cfg, 14);
    ASSERT_TRUE(s.has_surface_geometry());
    EXPECT_EQ(s.surface_pos.rows, cfg.surface_points);
    double area = 0.0;
    for (Index r = 0; r < s.surface_pos.rows; ++r) {
      area += s.surface_area(r, 0);
      EXPECT_NEAR(s.surface_normal.vec3(r).norm(), 1.0, 1e-6);
      // tau is tangential
      EXPECT_NEAR(s.surface_tau.vec3(r).dot(s.surface_normal.vec3(r)), 0.0, 1e-6);
    }
    EXPECT_NEAR(area, sc.body.surface_area(), 1e-4 * sc.body.surface_area()) << to_string(kind);
  }
}

TEST(Synthetic, ClosedBodyNormalsSumToZero) {
  for (auto kind : {BodyKind::kSphere, BodyKind::kBox}) {
    const auto s = generate_synthetic(small(kind), 15);
    Vec3 sum = Vec3::Zero();
    for (Index r = 0; r < s.surface_pos.rows; ++r) sum += s.surface_normal.vec3(r) * s.surface_area(r, 0);
    EXPECT_LE(sum.norm(), 1e-2) << to_string(kind);
  }
}

TEST(Synthetic, SameSeedIsByteIdentical) {
  const auto a = generate_synthetic(small(), 21), b = generate_synthetic(small(), 21), c = generate_synthetic(small(), 22);
  for (std::size_t i = 0; i < a.arrays().size(); ++i) EXPECT_EQ(*a.arrays()[i].second, *b.arrays()[i].second);
  EXPECT_NE(a.volume_u, c.volume_u);
}

TEST(Synthetic, ConfigValidation) {
  auto c = small();
  c.modes = 9;
  EXPECT_THROW(generate_synthetic(c, 1), InvalidArgument);
  c = small();
  c.volume_points = 0;
  EXPECT_THROW(generate_synthetic(c, 1), InvalidArgument);
  EXPECT_THROW(body_kind_from_string("cone"), InvalidArgument);
}

class DatasetTest : public ::testing::Test {
 protected:
  void SetUp() override {
    root = fixture::temp_dir("dataset");
    samples = {generate_synthetic(small(), 1, "s0"), generate_synthetic(small(BodyKind::kBox), 2, "s1")};
    constants.reference_area = 0.5;
    write_dataset(root, constants, {{"train", {"s0"}}, {"test", {"s1"}}}, samples);
  }

  json manifest() const { return json::parse(io::read_file<IoError>(root / kManifestName)); }
  void put_manifest(const json& j) const { io::write_file(root / kManifestName, j.dump()); }

  fs::path root;
  DatasetConstants constants;
  std::vector<SimulationSample> samples;
};

TEST_F(DatasetTest, RoundTripIsBitwise) {
  const Dataset ds(root);
  EXPECT_EQ(ds.constants().reference_area, 0.5);
  const auto s = ds.load("s1");
  for (std::size_t i = 0; i < s.arrays().size(); ++i) EXPECT_EQ(*s.arrays()[i].second, *samples[1].arrays()[i].second);
  EXPECT_EQ(ds.load_split("train").size(), 1u);
  EXPECT_THROW(ds.load_split("val"), InvalidArgument);
  EXPECT_TRUE(fs::exists(root / "blobs/s0/volume.omega.f32"));
  EXPECT_EQ(fs::file_size(root / "blobs/s0/volume.u.f32"), 120u * 3u * 4u);
}

TEST_F(DatasetTest, TruncatedBlobIsCorrupt) {
  const auto p = root / "blobs/s0/volume.u.f32";
  fs::resize_file(p, fs::file_size(p) - 4);
  EXPECT_THROW(Dataset(root).load("s0"), CorruptData);
}

TEST_F(DatasetTest, MissingBlobIsCorrupt) {
  fs::remove(root / "blobs/s0/surface.p.f32");
  EXPECT_THROW(Dataset(root).load("s0"), CorruptData);
}

TEST_F(DatasetTest, NonFiniteValuesAreCorrupt) {
  const auto p = root / "blobs/s0/volume.p.f32";
  auto bytes = io::read_file<IoError>(p);
  const float inf = std::numeric_limits<float>::infinity();
  std::memcpy(bytes.data() + 12, &inf, 4);
  io::write_file(p, bytes);
  EXPECT_THROW(Dataset(root).load("s0"), CorruptData);
}

TEST_F(DatasetTest, ShapeMismatchIsCorrupt) {
  auto m = manifest();
  m["samples"]["s0"]["arrays"]["volume.u"]["shape"] = {40, 9};
  put_manifest(m);
  EXPECT_THROW(Dataset(root).load("s0"), CorruptData);
}

TEST_F(DatasetTest, OverlappingSplitsRejected) {
  auto m = manifest();
  m["splits"]["test"].push_back("s0");
  put_manifest(m);
  EXPECT_THROW(Dataset{root}, CorruptData);
}

TEST_F(DatasetTest, EscapingPathRejected) {
  auto m = manifest();
  m["samples"]["s0"]["arrays"]["volume.u"]["path"] = "../outside.f32";
  put_manifest(m);
  EXPECT_THROW(Dataset{root}, CorruptData);
}

TEST_F(DatasetTest, MissingRequiredArrayRejected) {
  auto m = manifest();
  m["samples"]["s0"]["arrays"].erase("volume.omega");
  put_manifest(m);
  EXPECT_THROW(Dataset(root).load("s0"), CorruptData);
}

TEST_F(DatasetTest, BadManifestText) {
  io::write_file(root / kManifestName, "[1, 2");
  EXPECT_THROW(Dataset{root}, CorruptData);
  EXPECT_THROW(Dataset{fixture::temp_dir("nomanifest")}, IoError);
}

TEST(Dataset, ExternalImportIsUnsupported) {
  EXPECT_THROW(import_external_sample("car.vtp"), InvalidArgument);
}

TEST(SourcePoints, CfdMeshExactPartition) {
  const auto s = generate_synthetic(small(), 3);
  SourceConfig c;
  c.supernodes = 50;
  c.surface_anchors = 100;
  c.surface_queries = 50;
  c.volume_anchors = 70;
  c.volume_queries = 50;
  const auto p = source_points(s, PointsMode::kCfdMesh, c, 9);
  std::vector<int> seen(static_cast<std::size_t>(s.surface_pos.rows), 0);
  for (Index i : p.branch[0].anchor_ids) ++seen[static_cast<std::size_t>(i)];
  for (Index i : p.branch[0].query_ids) ++seen[static_cast<std::size_t>(i)];
  for (int v : seen) EXPECT_EQ(v, 1);
  EXPECT_EQ(p.branch[1].anchors.size() + p.branch[1].queries.size(), 120u);
  EXPECT_EQ(p.branch[0].anchors[5], s.surface_pos.vec3(p.branch[0].anchor_ids[5]));
  EXPECT_EQ(p.supernode_ids.size(), 50u);

  const auto mask = p.loss_mask(model::Branch::kVolume, LossMode::kAnchors);
  EXPECT_EQ(std::accumulate(mask.begin(), mask.end(), 0), 70);
  const auto q = p.loss_mask(model::Branch::kVolume, LossMode::kQueries);
  EXPECT_EQ(std::accumulate(q.begin(), q.end(), 0), 50);
  const auto both = p.loss_mask(model::Branch::kVolume, LossMode::kAnchorsAndQueries);
  EXPECT_EQ(std::accumulate(both.begin(), both.end(), 0), 120);
}

TEST(SourcePoints, CadGridLatticeAndQueryOnlyLoss) {
  const auto s = generate_synthetic(small(), 4);
  SourceConfig c;
  c.supernodes = 20;
  c.surface_anchors = 64;
  c.surface_queries = 30;
  c.volume_queries = 40;
  c.grid_resolution = 8;
  c.grid_min = Vec3(-2, -1, -1);
  c.grid_max = Vec3(1.5, 1, 2.5);
  const auto p = source_points(s, PointsMode::kCadGrid, c, 5);
  const auto& va = p.branch[1].anchors;
  ASSERT_EQ(va.size(), 512u);
  EXPECT_EQ(va.front(), c.grid_min);
  EXPECT_LE((va.back() - c.grid_max).norm(), 1e-12);
  EXPECT_EQ(va[1], Vec3(-1.5, -1, -1));
  EXPECT_EQ(va[8 * 8 + 8 + 1], Vec3(-1.5, -1 + 2.0 / 7.0, -1 + 3.5 / 7.0));
  // Surface anchors come from the geometry cloud.
  for (const auto& x : p.branch[0].anchors) {
    bool found = false;
    for (Index r = 0; r < s.geometry_pos.rows && !found; ++r) found = s.geometry_pos.vec3(r) == x;
    EXPECT_TRUE(found);
  }
  for (auto mode : {LossMode::kAnchors, LossMode::kQueries, LossMode::kAnchorsAndQueries}) {
    const auto mv = p.loss_mask(model::Branch::kVolume, mode);
    const auto ms = p.loss_mask(model::Branch::kSurface, mode);
    EXPECT_EQ(std::accumulate(mv.begin(), mv.end(), 0), 40);
    EXPECT_EQ(std::accumulate(ms.begin(), ms.end(), 0), 30);
  }
}

TEST(SourcePoints, SeededAndValidated) {
  const auto s = generate_synthetic(small(), 5);
  SourceConfig c;
  c.supernodes = 10;
  c.surface_anchors = 20;
  c.volume_anchors = 20;
  const auto a = source_points(s, PointsMode::kCfdMesh, c, 1), b = source_points(s, PointsMode::kCfdMesh, c, 1);
  const auto d = source_points(s, PointsMode::kCfdMesh, c, 2);
  EXPECT_EQ(a.branch[1].anchor_ids, b.branch[1].anchor_ids);
  EXPECT_NE(a.branch[1].anchor_ids, d.branch[1].anchor_ids);
  c.volume_anchors = 200;
  EXPECT_THROW(source_points(s, PointsMode::kCfdMesh, c, 1), InvalidArgument);
  EXPECT_THROW(points_mode_from_string("voxel"), InvalidArgument);
  EXPECT_THROW(regular_grid(Vec3::Zero(), Vec3::Ones(), 1), InvalidArgument);
  EXPECT_THROW(regular_grid(Vec3::Zero(), Vec3(1, 0, 1), 4), InvalidArgument);
}
