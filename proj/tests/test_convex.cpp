#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "rcd/convex.hpp"
#include "rcd/fixtures.hpp"
#include "rcd/gjk.hpp"

using namespace rcd;

namespace {

std::vector<Vec3> cube_corners(const Vec3& lo = {0, 0, 0}, double s = 1.0) {
  std::vector<Vec3> c;
  for (int i = 0; i < 8; ++i) c.push_back(lo + Vec3{double(i & 1), double((i >> 1) & 1), double((i >> 2) & 1)} * s);
  return c;
}

std::set<std::tuple<double, double, double>> vertex_set(const ConvexPart& p) {
  std::set<std::tuple<double, double, double>> s;
  for (const Vec3& v : p.vertices()) s.emplace(v.x, v.y, v.z);
  return s;
}

ConvexPart random_part(Rng& rng, int n = 30) {
  std::vector<Vec3> pts;
  const Vec3 c{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
  const Vec3 scale{rng.uniform(0.2, 1.5), rng.uniform(0.2, 1.5), rng.uniform(0.2, 1.5)};
  for (int i = 0; i < n; ++i) {
    const Vec3 u = rng.unit_vector() * std::cbrt(rng.uniform());
    pts.push_back(c + Vec3{u.x * scale.x, u.y * scale.y, u.z * scale.z});
  }
  return convex_hull(pts);
}

// Closest-pair distance between two point clouds, brute force.
double cloud_distance(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
  double best = std::numeric_limits<double>::infinity();
  for (const Vec3& p : a)
    for (const Vec3& q : b) best = std::min(best, norm2(p - q));
  return std::sqrt(best);
}

}  // namespace

TEST(ConvexHull, CubeCorners) {
  const ConvexPart hull = convex_hull(cube_corners());
  EXPECT_EQ(hull.vertices().size(), 8u);
  EXPECT_NEAR(hull.volume(), 1.0, 1e-12);
  EXPECT_TRUE(validate(hull.mesh()).watertight);
}

TEST(ConvexHull, InteriorPointDiscarded) {
  auto pts = cube_corners();
  const ConvexPart a = convex_hull(pts);
  pts.push_back({0.5, 0.5, 0.5});
  const ConvexPart b = convex_hull(pts);
  EXPECT_EQ(vertex_set(a), vertex_set(b));
}

TEST(ConvexHull, EdgeAndFacePointsAreNotCorners) {
  auto pts = cube_corners();
  pts.push_back({0.5, 0, 0});
  pts.push_back({0.5, 0.5, 1});
  pts.push_back({1, 0.25, 0.75});
  EXPECT_EQ(convex_hull(pts).vertices().size(), 8u);
}

TEST(ConvexHull, RandomBallContainsAllPoints) {
  Rng rng(11);
  std::vector<Vec3> pts;
  for (int i = 0; i < 200; ++i) pts.push_back(rng.unit_vector() * std::cbrt(rng.uniform()));
  const ConvexPart hull = convex_hull(pts);
  // Brute-force halfspace check against every hull triangle.
  const double tol = hull.convexity_tolerance();
  for (std::size_t f = 0; f < hull.faces().size(); ++f) {
    const Plane pl = Plane::through(cross(hull.mesh().corner(f, 1) - hull.mesh().corner(f, 0),
                                          hull.mesh().corner(f, 2) - hull.mesh().corner(f, 0)),
                                    hull.mesh().corner(f, 0));
    for (const Vec3& p : pts) ASSERT_LE(pl.signed_distance(p), tol);
  }
  EXPECT_LE(hull.volume(), 4.0 * M_PI / 3.0);
  EXPECT_TRUE(validate(hull.mesh()).watertight);
}

TEST(ConvexHull, DegenerateInputs) {
  const std::vector<std::vector<Vec3>> cases = {
      {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 1, 0}, {0.5, 0.2, 0}},
      {{0, 0, 0}, {1, 1, 1}, {2, 2, 2}, {3, 3, 3}},
      {{1, 1, 1}, {1, 1, 1}, {1, 1, 1}, {1, 1, 1}},
      {{0, 0, 0}, {1, 0, 0}}};
  for (const auto& c : cases) {
    try {
      convex_hull(c);
      FAIL() << "expected DegenerateInput";
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::DegenerateInput);
    }
  }
}

TEST(ConvexHull, Idempotent) {
  Rng rng(5);
  for (int i = 0; i < 50; ++i) {
    const ConvexPart a = random_part(rng, 40);
    const ConvexPart b = convex_hull(a.vertices());
    EXPECT_EQ(vertex_set(a), vertex_set(b));
  }
}

TEST(SplitByPlane, SymmetricAndMissing) {
  const ConvexPart cube = convex_hull(cube_corners());
  const SplitResult half = split_by_plane(cube, Plane::axis_aligned(0, +1, 0.5));
  ASSERT_TRUE(half.inside && half.outside);
  EXPECT_NEAR(half.inside->volume(), 0.5, 1e-12);
  EXPECT_NEAR(half.outside->volume(), 0.5, 1e-12);
  const SplitResult miss = split_by_plane(cube, Plane::axis_aligned(0, +1, 2.0));
  ASSERT_TRUE(miss.inside);
  EXPECT_FALSE(miss.outside);
  EXPECT_EQ(*miss.inside, cube);
}

TEST(SplitByPlane, HexagonalSection) {
  const ConvexPart cube = convex_hull(cube_corners());
  const Plane diag = Plane::from_normal({1, 1, 1}, std::sqrt(3.0) / 2.0);
  const SplitResult r = split_by_plane(cube, diag);
  ASSERT_TRUE(r.inside && r.outside);
  EXPECT_NEAR(r.inside->volume(), 0.5, 1e-12);
  EXPECT_NEAR(r.outside->volume(), 0.5, 1e-12);
  int on_plane = 0;
  for (const Vec3& v : r.inside->vertices())
    if (std::abs(diag.signed_distance(v)) < 1e-12) ++on_plane;
  EXPECT_EQ(on_plane, 6);
}

TEST(SplitByPlane, ConservesVolumeOnRandomPairs) {
  Rng rng(2024);
  for (int i = 0; i < 1000; ++i) {
    const ConvexPart part = random_part(rng, 20);
    const Plane plane = Plane::through(rng.unit_vector(), part.centroid() + rng.unit_vector() * rng.uniform(0, 0.5));
    const SplitResult r = split_by_plane(part, plane);
    const double total = (r.inside ? r.inside->volume() : 0.0) + (r.outside ? r.outside->volume() : 0.0);
    ASSERT_NEAR(total, part.volume(), 1e-9 * part.volume()) << i;
    for (const auto* side : {&r.inside, &r.outside})
      if (*side) ASSERT_TRUE(is_convex(**side, (*side)->convexity_tolerance()));
  }
}

TEST(MergePair, Examples) {
  const ConvexPart left = box_part({{0, 0, 0}, {0.5, 1, 1}});
  const ConvexPart right = box_part({{0.5, 0, 0}, {1, 1, 1}});
  const MergeResult whole = merge_pair(left, right);
  EXPECT_NEAR(whole.merged.volume(), 1.0, 1e-12);
  EXPECT_NEAR(whole.volume_error, 0.0, 1e-9);

  const ConvexPart a = box_part({{0, 0, 0}, {1, 1, 1}});
  const ConvexPart b = box_part({{2, 0, 0}, {3, 1, 1}});
  const MergeResult apart = merge_pair(a, b);
  EXPECT_NEAR(apart.merged.volume(), 3.0, 1e-9);
  EXPECT_NEAR(apart.volume_error, 1.0, 1e-9);

  const MergeResult self = merge_pair(a, a);
  EXPECT_EQ(vertex_set(self.merged), vertex_set(a));
  EXPECT_NEAR(self.volume_error, 0.0, 1e-9);
}

TEST(Containment, BoxAndPoint) {
  const ConvexPart cube = convex_hull(cube_corners());
  EXPECT_TRUE(fully_inside_box(cube, {{0, 0, 0}, {1, 1, 1}}, 1e-9));
  EXPECT_TRUE(contains_point(cube, {1, 1, 1}, 1e-9));
  const ConvexPart shifted = convex_hull(cube_corners({0.5, 0, 0}));
  EXPECT_FALSE(fully_inside_box(shifted, {{0, 0, 0}, {1, 1, 1}}, 1e-9));
  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    const ConvexPart p = random_part(rng, 12);
    EXPECT_TRUE(contains_point(p, p.centroid(), 0.0));
  }
}

TEST(Containment, Intrusion) {
  const ConvexPart cube = convex_hull(cube_corners());
  EXPECT_TRUE(intrudes_box(cube, {{0.25, 0.25, 0.25}, {0.75, 0.75, 0.75}}, 1e-9));
  EXPECT_FALSE(intrudes_box(cube, {{1, 0, 0}, {2, 1, 1}}, 1e-9));
  // A long bar passing through a box with no vertex inside it.
  const ConvexPart bar = box_part({{-1, 0.4, 0.4}, {2, 0.6, 0.6}});
  EXPECT_TRUE(intrudes_box(bar, {{0.25, 0.25, 0.25}, {0.75, 0.75, 0.75}}, 1e-9));
}

TEST(Gjk, AxisAlignedGapAndOverlap) {
  const ConvexPart cube = convex_hull(cube_corners({-0.5, -0.5, -0.5}));
  EXPECT_NEAR(gjk_distance(cube, Pose::identity(), cube, Pose::translated({3, 0, 0})), 2.0, 1e-6);
  EXPECT_EQ(gjk_distance(cube, Pose::identity(), cube, Pose::identity()), 0.0);
  EXPECT_EQ(gjk_distance(cube, Pose::identity(), cube, Pose::translated({0.3, 0.2, 0.1})), 0.0);
  const Pose rotated{Mat3::rotation({0, 0, 1}, M_PI / 4), {3, 0, 0}};
  EXPECT_NEAR(gjk_distance(cube, Pose::identity(), cube, rotated), 2.5 - std::sqrt(0.5), 1e-6);
}

TEST(Gjk, SymmetricOnRandomPairs) {
  Rng rng(77);
  for (int i = 0; i < 200; ++i) {
    const ConvexPart a = random_part(rng), b = random_part(rng);
    const Pose pa{Mat3::rotation(rng.unit_vector(), rng.uniform(0, 3)), rng.unit_vector() * rng.uniform(0, 3)};
    const Pose pb{Mat3::rotation(rng.unit_vector(), rng.uniform(0, 3)), rng.unit_vector() * rng.uniform(0, 3)};
    EXPECT_NEAR(gjk_distance(a, pa, b, pb), gjk_distance(b, pb, a, pa), 1e-9);
  }
}

TEST(Gjk, AgreesWithSamplingOracle) {
  Rng rng(99);
  int separated = 0;
  for (int i = 0; i < 20; ++i) {
    const ConvexPart a = random_part(rng), b = random_part(rng);
    const Pose pb = Pose::translated(rng.unit_vector() * rng.uniform(1.0, 4.0));
    const std::size_t n = 4000;
    std::vector<Vec3> sa = sample_surface(a.mesh(), n, 1 + i).points;
    std::vector<Vec3> sb = sample_surface(b.mesh(), n, 1000 + i).points;
    for (Vec3& p : sb) p = pb.apply(p);
    const double spacing = std::max(std::sqrt(surface_area(a.mesh()) / n), std::sqrt(surface_area(b.mesh()) / n));
    const double oracle = cloud_distance(sa, sb);
    const double d = gjk_distance(a, Pose::identity(), b, pb);
    EXPECT_LE(d, oracle + 1e-9);
    EXPECT_LE(oracle - d, 2.0 * spacing);
    separated += d > 0;
  }
  EXPECT_GT(separated, 0);
}
