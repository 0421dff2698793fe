#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "rcd/boolean.hpp"
#include "rcd/fixtures.hpp"

using namespace rcd;

namespace {

// V - E + F for each connected component.
std::vector<long> euler_characteristics(const TriangleMesh& mesh) {
  std::vector<long> out;
  for (const TriangleMesh& c : connected_components(mesh)) {
    std::set<std::pair<std::uint32_t, std::uint32_t>> edges;
    std::set<std::uint32_t> verts;
    for (const Face& f : c.faces)
      for (int k = 0; k < 3; ++k) {
        verts.insert(f[k]);
        edges.emplace(std::min(f[k], f[(k + 1) % 3]), std::max(f[k], f[(k + 1) % 3]));
      }
    out.push_back(long(verts.size()) - long(edges.size()) + long(c.faces.size()));
  }
  return out;
}

// Faces lying in the plane x = c, grouped into edge-connected patches.
std::size_t patches_on_plane_x(const TriangleMesh& mesh, double c) {
  std::vector<std::size_t> on;
  for (std::size_t f = 0; f < mesh.faces.size(); ++f)
    if (std::abs(mesh.corner(f, 0).x - c) < 1e-12 && std::abs(mesh.corner(f, 1).x - c) < 1e-12 &&
        std::abs(mesh.corner(f, 2).x - c) < 1e-12)
      on.push_back(f);
  std::vector<std::size_t> parent(on.size());
  for (std::size_t i = 0; i < on.size(); ++i) parent[i] = i;
  auto find = [&](std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  for (std::size_t i = 0; i < on.size(); ++i)
    for (std::size_t j = i + 1; j < on.size(); ++j) {
      int shared = 0;
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) shared += mesh.faces[on[i]][a] == mesh.faces[on[j]][b];
      if (shared >= 2) parent[find(i)] = find(j);
    }
  std::set<std::size_t> roots;
  for (std::size_t i = 0; i < on.size(); ++i) roots.insert(find(i));
  return roots.size();
}

ConvexPart cube_part(const Aabb& b) { return ConvexPart::from_mesh(fixtures::box(b)); }

}  // namespace

TEST(ClipMesh, CubeHalf) {
  const auto half = clip_mesh_by_plane(fixtures::unit_cube(), Plane::axis_aligned(0, +1, 0.5), KeepSide::Inside);
  ASSERT_TRUE(half);
  EXPECT_TRUE(validate(*half).watertight);
  EXPECT_NEAR(mesh_volume(*half), 0.5, 1e-9);
}

TEST(ClipMesh, RingThroughBothArms) {
  const auto cut = clip_mesh_by_plane(fixtures::square_ring(), Plane::axis_aligned(0, +1, 1.5), KeepSide::Inside);
  ASSERT_TRUE(cut);
  EXPECT_TRUE(validate(*cut).watertight);
  EXPECT_EQ(patches_on_plane_x(*cut, 1.5), 2u);
  for (long chi : euler_characteristics(*cut)) EXPECT_EQ(chi, 2);
  EXPECT_NEAR(mesh_volume(*cut), 4.0, 1e-9);
}

TEST(ClipMesh, MissingPlaneKeepsMesh) {
  const TriangleMesh cube = fixtures::unit_cube();
  const auto kept = clip_mesh_by_plane(cube, Plane::axis_aligned(0, +1, 5.0), KeepSide::Inside);
  ASSERT_TRUE(kept);
  EXPECT_EQ(kept->vertices, cube.vertices);
  EXPECT_FALSE(clip_mesh_by_plane(cube, Plane::axis_aligned(0, +1, 5.0), KeepSide::Outside));
}

TEST(SimplifyCoplanar, RepeatedCutsCollapseToABox) {
  // Cut a box out of the cube one face at a time; caps pick up the earlier
  // cut points, so without merging the vertex count keeps growing.
  TriangleMesh raw = fixtures::unit_cube(), merged = raw;
  const double cuts[][3] = {{0, -1, 0.1}, {1, -1, 0.15}, {0, +1, 0.8}, {2, +1, 0.7}, {1, +1, 0.9}, {2, -1, 0.2},
                            {0, -1, 0.3}, {1, -1, 0.35}, {0, +1, 0.6}, {1, +1, 0.55}};
  for (const auto& c : cuts) {
    const Plane pl = Plane::axis_aligned(int(c[0]), int(c[1]), c[2]);
    raw = *clip_mesh_by_plane(raw, pl, KeepSide::Inside);
    merged = simplify_coplanar(*clip_mesh_by_plane(merged, pl, KeepSide::Inside));
  }
  const double volume = 0.3 * 0.2 * 0.5;
  EXPECT_NEAR(mesh_volume(raw), volume, 1e-12);
  EXPECT_NEAR(mesh_volume(merged), volume, 1e-12);
  EXPECT_TRUE(validate(merged).watertight);
  EXPECT_EQ(merged.vertices.size(), 8u);
  EXPECT_EQ(merged.faces.size(), 12u);
  EXPECT_GT(raw.vertices.size(), merged.vertices.size());
}

TEST(SimplifyCoplanar, KeepsShapeOfNonConvexSections) {
  TriangleMesh ring = *clip_mesh_by_plane(fixtures::square_ring(), Plane::axis_aligned(0, +1, 1.5), KeepSide::Inside);
  ring = *clip_mesh_by_plane(ring, Plane::axis_aligned(1, +1, 2.5), KeepSide::Inside);
  const TriangleMesh m = simplify_coplanar(ring);
  EXPECT_TRUE(validate(m).watertight);
  EXPECT_NEAR(mesh_volume(m), mesh_volume(ring), 1e-12);
  EXPECT_EQ(euler_characteristics(m), euler_characteristics(ring));
  EXPECT_LE(m.vertices.size(), ring.vertices.size());
  // Every kept vertex is an original one.
  for (const Vec3& v : m.vertices) EXPECT_NE(std::find(ring.vertices.begin(), ring.vertices.end(), v), ring.vertices.end());
}

TEST(IntersectBox, Examples) {
  const TriangleMesh cube = fixtures::unit_cube();
  const auto corner = boolean_intersect_box(cube, {{0.5, 0.5, 0.5}, {1.5, 1.5, 1.5}});
  ASSERT_TRUE(corner);
  EXPECT_TRUE(validate(*corner).watertight);
  EXPECT_NEAR(mesh_volume(*corner), 0.125, 1e-9);
  const Aabb b = mesh_aabb(*corner);
  EXPECT_NEAR(distance(b.min, {0.5, 0.5, 0.5}), 0.0, 1e-12);
  EXPECT_NEAR(distance(b.max, {1, 1, 1}), 0.0, 1e-12);

  const auto whole = boolean_intersect_box(cube, {{-1, -1, -1}, {2, 2, 2}});
  ASSERT_TRUE(whole);
  EXPECT_EQ(whole->vertices, cube.vertices);
  EXPECT_FALSE(boolean_intersect_box(cube, {{2, 2, 2}, {3, 3, 3}}));
}

TEST(DifferenceBoxes, Examples) {
  const TriangleMesh cube = fixtures::unit_cube();
  const std::vector<Aabb> half = {{{0.5, -1, -1}, {2, 2, 2}}};
  const auto left = boolean_difference_boxes(cube, half);
  ASSERT_TRUE(left);
  EXPECT_TRUE(validate(*left).watertight);
  EXPECT_NEAR(mesh_volume(*left), 0.5, 1e-9);
  EXPECT_NEAR(mesh_aabb(*left).max.x, 0.5, 1e-12);

  const std::vector<Aabb> inner = {{{0.25, 0.25, 0.25}, {0.75, 0.75, 0.75}}};
  const auto shell = boolean_difference_boxes(cube, inner);
  ASSERT_TRUE(shell);
  EXPECT_TRUE(validate(*shell).watertight);
  EXPECT_NEAR(mesh_volume(*shell), 1.0 - 0.125, 1e-6);
  EXPECT_EQ(connected_components(*shell).size(), 2u);
  for (long chi : euler_characteristics(*shell)) EXPECT_EQ(chi, 2);

  const auto same = boolean_difference_boxes(cube, {});
  ASSERT_TRUE(same);
  EXPECT_EQ(same->vertices, cube.vertices);
  EXPECT_EQ(same->faces, cube.faces);

  const std::vector<Aabb> all = {{{-1, -1, -1}, {2, 2, 2}}};
  EXPECT_FALSE(boolean_difference_boxes(cube, all));
}

TEST(DifferenceBoxes, AdjacentBoxesSharingAFace) {
  const TriangleMesh ring = fixtures::square_ring();
  const std::vector<Aabb> boxes = {{{-1, -1, 0.2}, {1.5, 4, 0.6}}, {{1.5, -1, 0.2}, {4, 4, 0.6}}};
  const auto rest = boolean_difference_boxes(ring, boxes);
  ASSERT_TRUE(rest);
  EXPECT_TRUE(validate(*rest).watertight);
  // The two boxes together remove the slab z in [0.2, 0.6] entirely.
  EXPECT_NEAR(mesh_volume(*rest), 8.0 * 0.6, 1e-9);
  EXPECT_EQ(connected_components(*rest).size(), 2u);
}

TEST(Booleans, VolumeConservationOnRandomPairs) {
  const std::vector<std::string> names = {"cube", "l-prism", "dumbbell", "ring", "dimpled-cube", "icosphere", "motor"};
  std::vector<TriangleMesh> meshes;
  for (const auto& n : names) meshes.push_back(fixtures::by_name(n));
  Rng rng(31337);
  for (int trial = 0; trial < 50; ++trial) {
    const TriangleMesh& mesh = meshes[trial % meshes.size()];
    const Aabb bounds = mesh_aabb(mesh);
    Vec3 lo, hi;
    for (int k = 0; k < 3; ++k) {
      double a = rng.uniform(bounds.min[k] - 0.1, bounds.max[k]);
      double b = rng.uniform(bounds.min[k], bounds.max[k] + 0.1);
      if (a > b) std::swap(a, b);
      if (b - a < 1e-3) b = a + 1e-3;
      lo[k] = a;
      hi[k] = b;
    }
    const Aabb box{lo, hi};
    const double v = mesh_volume(mesh);
    const auto in = boolean_intersect_box(mesh, box);
    const std::vector<Aabb> boxes{box};
    const auto out = boolean_difference_boxes(mesh, boxes);
    if (in) ASSERT_TRUE(validate(*in).watertight) << names[trial % names.size()] << " trial " << trial;
    if (out) ASSERT_TRUE(validate(*out).watertight) << names[trial % names.size()] << " trial " << trial;
    const double total = (in ? mesh_volume(*in) : 0.0) + (out ? mesh_volume(*out) : 0.0);
    EXPECT_NEAR(total, v, 1e-6 * v) << names[trial % names.size()] << " trial " << trial;
  }
}

TEST(DifferenceConvex, InteriorBox) {
  const Aabb box{{0.25, 0.25, 0.25}, {0.75, 0.75, 0.75}};
  ConvexDifferenceStats stats;
  const auto pieces = bool_difference_convex({cube_part({{0, 0, 0}, {1, 1, 1}})}, box, &stats);
  EXPECT_EQ(stats.parts_split, 1u);
  double total = 0.0;
  for (const ConvexPart& p : pieces) {
    total += p.volume();
    EXPECT_TRUE(is_convex(p, p.convexity_tolerance()));
    for (const Vec3& v : p.vertices()) EXPECT_FALSE(box.strictly_contains(v, 1e-9));
    EXPECT_FALSE(intrudes_box(p, box, 1e-9));
  }
  EXPECT_NEAR(total, 0.875, 1e-6);
}

TEST(DifferenceConvex, DisjointAndContained) {
  const ConvexPart far = cube_part({{2, 2, 2}, {3, 3, 3}});
  const Aabb box{{0, 0, 0}, {1, 1, 1}};
  const auto kept = bool_difference_convex({far}, box);
  ASSERT_EQ(kept.size(), 1u);
  EXPECT_EQ(kept[0], far);
  // Touching the box on a face only: still untouched.
  const ConvexPart touching = cube_part({{1, 0, 0}, {2, 1, 1}});
  const auto kept2 = bool_difference_convex({touching}, box);
  ASSERT_EQ(kept2.size(), 1u);
  EXPECT_EQ(kept2[0], touching);
  EXPECT_TRUE(bool_difference_convex({cube_part({{0.2, 0.2, 0.2}, {0.8, 0.8, 0.8}})}, box).empty());
}

TEST(DifferenceConvex, HalfOverlapMergesBack) {
  // Box takes the x >= 0.5 half: the leftover is a single box, not six slivers.
  const auto pieces = bool_difference_convex({cube_part({{0, 0, 0}, {1, 1, 1}})}, {{0.5, -1, -1}, {2, 2, 2}});
  ASSERT_EQ(pieces.size(), 1u);
  EXPECT_NEAR(pieces[0].volume(), 0.5, 1e-9);
}

TEST(DifferenceConvex, RandomPartsConserveVolume) {
  Rng rng(8);
  for (int i = 0; i < 30; ++i) {
    std::vector<Vec3> pts;
    for (int k = 0; k < 25; ++k) pts.push_back(rng.unit_vector() * std::cbrt(rng.uniform()));
    const ConvexPart part = convex_hull(pts);
    const Vec3 c{rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5)};
    const Aabb box{c - Vec3{0.3, 0.3, 0.3}, c + Vec3{0.3, 0.3, 0.3}};
    const double removed = intersection_volume(part, ConvexPart::from_mesh(fixtures::box(box)));
    double total = 0.0;
    for (const ConvexPart& p : bool_difference_convex({part}, box)) {
      total += p.volume();
      EXPECT_FALSE(intrudes_box(p, box, 1e-9));
    }
    EXPECT_NEAR(total, part.volume() - removed, 1e-6) << i;
  }
}

TEST(MergeNeighbors, Examples) {
  const auto merged = merge_neighbors({cube_part({{0, 0, 0}, {0.5, 1, 1}}), cube_part({{0.5, 0, 0}, {1, 1, 1}})}, 1e-6);
  ASSERT_EQ(merged.size(), 1u);
  EXPECT_NEAR(merged[0].volume(), 1.0, 1e-12);

  const auto apart = merge_neighbors({cube_part({{0, 0, 0}, {1, 1, 1}}), cube_part({{2, 0, 0}, {3, 1, 1}})}, 0.1);
  EXPECT_EQ(apart.size(), 2u);

  Rng rng(4);
  std::vector<ConvexPart> random;
  for (int i = 0; i < 6; ++i) {
    std::vector<Vec3> pts;
    const Vec3 c{rng.uniform(0, 2), rng.uniform(0, 2), rng.uniform(0, 2)};
    for (int k = 0; k < 12; ++k) pts.push_back(c + rng.unit_vector() * rng.uniform(0.2, 0.6));
    random.push_back(convex_hull(pts));
  }
  EXPECT_EQ(merge_neighbors(random, 0.0).size(), random.size());
}
