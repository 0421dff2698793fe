#pragma once

#include <cmath>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "rcd/error.hpp"
#include "rcd/mesh.hpp"
#include "rcd/triangulate.hpp"

// Synthetic watertight test shapes. Everything here is built from planar
// profiles extruded along z, so the exact geometry is known analytically.
namespace rcd::fixtures {

using Loop = std::vector<Vec2>;

struct Profile {
  Loop outer;               // counter-clockwise
  std::vector<Loop> holes;  // any orientation
};

class MeshBuilder {
 public:
  std::uint32_t vertex(const Vec3& p) {
    auto [it, inserted] = ids_.try_emplace(p, static_cast<std::uint32_t>(mesh_.vertices.size()));
    if (inserted) mesh_.vertices.push_back(p);
    return it->second;
  }
  void triangle(const Vec3& a, const Vec3& b, const Vec3& c) { mesh_.faces.push_back({vertex(a), vertex(b), vertex(c)}); }

  // Horizontal face at height z; `up` selects the +z facing side.
  void planar(const Profile& profile, double z, bool up) {
    std::vector<Vec2> pts(profile.outer);
    std::vector<std::size_t> outer(profile.outer.size());
    for (std::size_t i = 0; i < outer.size(); ++i) outer[i] = i;
    std::vector<std::vector<std::size_t>> holes;
    for (const Loop& h : profile.holes) {
      std::vector<std::size_t> idx;
      for (const Vec2& p : h) {
        idx.push_back(pts.size());
        pts.push_back(p);
      }
      holes.push_back(std::move(idx));
    }
    for (const auto& t : triangulate_polygon(pts, outer, holes)) {
      const Vec3 a{pts[t[0]].x, pts[t[0]].y, z}, b{pts[t[1]].x, pts[t[1]].y, z}, c{pts[t[2]].x, pts[t[2]].y, z};
      if (up)
        triangle(a, b, c);
      else
        triangle(a, c, b);
    }
  }

  // Vertical walls of a loop between z0 < z1. A counter-clockwise loop yields
  // walls facing away from its interior; a clockwise loop faces into it.
  void walls(const Loop& loop, double z0, double z1) {
    for (std::size_t i = 0; i < loop.size(); ++i) {
      const Vec2& p = loop[i];
      const Vec2& q = loop[(i + 1) % loop.size()];
      const Vec3 b0{p.x, p.y, z0}, b1{q.x, q.y, z0}, t0{p.x, p.y, z1}, t1{q.x, q.y, z1};
      triangle(b0, b1, t1);
      triangle(b0, t1, t0);
    }
  }

  TriangleMesh take() { return std::move(mesh_); }

 private:
  TriangleMesh mesh_;
  std::unordered_map<Vec3, std::uint32_t, Vec3Hash> ids_;
};

inline Loop ccw(Loop l) {
  if (signed_area(l) < 0) std::reverse(l.begin(), l.end());
  return l;
}
inline Loop cw(Loop l) {
  if (signed_area(l) > 0) std::reverse(l.begin(), l.end());
  return l;
}

inline TriangleMesh extrude(const Profile& profile, double z0, double z1) {
  MeshBuilder b;
  Profile p{ccw(profile.outer), {}};
  for (const Loop& h : profile.holes) p.holes.push_back(cw(h));
  b.planar(p, z0, false);
  b.planar(p, z1, true);
  b.walls(p.outer, z0, z1);
  for (const Loop& h : p.holes) b.walls(h, z0, z1);
  return b.take();
}

inline Loop rectangle(double x0, double y0, double x1, double y1) { return {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}}; }

inline Loop circle(double cx, double cy, double r, int segments, double phase = 0.0) {
  Loop l;
  for (int i = 0; i < segments; ++i) {
    const double a = phase + 2.0 * 3.14159265358979323846 * i / segments;
    l.push_back({cx + r * std::cos(a), cy + r * std::sin(a)});
  }
  return l;
}

inline TriangleMesh box(const Aabb& b) {
  return extrude({rectangle(b.min.x, b.min.y, b.max.x, b.max.y), {}}, b.min.z, b.max.z);
}

// Canonical unit cube [0,1]^3: 8 vertices, 12 triangles.
inline TriangleMesh unit_cube() { return box({{0, 0, 0}, {1, 1, 1}}); }

// 2x2x1 block minus the [1,2]x[1,2]x[0,1] corner; volume 3, hull volume 3.5.
inline TriangleMesh l_prism() {
  return extrude({{{0, 0}, {2, 0}, {2, 1}, {1, 1}, {1, 2}, {0, 2}}, {}}, 0.0, 1.0);
}

// Two unit lobes joined by a thin bar, symmetric about x = 1.5.
inline TriangleMesh dumbbell() {
  return extrude({{{0, 0}, {1, 0}, {1, 0.4}, {2, 0.4}, {2, 0}, {3, 0}, {3, 1}, {2, 1}, {2, 0.6}, {1, 0.6}, {1, 1}, {0, 1}}, {}},
                 0.0, 1.0);
}

// Square ring (genus one): outer [0,3]^2, hole [1,2]^2, height 1. Volume 8.
inline TriangleMesh square_ring() { return extrude({rectangle(0, 0, 3, 3), {rectangle(1, 1, 2, 2)}}, 0.0, 1.0); }

// Unit cube whose top face carries an inverted square pyramid of the given
// depth over [0.3,0.7]^2 (apex at (0.5, 0.5, 1 - depth)).
inline TriangleMesh dimpled_cube(double depth = 0.2) {
  MeshBuilder b;
  const Loop outer = rectangle(0, 0, 1, 1);
  const Loop hole = rectangle(0.3, 0.3, 0.7, 0.7);
  b.planar({outer, {}}, 0.0, false);
  b.planar({outer, {cw(hole)}}, 1.0, true);
  b.walls(outer, 0.0, 1.0);
  const Vec3 apex{0.5, 0.5, 1.0 - depth};
  for (std::size_t i = 0; i < hole.size(); ++i) {
    const Vec2& p = hole[i];
    const Vec2& q = hole[(i + 1) % hole.size()];
    b.triangle({p.x, p.y, 1.0}, {q.x, q.y, 1.0}, apex);
  }
  return b.take();
}

// Icosahedron subdivided `levels` times and projected to the sphere.
inline TriangleMesh icosphere(int levels, double radius = 1.0) {
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  TriangleMesh m;
  m.vertices = {{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
                {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
  m.faces = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
             {11, 10, 2}, {10, 7, 6}, {7, 1, 8},  {3, 9, 4},  {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
             {3, 8, 9},  {4, 9, 5},  {2, 4, 11},  {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
  for (Vec3& v : m.vertices) v = normalized(v);
  for (int l = 0; l < levels; ++l) {
    std::unordered_map<std::uint64_t, std::uint32_t> mid;
    auto midpoint = [&](std::uint32_t a, std::uint32_t b) {
      const std::uint64_t k = (std::uint64_t(std::min(a, b)) << 32) | std::max(a, b);
      auto it = mid.find(k);
      if (it != mid.end()) return it->second;
      const auto id = static_cast<std::uint32_t>(m.vertices.size());
      m.vertices.push_back(normalized((m.vertices[a] + m.vertices[b]) * 0.5));
      mid.emplace(k, id);
      return id;
    };
    std::vector<Face> next;
    for (const Face& f : m.faces) {
      const auto a = midpoint(f[0], f[1]), b = midpoint(f[1], f[2]), c = midpoint(f[2], f[0]);
      next.push_back({f[0], a, c});
      next.push_back({f[1], b, a});
      next.push_back({f[2], c, b});
      next.push_back({a, b, c});
    }
    m.faces = std::move(next);
  }
  for (Vec3& v : m.vertices) v *= radius;
  return m;
}

struct Feature {
  std::string name;
  Profile profile;
  double height = 0.0;  // extends upward from the top (> 0) or downward from the bottom (< 0)
};

// Prism base with prisms stacked on its top and bottom faces. Feature
// footprints must lie strictly inside the base profile and not overlap.
inline TriangleMesh stacked(const Loop& base, double z0, double z1, const std::vector<Feature>& features) {
  MeshBuilder b;
  const Loop outer = ccw(base);
  Profile top{outer, {}}, bottom{outer, {}};
  for (const Feature& f : features) (f.height > 0 ? top : bottom).holes.push_back(cw(f.profile.outer));
  b.planar(top, z1, true);
  b.planar(bottom, z0, false);
  b.walls(outer, z0, z1);
  for (const Feature& f : features) {
    const bool up = f.height > 0;
    const double base_z = up ? z1 : z0;
    const double end_z = base_z + f.height;
    Profile p{ccw(f.profile.outer), {}};
    for (const Loop& h : f.profile.holes) p.holes.push_back(cw(h));
    b.planar(p, end_z, up);
    b.walls(p.outer, std::min(base_z, end_z), std::max(base_z, end_z));
    for (const Loop& h : p.holes) {
      b.walls(h, std::min(base_z, end_z), std::max(base_z, end_z));
      b.planar({ccw(h), {}}, base_z, up);  // floor of the blind hole
    }
  }
  return b.take();
}

// Circle of radius r with `grooves` shallow V notches of the given depth.
inline Loop grooved_circle(double r, int grooves, double depth) {
  Loop l;
  const int n = 2 * grooves;
  for (int i = 0; i < n; ++i) {
    const double a = 2.0 * 3.14159265358979323846 * i / n;
    const double rr = (i % 2 == 0) ? r : r - depth;
    l.push_back({rr * std::cos(a), rr * std::sin(a)});
  }
  return l;
}

struct MotorLike {
  TriangleMesh mesh;
  std::vector<std::pair<std::string, Aabb>> feature_boxes;  // eye, four bosses, shaft
};

// Motor-like housing: grooved cylindrical body (cooling fins) with a lifting
// eye and four hollow mounting bosses on top and a shaft underneath.
inline MotorLike motor_like() {
  const double z0 = 0.0, z1 = 2.0;
  std::vector<Feature> features;
  features.push_back({"eye", {rectangle(-0.25, -0.15, 0.25, 0.15), {rectangle(-0.12, -0.06, 0.12, 0.06)}}, 0.3});
  const double c = 0.5;
  int k = 0;
  for (double sx : {-1.0, 1.0})
    for (double sy : {-1.0, 1.0})
      features.push_back({"boss" + std::to_string(k++),
                          {circle(sx * c, sy * c, 0.15, 16), {circle(sx * c, sy * c, 0.07, 12)}},
                          0.3});
  features.push_back({"shaft", {circle(0, 0, 0.2, 16), {}}, -0.8});
  MotorLike m;
  m.mesh = stacked(grooved_circle(1.0, 32, 0.03), z0, z1, features);
  for (const Feature& f : features) {
    Aabb box;
    for (const Vec2& p : f.profile.outer) box.expand(Vec3{p.x, p.y, f.height > 0 ? z1 : z0 + f.height});
    box.max.z = f.height > 0 ? z1 + f.height : z0;
    m.feature_boxes.emplace_back(f.name, box.inflated(0.0));
  }
  return m;
}

// Named lookup used by the CLI.
inline TriangleMesh by_name(std::string_view name) {
  if (name == "cube") return unit_cube();
  if (name == "l-prism") return l_prism();
  if (name == "dumbbell") return dumbbell();
  if (name == "ring") return square_ring();
  if (name == "dimpled-cube") return dimpled_cube();
  if (name == "icosphere") return icosphere(3);
  if (name == "motor") return motor_like().mesh;
  throw Error(ErrorCode::InvalidArgument, "unknown fixture '" + std::string(name) + "'");
}

}  // namespace rcd::fixtures
