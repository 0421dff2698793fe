#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "rcd/error.hpp"
#include "rcd/geometry.hpp"
#include "rcd/mesh.hpp"

namespace rcd {

// Convex polytope with outward counter-clockwise triangles.
class ConvexPart {
 public:
  ConvexPart() = default;

  // Wraps an already-convex closed triangulation (e.g. a part read back from disk).
  static ConvexPart from_mesh(TriangleMesh mesh) {
    ConvexPart part;
    part.mesh_ = std::move(mesh);
    part.finish();
    return part;
  }

  const std::vector<Vec3>& vertices() const { return mesh_.vertices; }
  const std::vector<Face>& faces() const { return mesh_.faces; }
  const TriangleMesh& mesh() const { return mesh_; }
  double volume() const { return volume_; }
  const Aabb& aabb() const { return aabb_; }
  // Distinct facet planes (coplanar triangles collapsed).
  const std::vector<Plane>& planes() const { return planes_; }
  Vec3 centroid() const { return centroid_; }
  // Tolerance used for the convexity invariant: 1e-7 of the bounding diagonal.
  double convexity_tolerance() const { return 1e-7 * aabb_.diagonal(); }

  bool operator==(const ConvexPart& o) const {
    return mesh_.vertices == o.mesh_.vertices && mesh_.faces == o.mesh_.faces;
  }

 private:
  void finish() {
    aabb_ = mesh_aabb(mesh_);
    volume_ = signed_volume(mesh_);
    // Volume-weighted centroid of the tetra fan from the origin-shifted first vertex.
    Vec3 c{};
    double six_v = 0.0;
    const Vec3 o = mesh_.vertices.empty() ? Vec3{} : mesh_.vertices.front();
    for (const Face& f : mesh_.faces) {
      const Vec3 a = mesh_.vertices[f[0]] - o, b = mesh_.vertices[f[1]] - o, d = mesh_.vertices[f[2]] - o;
      const double v = dot(a, cross(b, d));
      six_v += v;
      c += (a + b + d) * v;
    }
    centroid_ = six_v != 0.0 ? o + c / (4.0 * six_v) : aabb_.center();
    planes_.clear();
    for (std::size_t f = 0; f < mesh_.faces.size(); ++f) {
      const Vec3 n = cross(mesh_.corner(f, 1) - mesh_.corner(f, 0), mesh_.corner(f, 2) - mesh_.corner(f, 0));
      if (norm(n) == 0.0) continue;
      Plane p = Plane::through(n, mesh_.corner(f, 0));
      bool dup = false;
      for (const Plane& q : planes_)
        if (dot(q.normal, p.normal) > 1.0 - 1e-12 && std::abs(q.offset - p.offset) <= 1e-12 * (1.0 + aabb_.diagonal())) {
          dup = true;
          break;
        }
      if (!dup) planes_.push_back(p);
    }
  }

  TriangleMesh mesh_;
  double volume_ = 0.0;
  Aabb aabb_;
  Vec3 centroid_;
  std::vector<Plane> planes_;
};

namespace detail {

class QuickHull {
 public:
  explicit QuickHull(std::span<const Vec3> pts) : pts_(pts.begin(), pts.end()) {}

  TriangleMesh run() {
    const Aabb box = points_aabb(pts_);
    const double diag = box.diagonal();
    if (pts_.size() < 4 || !(diag > 0.0)) throw Error(ErrorCode::DegenerateInput, "fewer than four distinct points");
    eps_ = 1e-10 * diag;
    init_simplex();
    while (true) {
      int face = -1;
      for (std::size_t f = 0; f < faces_.size(); ++f)
        if (faces_[f].alive && !faces_[f].outside.empty()) {
          face = static_cast<int>(f);
          break;
        }
      if (face < 0) break;
      add_point(face);
    }
    TriangleMesh out;
    out.vertices = pts_;
    for (const auto& f : faces_)
      if (f.alive) out.faces.push_back({f.v[0], f.v[1], f.v[2]});
    return compact(out);
  }

 private:
  struct HullFace {
    std::uint32_t v[3];
    Vec3 normal;
    double offset;
    bool alive = true;
    std::vector<std::uint32_t> outside;
  };

  static std::uint64_t key(std::uint32_t a, std::uint32_t b) { return (std::uint64_t(a) << 32) | b; }

  double dist(const HullFace& f, const Vec3& p) const { return dot(f.normal, p) - f.offset; }

  int make_face(std::uint32_t a, std::uint32_t b, std::uint32_t c) {
    HullFace f;
    f.v[0] = a;
    f.v[1] = b;
    f.v[2] = c;
    f.normal = normalized(cross(pts_[b] - pts_[a], pts_[c] - pts_[a]));
    f.offset = dot(f.normal, pts_[a]);
    const int id = static_cast<int>(faces_.size());
    faces_.push_back(std::move(f));
    edges_[key(a, b)] = id;
    edges_[key(b, c)] = id;
    edges_[key(c, a)] = id;
    return id;
  }

  void init_simplex() {
    const std::size_t n = pts_.size();
    std::size_t i0 = 0, i1 = 0;
    // Widest extreme pair along any axis.
    double best = -1.0;
    for (int axis = 0; axis < 3; ++axis) {
      std::size_t lo = 0, hi = 0;
      for (std::size_t i = 1; i < n; ++i) {
        if (pts_[i][axis] < pts_[lo][axis]) lo = i;
        if (pts_[i][axis] > pts_[hi][axis]) hi = i;
      }
      const double d = distance(pts_[lo], pts_[hi]);
      if (d > best) {
        best = d;
        i0 = lo;
        i1 = hi;
      }
    }
    if (best <= eps_) throw Error(ErrorCode::DegenerateInput, "coincident points");
    const Vec3 dir = normalized(pts_[i1] - pts_[i0]);
    std::size_t i2 = i0;
    best = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      const Vec3 d = pts_[i] - pts_[i0];
      const double dd = norm(d - dir * dot(d, dir));
      if (dd > best) {
        best = dd;
        i2 = i;
      }
    }
    if (best <= eps_) throw Error(ErrorCode::DegenerateInput, "collinear points");
    const Vec3 nrm = normalized(cross(pts_[i1] - pts_[i0], pts_[i2] - pts_[i0]));
    std::size_t i3 = i0;
    best = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double dd = std::abs(dot(pts_[i] - pts_[i0], nrm));
      if (dd > best) {
        best = dd;
        i3 = i;
      }
    }
    if (best <= eps_) throw Error(ErrorCode::DegenerateInput, "coplanar points");

    auto a = static_cast<std::uint32_t>(i0), b = static_cast<std::uint32_t>(i1);
    auto c = static_cast<std::uint32_t>(i2), d = static_cast<std::uint32_t>(i3);
    if (orient3d(pts_[a], pts_[b], pts_[c], pts_[d]) < 0) std::swap(b, c);
    // With orient3d(a,b,c,d) > 0, d lies below (a,b,c) seen counter-clockwise.
    make_face(a, b, c);
    make_face(a, d, b);
    make_face(b, d, c);
    make_face(c, d, a);
    std::vector<std::uint32_t> all;
    all.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
      if (i != i0 && i != i1 && i != i2 && i != i3) all.push_back(static_cast<std::uint32_t>(i));
    assign(all, {0, 1, 2, 3});
  }

  void assign(const std::vector<std::uint32_t>& points, const std::vector<int>& candidates) {
    for (std::uint32_t p : points) {
      int best_face = -1;
      double best = eps_;
      for (int f : candidates) {
        const double d = dist(faces_[static_cast<std::size_t>(f)], pts_[p]);
        if (d > best) {
          best = d;
          best_face = f;
        }
      }
      if (best_face >= 0) faces_[static_cast<std::size_t>(best_face)].outside.push_back(p);
    }
  }

  void add_point(int start) {
    HullFace& sf = faces_[static_cast<std::size_t>(start)];
    std::uint32_t apex = sf.outside.front();
    double far = dist(sf, pts_[apex]);
    for (std::uint32_t p : sf.outside) {
      const double d = dist(sf, pts_[p]);
      if (d > far) {
        far = d;
        apex = p;
      }
    }
    const Vec3& ap = pts_[apex];

    std::vector<int> visible{start};
    std::unordered_set<int> seen{start};
    for (std::size_t k = 0; k < visible.size(); ++k) {
      const HullFace& f = faces_[static_cast<std::size_t>(visible[k])];
      for (int e = 0; e < 3; ++e) {
        const int nb = edges_.at(key(f.v[(e + 1) % 3], f.v[e]));
        if (seen.count(nb)) continue;
        seen.insert(nb);
        if (dist(faces_[static_cast<std::size_t>(nb)], ap) > eps_) visible.push_back(nb);
      }
    }
    std::unordered_set<int> vis(visible.begin(), visible.end());
    std::vector<std::pair<std::uint32_t, std::uint32_t>> horizon;
    std::vector<std::uint32_t> orphans;
    for (int fi : visible) {
      HullFace& f = faces_[static_cast<std::size_t>(fi)];
      for (int e = 0; e < 3; ++e) {
        const std::uint32_t a = f.v[e], b = f.v[(e + 1) % 3];
        if (!vis.count(edges_.at(key(b, a)))) horizon.emplace_back(a, b);
      }
      for (std::uint32_t p : f.outside)
        if (p != apex) orphans.push_back(p);
      f.outside.clear();
      f.alive = false;
    }
    for (int fi : visible) {
      const HullFace& f = faces_[static_cast<std::size_t>(fi)];
      for (int e = 0; e < 3; ++e) {
        auto it = edges_.find(key(f.v[e], f.v[(e + 1) % 3]));
        if (it != edges_.end() && it->second == fi) edges_.erase(it);
      }
    }
    std::vector<int> created;
    created.reserve(horizon.size());
    for (auto [a, b] : horizon) created.push_back(make_face(a, b, apex));
    assign(orphans, created);
  }

  std::vector<Vec3> pts_;
  std::vector<HullFace> faces_;
  std::unordered_map<std::uint64_t, int> edges_;
  double eps_ = 0.0;
};

// Vertices of a hull triangulation that are polytope corners (at least three
// distinct incident facet planes). Edge and facet-interior points are dropped.
inline std::vector<Vec3> extreme_vertices(const TriangleMesh& hull) {
  std::vector<std::vector<Vec3>> normals(hull.vertices.size());
  for (std::size_t f = 0; f < hull.faces.size(); ++f) {
    const Vec3 n = hull.face_normal(f);
    for (int k = 0; k < 3; ++k) {
      auto& list = normals[hull.faces[f][static_cast<std::size_t>(k)]];
      bool dup = false;
      for (const Vec3& m : list)
        if (dot(m, n) > 1.0 - 1e-10) dup = true;
      if (!dup) list.push_back(n);
    }
  }
  std::vector<Vec3> out;
  for (std::size_t v = 0; v < hull.vertices.size(); ++v)
    if (normals[v].size() >= 3) out.push_back(hull.vertices[v]);
  return out;
}

}  // namespace detail

// Minimal convex polytope containing all points. Throws DegenerateInput for
// coplanar, collinear or coincident sets.
inline ConvexPart convex_hull(std::span<const Vec3> points) {
  TriangleMesh hull = detail::QuickHull(points).run();
  // Re-hull from the corners only, so hulls of hulls reproduce the same vertex set.
  for (int pass = 0; pass < 4; ++pass) {
    std::vector<Vec3> corners = detail::extreme_vertices(hull);
    if (corners.size() == hull.vertices.size() || corners.size() < 4) break;
    hull = detail::QuickHull(corners).run();
  }
  return ConvexPart::from_mesh(std::move(hull));
}

inline bool contains_point(const ConvexPart& part, const Vec3& p, double slack) {
  for (const Plane& pl : part.planes())
    if (pl.signed_distance(p) > slack) return false;
  return true;
}

inline bool fully_inside_box(const ConvexPart& part, const Aabb& box, double slack) {
  for (const Vec3& v : part.vertices())
    if (!box.contains(v, slack)) return false;
  return true;
}

// Checks that every vertex lies behind every facet plane within tolerance.
inline bool is_convex(const ConvexPart& part, double tol) {
  for (const Plane& pl : part.planes())
    for (const Vec3& v : part.vertices())
      if (pl.signed_distance(v) > tol) return false;
  return true;
}

namespace detail {

// Intersection of segment (a, b) with a plane; endpoints are ordered canonically
// so both faces sharing the edge compute the bit-identical point.
inline Vec3 plane_cut_point(Vec3 a, double sa, Vec3 b, double sb, const Plane& plane) {
  if (lex_less(b, a)) {
    std::swap(a, b);
    std::swap(sa, sb);
  }
  const double t = sa / (sa - sb);
  Vec3 p = a + (b - a) * t;
  if (plane.axis >= 0) p[plane.axis] = plane.axis_value();
  return p;
}

inline std::vector<std::pair<std::uint32_t, std::uint32_t>> unique_edges(const std::vector<Face>& faces) {
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
  for (const Face& f : faces)
    for (int k = 0; k < 3; ++k) {
      const auto a = f[static_cast<std::size_t>(k)], b = f[static_cast<std::size_t>((k + 1) % 3)];
      if (a < b) edges.emplace_back(a, b);
    }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  return edges;
}

}  // namespace detail

struct SplitResult {
  std::optional<ConvexPart> inside;
  std::optional<ConvexPart> outside;
};

// Cuts a convex part by a plane. A side whose volume is below 1e-12 of the
// part's volume is reported absent and the other side keeps the whole part.
inline SplitResult split_by_plane(const ConvexPart& part, const Plane& plane) {
  const auto& vs = part.vertices();
  const double tol = 1e-12 * std::max(1.0, part.aabb().diagonal());
  std::vector<double> s(vs.size());
  bool any_in = false, any_out = false;
  for (std::size_t i = 0; i < vs.size(); ++i) {
    s[i] = plane.signed_distance(vs[i]);
    if (std::abs(s[i]) <= tol) s[i] = 0.0;
    any_in |= s[i] < 0.0;
    any_out |= s[i] > 0.0;
  }
  if (!any_out) return {part, std::nullopt};
  if (!any_in) return {std::nullopt, part};

  std::vector<Vec3> in_pts, out_pts;
  for (std::size_t i = 0; i < vs.size(); ++i) {
    Vec3 v = vs[i];
    if (s[i] == 0.0 && plane.axis >= 0) v[plane.axis] = plane.axis_value();
    if (s[i] <= 0.0) in_pts.push_back(v);
    if (s[i] >= 0.0) out_pts.push_back(v);
  }
  for (auto [a, b] : detail::unique_edges(part.faces())) {
    if ((s[a] < 0.0 && s[b] > 0.0) || (s[a] > 0.0 && s[b] < 0.0)) {
      const Vec3 p = detail::plane_cut_point(vs[a], s[a], vs[b], s[b], plane);
      in_pts.push_back(p);
      out_pts.push_back(p);
    }
  }
  const double min_vol = 1e-12 * part.volume();
  auto build = [&](const std::vector<Vec3>& pts) -> std::optional<ConvexPart> {
    try {
      ConvexPart p = convex_hull(pts);
      if (p.volume() < min_vol) return std::nullopt;
      return p;
    } catch (const Error& e) {
      if (e.code() == ErrorCode::DegenerateInput) return std::nullopt;
      throw;
    }
  };
  SplitResult r{build(in_pts), build(out_pts)};
  if (!r.inside && !r.outside) return {part, std::nullopt};
  if (!r.inside) r.outside = part;
  if (!r.outside) r.inside = part;
  return r;
}

// Volume of a ∩ b, by clipping a against b's facet planes.
inline double intersection_volume(const ConvexPart& a, const ConvexPart& b) {
  if (!a.aabb().interiors_overlap(b.aabb())) return 0.0;
  std::optional<ConvexPart> piece = a;
  for (const Plane& pl : b.planes()) {
    piece = split_by_plane(*piece, pl).inside;
    if (!piece) return 0.0;
  }
  return piece->volume();
}

struct MergeResult {
  ConvexPart merged;
  double volume_error = 0.0;
};

// Hull of both vertex sets. The error is the hull volume not covered by
// either input: vol(hull) - vol(a) - vol(b) + vol(a ∩ b).
inline MergeResult merge_pair(const ConvexPart& a, const ConvexPart& b) {
  std::vector<Vec3> pts = a.vertices();
  pts.insert(pts.end(), b.vertices().begin(), b.vertices().end());
  MergeResult r{convex_hull(pts), 0.0};
  r.volume_error = r.merged.volume() - a.volume() - b.volume() + intersection_volume(a, b);
  return r;
}

// The box itself as a convex part.
inline ConvexPart box_part(const Aabb& b) {
  std::vector<Vec3> c;
  for (int i = 0; i < 8; ++i)
    c.push_back({(i & 1) ? b.max.x : b.min.x, (i & 2) ? b.max.y : b.min.y, (i & 4) ? b.max.z : b.min.z});
  return convex_hull(c);
}

// True iff the part overlaps the open box with positive volume (beyond `slack`).
inline bool intrudes_box(const ConvexPart& part, const Aabb& box, double slack) {
  const Aabb shrunk{box.min + Vec3{slack, slack, slack}, box.max - Vec3{slack, slack, slack}};
  if (!shrunk.valid() || !part.aabb().interiors_overlap(shrunk)) return false;
  std::optional<ConvexPart> piece = part;
  for (const Plane& pl : box_planes(shrunk)) {
    piece = split_by_plane(*piece, pl).inside;
    if (!piece) return false;
  }
  return piece->volume() > 1e-12 * part.volume();
}

}  // namespace rcd
