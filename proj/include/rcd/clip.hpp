#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <unordered_map>
#include <utility>
#include <vector>

#include "rcd/convex.hpp"
#include "rcd/error.hpp"
#include "rcd/geometry.hpp"
#include "rcd/mesh.hpp"
#include "rcd/triangulate.hpp"

namespace rcd {

// Vertices within this distance of a clip plane count as lying on it (and on
// the inside). Scaled by max(1, bounding diagonal).
inline constexpr double kOnPlaneTolerance = 1e-9;

enum class KeepSide { Inside, Outside };

namespace detail {

// Convex planar polygon carried through successive cuts. Coordinates are
// authoritative: identical points are welded exactly when converting back.
struct SoupPolygon {
  std::vector<Vec3> pts;
  bool cap = false;
};
using Soup = std::vector<SoupPolygon>;

inline Soup soup_from_mesh(const TriangleMesh& mesh) {
  Soup soup;
  soup.reserve(mesh.faces.size());
  for (std::size_t f = 0; f < mesh.faces.size(); ++f)
    soup.push_back({{mesh.corner(f, 0), mesh.corner(f, 1), mesh.corner(f, 2)}, false});
  return soup;
}

inline Vec3 newell_normal(const std::vector<Vec3>& pts) {
  Vec3 n{};
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const Vec3& a = pts[i];
    const Vec3& b = pts[(i + 1) % pts.size()];
    n.x += (a.y - b.y) * (a.z + b.z);
    n.y += (a.z - b.z) * (a.x + b.x);
    n.z += (a.x - b.x) * (a.y + b.y);
  }
  return n;
}

enum class Side { Inside, Outside, Both };

struct PolygonSplit {
  Side side = Side::Inside;
  SoupPolygon inside;
  SoupPolygon outside;
};

// Splits one polygon. Vertices within `tol` are on the plane (snapped onto it
// for axis-aligned planes). A polygon lying in the plane goes to the side its
// solid is on: inside when its outward normal agrees with the plane normal.
inline PolygonSplit split_polygon(const SoupPolygon& poly, const Plane& plane, double tol) {
  const std::size_t n = poly.pts.size();
  std::vector<double> s(n);
  std::vector<Vec3> p = poly.pts;
  bool any_in = false, any_out = false;
  for (std::size_t i = 0; i < n; ++i) {
    s[i] = plane.signed_distance(p[i]);
    if (std::abs(s[i]) < tol) {
      s[i] = 0.0;
      if (plane.axis >= 0) p[i][plane.axis] = plane.axis_value();
    }
    any_in |= s[i] < 0.0;
    any_out |= s[i] > 0.0;
  }
  PolygonSplit r;
  if (!any_in && !any_out) {
    r.side = dot(newell_normal(p), plane.normal) > 0.0 ? Side::Inside : Side::Outside;
    (r.side == Side::Inside ? r.inside : r.outside) = {std::move(p), poly.cap};
    return r;
  }
  if (!any_out) {
    r.side = Side::Inside;
    r.inside = {std::move(p), poly.cap};
    return r;
  }
  if (!any_in) {
    r.side = Side::Outside;
    r.outside = {std::move(p), poly.cap};
    return r;
  }
  r.side = Side::Both;
  r.inside.cap = r.outside.cap = poly.cap;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = (i + 1) % n;
    if (s[i] <= 0.0) r.inside.pts.push_back(p[i]);
    if (s[i] >= 0.0) r.outside.pts.push_back(p[i]);
    if ((s[i] < 0.0 && s[j] > 0.0) || (s[i] > 0.0 && s[j] < 0.0)) {
      const Vec3 x = plane_cut_point(p[i], s[i], p[j], s[j], plane);
      r.inside.pts.push_back(x);
      r.outside.pts.push_back(x);
    }
  }
  return r;
}

inline double soup_tolerance(const Soup& soup) {
  Aabb box;
  for (const auto& poly : soup)
    for (const Vec3& v : poly.pts) box.expand(v);
  return kOnPlaneTolerance * std::max(1.0, box.diagonal());
}

struct SoupSplit {
  Soup inside;
  Soup outside;
  bool crossed = false;  // some polygon was cut or assigned to each side
};

inline SoupSplit split_soup(const Soup& soup, const Plane& plane, double tol) {
  SoupSplit r;
  for (const auto& poly : soup) {
    PolygonSplit ps = split_polygon(poly, plane, tol);
    if (ps.side != Side::Outside) r.inside.push_back(std::move(ps.inside));
    if (ps.side != Side::Inside) r.outside.push_back(std::move(ps.outside));
  }
  r.crossed = !r.inside.empty() && !r.outside.empty();
  return r;
}

// Chains directed edges into closed loops. At pinch vertices the walk takes the
// first outgoing edge clockwise from the way back, which keeps loops simple.
inline std::vector<std::vector<std::size_t>> trace_loops(std::multimap<std::uint32_t, std::uint32_t> out_edges,
                                                         const std::vector<Vec2>& pts2) {
  std::vector<std::vector<std::size_t>> loops;
  while (!out_edges.empty()) {
    auto start = out_edges.begin();
    const std::uint32_t first = start->first;
    std::uint32_t prev = first, cur = start->second;
    out_edges.erase(start);
    std::vector<std::size_t> loop{first};
    std::size_t guard = 0;
    while (cur != first) {
      loop.push_back(cur);
      auto range = out_edges.equal_range(cur);
      if (range.first == range.second) throw Error(ErrorCode::CapFailure, "section loop does not close");
      // At pinch vertices take the first outgoing edge clockwise from the way back.
      auto pick = range.first;
      if (std::next(range.first) != range.second) {
        const Vec2 back{pts2[prev].x - pts2[cur].x, pts2[prev].y - pts2[cur].y};
        double best = std::numeric_limits<double>::infinity();
        for (auto it = range.first; it != range.second; ++it) {
          const Vec2 d{pts2[it->second].x - pts2[cur].x, pts2[it->second].y - pts2[cur].y};
          double ang = std::atan2(back.x * d.y - back.y * d.x, back.x * d.x + back.y * d.y);
          // atan2 is counter-clockwise positive; convert to clockwise in (0, 2pi].
          ang = -ang;
          if (ang <= 0.0) ang += 2.0 * 3.14159265358979323846;
          if (ang < best) {
            best = ang;
            pick = it;
          }
        }
      }
      prev = cur;
      cur = pick->second;
      out_edges.erase(pick);
      if (++guard > 10000000) throw Error(ErrorCode::CapFailure, "section loop tracing did not terminate");
    }
    if (loop.size() >= 3) loops.push_back(std::move(loop));
  }
  return loops;
}

// Closes the open boundary left by a cut. Every unmatched directed edge must lie
// on the plane; the loops they form are triangulated (ear clipping with holes)
// into cap polygons whose outward normal is `cap_normal`.
inline void cap_soup(Soup& soup, const Plane& plane, const Vec3& cap_normal, double tol) {
  std::unordered_map<Vec3, std::uint32_t, Vec3Hash> ids;
  std::vector<Vec3> verts;
  auto id_of = [&](const Vec3& v) {
    auto [it, inserted] = ids.try_emplace(v, static_cast<std::uint32_t>(verts.size()));
    if (inserted) verts.push_back(v);
    return it->second;
  };
  std::map<std::pair<std::uint32_t, std::uint32_t>, int> directed;
  for (const auto& poly : soup) {
    const std::size_t n = poly.pts.size();
    for (std::size_t i = 0; i < n; ++i) {
      const auto a = id_of(poly.pts[i]), b = id_of(poly.pts[(i + 1) % n]);
      if (a != b) ++directed[{a, b}];
    }
  }
  // Cap edges run opposite to the unmatched boundary edges.
  std::multimap<std::uint32_t, std::uint32_t> out_edges;
  std::size_t edge_count = 0;
  for (const auto& [e, count] : directed) {
    auto it = directed.find({e.second, e.first});
    const int excess = count - (it == directed.end() ? 0 : it->second);
    for (int k = 0; k < excess; ++k) {
      if (std::abs(plane.signed_distance(verts[e.first])) > 4 * tol ||
          std::abs(plane.signed_distance(verts[e.second])) > 4 * tol)
        throw Error(ErrorCode::CapFailure, "open boundary edge off the clip plane (input not watertight?)");
      out_edges.emplace(e.second, e.first);
      ++edge_count;
    }
  }
  if (edge_count == 0) return;

  // 2D frame with e1 x e2 = cap_normal, so cap boundaries run counter-clockwise.
  const Vec3 nrm = normalized(cap_normal);
  const Vec3 helper = std::abs(nrm.x) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
  const Vec3 e1 = normalized(cross(helper, nrm));
  const Vec3 e2 = cross(nrm, e1);
  std::vector<Vec2> pts2(verts.size());
  for (std::size_t i = 0; i < verts.size(); ++i) pts2[i] = {dot(verts[i], e1), dot(verts[i], e2)};

  const auto loops = trace_loops(out_edges, pts2);
  for (const auto& tri : triangulate_loops(pts2, loops)) {
    SoupPolygon cap{{verts[tri[0]], verts[tri[1]], verts[tri[2]]}, true};
    soup.push_back(std::move(cap));
  }
}

// Fan-triangulates (polygons are convex) and welds bit-identical vertices.
inline TriangleMesh soup_to_mesh(const Soup& soup) {
  TriangleMesh mesh;
  std::unordered_map<Vec3, std::uint32_t, Vec3Hash> ids;
  auto id_of = [&](const Vec3& v) {
    auto [it, inserted] = ids.try_emplace(v, static_cast<std::uint32_t>(mesh.vertices.size()));
    if (inserted) mesh.vertices.push_back(v);
    return it->second;
  };
  for (const auto& poly : soup) {
    std::vector<std::uint32_t> idx;
    idx.reserve(poly.pts.size());
    for (const Vec3& v : poly.pts) {
      const auto id = id_of(v);
      if (idx.empty() || idx.back() != id) idx.push_back(id);
    }
    while (idx.size() > 1 && idx.front() == idx.back()) idx.pop_back();
    for (std::size_t k = 1; k + 1 < idx.size(); ++k) mesh.faces.push_back({idx[0], idx[k], idx[k + 1]});
  }
  return mesh;
}

}  // namespace detail

// Merges edge-connected coplanar faces and re-triangulates each planar patch
// without the vertices that no longer carry shape: those interior to a patch
// and those in the middle of a straight crease between exactly two patches.
// Repeated cuts otherwise leave long runs of collinear vertices on every cap.
// Kept vertices keep their exact coordinates, so the result stays watertight.
inline TriangleMesh simplify_coplanar(const TriangleMesh& mesh) {
  const std::size_t nf = mesh.faces.size(), nv = mesh.vertices.size();
  if (nf == 0) return mesh;
  Aabb box;
  for (const Vec3& v : mesh.vertices) box.expand(v);
  const double tol = kOnPlaneTolerance * std::max(1.0, box.diagonal());

  std::vector<Vec3> normal(nf);
  for (std::size_t f = 0; f < nf; ++f) {
    const Vec3 n = cross(mesh.corner(f, 1) - mesh.corner(f, 0), mesh.corner(f, 2) - mesh.corner(f, 0));
    normal[f] = norm(n) > 0.0 ? n / norm(n) : Vec3{};
  }
  auto coplanar = [&](std::size_t f, std::size_t g) {
    if (norm(normal[f]) == 0.0 || norm(normal[g]) == 0.0 || dot(normal[f], normal[g]) < 1.0 - 1e-12) return false;
    const Vec3& o = mesh.corner(f, 0);
    for (int k = 0; k < 3; ++k)
      if (std::abs(dot(mesh.corner(g, k) - o, normal[f])) > tol) return false;
    return true;
  };

  std::map<std::pair<std::uint32_t, std::uint32_t>, std::size_t> edge_face;
  for (std::size_t f = 0; f < nf; ++f)
    for (int k = 0; k < 3; ++k) edge_face[{mesh.faces[f][k], mesh.faces[f][(k + 1) % 3]}] = f;

  std::vector<std::size_t> group(nf);
  for (std::size_t f = 0; f < nf; ++f) group[f] = f;
  auto find = [&](std::size_t f) {
    while (group[f] != f) f = group[f] = group[group[f]];
    return f;
  };
  for (const auto& [e, f] : edge_face) {
    auto it = edge_face.find({e.second, e.first});
    if (it == edge_face.end() || !coplanar(f, it->second)) continue;
    const std::size_t a = find(f), b = find(it->second);
    if (a != b) group[std::max(a, b)] = std::min(a, b);
  }
  for (std::size_t f = 0; f < nf; ++f) group[f] = find(f);

  // Patch boundary edges, and per vertex the patches it touches.
  std::vector<std::vector<std::size_t>> touching(nv);
  for (std::size_t f = 0; f < nf; ++f)
    for (std::uint32_t v : mesh.faces[f]) {
      auto& t = touching[v];
      if (std::find(t.begin(), t.end(), group[f]) == t.end()) t.push_back(group[f]);
    }
  std::vector<std::vector<std::uint32_t>> crease_nbrs(nv);
  std::map<std::size_t, std::multimap<std::uint32_t, std::uint32_t>> boundary;
  for (const auto& [e, f] : edge_face) {
    auto it = edge_face.find({e.second, e.first});
    if (it != edge_face.end() && group[it->second] == group[f]) continue;
    boundary[group[f]].emplace(e.first, e.second);
    crease_nbrs[e.first].push_back(e.second);
  }
  std::vector<bool> drop(nv, false);
  for (std::size_t v = 0; v < nv; ++v) {
    if (touching[v].size() == 1) {
      drop[v] = crease_nbrs[v].empty();
    } else if (touching[v].size() == 2 && crease_nbrs[v].size() == 2 && crease_nbrs[v][0] != crease_nbrs[v][1]) {
      const Vec3& a = mesh.vertices[crease_nbrs[v][0]];
      const Vec3& b = mesh.vertices[crease_nbrs[v][1]];
      const Vec3& p = mesh.vertices[v];
      const Vec3 ab = b - a;
      const double len = norm(ab);
      drop[v] = len > 0.0 && norm(cross(p - a, ab)) / len <= tol && dot(p - a, ab) > 0.0 && dot(p - b, ab) < 0.0;
    }
  }

  std::map<std::size_t, std::vector<std::size_t>> faces_of;
  for (std::size_t f = 0; f < nf; ++f) faces_of[group[f]].push_back(f);

  // Re-triangulates one patch without the dropped vertices. Returns nothing
  // when ear clipping folds over (inverted triangles or lost area).
  auto retriangulate = [&](std::size_t g) -> std::optional<std::vector<Face>> {
    const Vec3 nrm = normal[g];
    const Vec3 helper = std::abs(nrm.x) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
    const Vec3 e1 = normalized(cross(helper, nrm));
    const Vec3 e2 = cross(nrm, e1);
    std::vector<Vec2> pts2(nv);
    for (const auto& [a, b] : boundary[g]) {
      pts2[a] = {dot(mesh.vertices[a], e1), dot(mesh.vertices[a], e2)};
      pts2[b] = {dot(mesh.vertices[b], e1), dot(mesh.vertices[b], e2)};
    }
    std::vector<std::vector<std::size_t>> loops;
    double loop_area = 0.0;
    for (auto& loop : detail::trace_loops(boundary[g], pts2)) {
      std::erase_if(loop, [&](std::size_t v) { return drop[v]; });
      if (loop.size() < 3) continue;
      std::vector<Vec2> ring;
      for (std::size_t v : loop) ring.push_back(pts2[v]);
      loop_area += signed_area(ring);
      loops.push_back(std::move(loop));
    }
    std::vector<Face> tris;
    double tri_area = 0.0;
    try {
      for (const auto& t : triangulate_loops(pts2, loops)) {
        // A loop through a pinch vertex can yield (v, v, x); its two real
        // edges cancel, so leaving it out keeps the surface closed.
        if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2]) continue;
        const double a = 0.5 * cross2(pts2[t[0]], pts2[t[1]], pts2[t[2]]);
        if (a < -tol * tol) return std::nullopt;
        tri_area += a;
        tris.push_back({static_cast<std::uint32_t>(t[0]), static_cast<std::uint32_t>(t[1]), static_cast<std::uint32_t>(t[2])});
      }
    } catch (const Error&) {
      return std::nullopt;
    }
    if (std::abs(tri_area - loop_area) > 1e-9 * std::max(1.0, std::abs(loop_area))) return std::nullopt;
    return tris;
  };

  // A patch that fails keeps all its vertices; its neighbours then see fewer
  // droppable crease vertices, so everything is redone until it settles.
  std::map<std::size_t, std::vector<Face>> merged;
  bool settled = false;
  for (std::size_t round = 0; round < 8 && !settled; ++round) {
    merged.clear();
    settled = true;
    for (const auto& [g, faces] : faces_of) {
      bool changed = false;
      for (std::size_t f : faces)
        for (std::uint32_t v : mesh.faces[f]) changed = changed || drop[v];
      if (!changed) continue;
      if (auto tris = retriangulate(g)) {
        merged[g] = std::move(*tris);
      } else {
        for (std::size_t f : faces)
          for (std::uint32_t v : mesh.faces[f]) drop[v] = false;
        settled = false;
      }
    }
  }
  if (!settled) return mesh;

  TriangleMesh out;
  std::vector<std::uint32_t> remap(nv, std::numeric_limits<std::uint32_t>::max());
  auto keep = [&](std::uint32_t v) {
    if (remap[v] == std::numeric_limits<std::uint32_t>::max()) {
      remap[v] = static_cast<std::uint32_t>(out.vertices.size());
      out.vertices.push_back(mesh.vertices[v]);
    }
    return remap[v];
  };
  for (const auto& [g, faces] : faces_of) {
    auto it = merged.find(g);
    if (it == merged.end()) {
      for (std::size_t f : faces) out.faces.push_back({keep(mesh.faces[f][0]), keep(mesh.faces[f][1]), keep(mesh.faces[f][2])});
    } else {
      for (const Face& t : it->second) out.faces.push_back({keep(t[0]), keep(t[1]), keep(t[2])});
    }
  }
  // Merging is an optimisation; never trade a closed surface for it.
  return validate(out).watertight ? out : mesh;
}

// Cuts a watertight mesh by a plane and keeps one side, capping the section with
// a triangulation of its (possibly several, possibly non-convex) loops. Returns
// nullopt when nothing is kept, and the input unchanged when nothing is cut.
inline std::optional<TriangleMesh> clip_mesh_by_plane(const TriangleMesh& mesh, const Plane& plane, KeepSide keep) {
  const detail::Soup soup = detail::soup_from_mesh(mesh);
  const double tol = detail::soup_tolerance(soup);
  detail::SoupSplit split = detail::split_soup(soup, plane, tol);
  detail::Soup& kept = keep == KeepSide::Inside ? split.inside : split.outside;
  if (kept.empty()) return std::nullopt;
  if (!split.crossed) return mesh;
  detail::cap_soup(kept, plane, keep == KeepSide::Inside ? plane.normal : -plane.normal, tol);
  return detail::soup_to_mesh(kept);
}

struct MeshSplit {
  std::optional<TriangleMesh> inside;
  std::optional<TriangleMesh> outside;
};

// Both sides of a plane cut, each capped.
inline MeshSplit split_mesh_by_plane(const TriangleMesh& mesh, const Plane& plane) {
  const detail::Soup soup = detail::soup_from_mesh(mesh);
  const double tol = detail::soup_tolerance(soup);
  detail::SoupSplit split = detail::split_soup(soup, plane, tol);
  MeshSplit r;
  if (!split.crossed) {
    (split.inside.empty() ? r.outside : r.inside) = mesh;
    return r;
  }
  detail::cap_soup(split.inside, plane, plane.normal, tol);
  detail::cap_soup(split.outside, plane, -plane.normal, tol);
  r.inside = detail::soup_to_mesh(split.inside);
  r.outside = detail::soup_to_mesh(split.outside);
  return r;
}

}  // namespace rcd
