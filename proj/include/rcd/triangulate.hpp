#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "rcd/error.hpp"

namespace rcd {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Vec2& o) const { return x == o.x && y == o.y; }
};

inline double cross2(const Vec2& o, const Vec2& a, const Vec2& b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

inline double signed_area(std::span<const Vec2> loop) {
  double a = 0.0;
  for (std::size_t i = 0, n = loop.size(); i < n; ++i) {
    const Vec2& p = loop[i];
    const Vec2& q = loop[(i + 1) % n];
    a += p.x * q.y - q.x * p.y;
  }
  return 0.5 * a;
}

// Winding-number containment; points on the boundary give an arbitrary answer.
inline bool point_in_loop(const Vec2& p, std::span<const Vec2> loop) {
  int winding = 0;
  for (std::size_t i = 0, n = loop.size(); i < n; ++i) {
    const Vec2& a = loop[i];
    const Vec2& b = loop[(i + 1) % n];
    if (a.y <= p.y) {
      if (b.y > p.y && cross2(a, b, p) > 0) ++winding;
    } else if (b.y <= p.y && cross2(a, b, p) < 0) {
      --winding;
    }
  }
  return winding != 0;
}

namespace detail {

inline bool in_triangle(const Vec2& p, const Vec2& a, const Vec2& b, const Vec2& c, double eps) {
  return cross2(a, b, p) >= -eps && cross2(b, c, p) >= -eps && cross2(c, a, p) >= -eps;
}

// Splices `hole` (clockwise) into `poly` (counter-clockwise) through a mutually
// visible vertex pair (Eberly, "Triangulation by Ear Clipping", section 3).
inline void bridge_hole(std::vector<std::size_t>& poly, const std::vector<std::size_t>& hole,
                        std::span<const Vec2> pts) {
  std::size_t mi = 0;
  for (std::size_t i = 1; i < hole.size(); ++i) {
    const Vec2& a = pts[hole[i]];
    const Vec2& b = pts[hole[mi]];
    if (a.x > b.x || (a.x == b.x && a.y < b.y)) mi = i;
  }
  const Vec2 m = pts[hole[mi]];

  // Closest edge hit by the ray from m towards +x.
  double best_x = std::numeric_limits<double>::infinity();
  std::size_t best_edge = poly.size();
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2& a = pts[poly[i]];
    const Vec2& b = pts[poly[(i + 1) % poly.size()]];
    if ((a.y > m.y) == (b.y > m.y) && !(a.y == m.y || b.y == m.y)) continue;
    if (a.y == b.y) {
      if (a.y != m.y) continue;
      const double x = std::min(a.x, b.x);
      if (x >= m.x && x < best_x) {
        best_x = x;
        best_edge = i;
      }
      continue;
    }
    if (std::min(a.y, b.y) > m.y || std::max(a.y, b.y) < m.y) continue;
    const double t = (m.y - a.y) / (b.y - a.y);
    const double x = a.x + t * (b.x - a.x);
    if (x >= m.x && x < best_x) {
      best_x = x;
      best_edge = i;
    }
  }
  if (best_edge == poly.size()) throw Error(ErrorCode::CapFailure, "hole is not enclosed by its outer loop");

  const std::size_t ea = best_edge, eb = (best_edge + 1) % poly.size();
  std::size_t pick = pts[poly[ea]].x > pts[poly[eb]].x ? ea : eb;
  const Vec2 hit{best_x, m.y};
  if (!(pts[poly[pick]] == hit)) {
    // Reflex vertices inside (m, hit, p) may block visibility; take the one with
    // the smallest angle to the ray, ties to the nearest.
    const Vec2 p = pts[poly[pick]];
    double best_angle = std::numeric_limits<double>::infinity();
    double best_dist = std::numeric_limits<double>::infinity();
    const Vec2 tri_b = p.y < m.y ? p : hit;
    const Vec2 tri_c = p.y < m.y ? hit : p;
    for (std::size_t i = 0; i < poly.size(); ++i) {
      const Vec2& prev = pts[poly[(i + poly.size() - 1) % poly.size()]];
      const Vec2& cur = pts[poly[i]];
      const Vec2& next = pts[poly[(i + 1) % poly.size()]];
      if (i == pick || cur.x < m.x) continue;
      const bool reflex = cross2(prev, cur, next) <= 0.0;
      if (!reflex) continue;
      if (!in_triangle(cur, m, tri_b, tri_c, 0.0)) continue;
      const double dx = cur.x - m.x, dy = cur.y - m.y;
      const double angle = std::abs(std::atan2(dy, dx));
      const double dist = dx * dx + dy * dy;
      if (angle < best_angle || (angle == best_angle && dist < best_dist)) {
        best_angle = angle;
        best_dist = dist;
        pick = i;
      }
    }
  }

  // Earlier bridges may have duplicated the chosen vertex. Splice at the copy
  // whose interior wedge contains the direction to m, or the wedges overlap.
  {
    const Vec2 p = pts[poly[pick]];
    const std::size_t n = poly.size();
    for (std::size_t i = 0; i < n; ++i) {
      if (!(pts[poly[i]] == p)) continue;
      const Vec2& prev = pts[poly[(i + n - 1) % n]];
      const Vec2& next = pts[poly[(i + 1) % n]];
      const bool left_out = cross2(p, next, m) > 0.0, left_in = cross2(prev, p, m) > 0.0;
      const bool inside = cross2(prev, p, next) > 0.0 ? left_out && left_in : left_out || left_in;
      if (inside) {
        pick = i;
        break;
      }
    }
  }

  std::vector<std::size_t> merged;
  merged.reserve(poly.size() + hole.size() + 2);
  merged.insert(merged.end(), poly.begin(), poly.begin() + static_cast<std::ptrdiff_t>(pick) + 1);
  for (std::size_t k = 0; k <= hole.size(); ++k) merged.push_back(hole[(mi + k) % hole.size()]);
  merged.insert(merged.end(), poly.begin() + static_cast<std::ptrdiff_t>(pick), poly.end());
  poly = std::move(merged);
}

}  // namespace detail

// Ear-clipping triangulation of a counter-clockwise outer loop with clockwise
// holes. Returns index triples into the concatenation [outer, holes...] with
// counter-clockwise winding. Collinear boundary vertices are kept so the result
// conforms to neighbouring geometry.
inline std::vector<std::array<std::size_t, 3>> triangulate_polygon(std::span<const Vec2> pts,
                                                                   std::vector<std::size_t> outer,
                                                                   std::vector<std::vector<std::size_t>> holes) {
  std::vector<std::array<std::size_t, 3>> tris;
  if (outer.size() < 3) return tris;

  auto loop_area = [&](const std::vector<std::size_t>& loop) {
    std::vector<Vec2> tmp;
    tmp.reserve(loop.size());
    for (auto i : loop) tmp.push_back(pts[i]);
    return signed_area(tmp);
  };
  if (loop_area(outer) < 0) std::reverse(outer.begin(), outer.end());
  for (auto& h : holes)
    if (loop_area(h) > 0) std::reverse(h.begin(), h.end());

  std::sort(holes.begin(), holes.end(), [&](const auto& a, const auto& b) {
    auto maxx = [&](const auto& l) {
      double m = -std::numeric_limits<double>::infinity();
      for (auto i : l) m = std::max(m, pts[i].x);
      return m;
    };
    return maxx(a) > maxx(b);
  });
  std::vector<std::size_t> poly = std::move(outer);
  for (const auto& h : holes)
    if (h.size() >= 3) detail::bridge_hole(poly, h, pts);

  double scale = 0.0;
  for (auto i : poly) scale = std::max({scale, std::abs(pts[i].x), std::abs(pts[i].y)});
  const double eps = 1e-14 * std::max(scale * scale, 1e-300);

  auto is_ear = [&](std::size_t ip, std::size_t ic, std::size_t in, double min_cross) {
    const Vec2 &a = pts[poly[ip]], &b = pts[poly[ic]], &c = pts[poly[in]];
    if (cross2(a, b, c) <= min_cross) return false;
    for (std::size_t k = 0; k < poly.size(); ++k) {
      if (k == ip || k == ic || k == in) continue;
      const Vec2& p = pts[poly[k]];
      if (p == a || p == b || p == c) continue;
      if (detail::in_triangle(p, a, b, c, -eps)) return false;
      // Points on the ear's closing diagonal would be left dangling.
      if (std::abs(cross2(c, a, p)) <= eps && (p.x - a.x) * (p.x - c.x) + (p.y - a.y) * (p.y - c.y) < 0)
        return false;
    }
    return true;
  };

  std::size_t guard = 0;
  while (poly.size() > 3) {
    const std::size_t n = poly.size();
    bool clipped = false;
    for (double min_cross : {eps, -eps}) {
      for (std::size_t i = 0; i < n && !clipped; ++i) {
        const std::size_t ip = (i + n - 1) % n, in = (i + 1) % n;
        if (!is_ear(ip, i, in, min_cross)) continue;
        tris.push_back({poly[ip], poly[i], poly[in]});
        poly.erase(poly.begin() + static_cast<std::ptrdiff_t>(i));
        clipped = true;
      }
      if (clipped) break;
    }
    if (!clipped) {
      // No valid ear: degenerate input. Clip the most convex corner to make progress.
      std::size_t best = 0;
      double best_cross = -std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < n; ++i) {
        const double c = cross2(pts[poly[(i + n - 1) % n]], pts[poly[i]], pts[poly[(i + 1) % n]]);
        if (c > best_cross) {
          best_cross = c;
          best = i;
        }
      }
      tris.push_back({poly[(best + n - 1) % n], poly[best], poly[(best + 1) % n]});
      poly.erase(poly.begin() + static_cast<std::ptrdiff_t>(best));
    }
    if (++guard > 1000000) throw Error(ErrorCode::CapFailure, "ear clipping did not terminate");
  }
  tris.push_back({poly[0], poly[1], poly[2]});
  return tris;
}

// Groups loops into outer boundaries (counter-clockwise) and holes (clockwise),
// assigning each hole to the smallest enclosing outer loop, then triangulates.
inline std::vector<std::array<std::size_t, 3>> triangulate_loops(std::span<const Vec2> pts,
                                                                 const std::vector<std::vector<std::size_t>>& loops) {
  struct Info {
    double area;
    std::vector<Vec2> coords;
  };
  std::vector<Info> info;
  info.reserve(loops.size());
  for (const auto& l : loops) {
    Info in;
    for (auto i : l) in.coords.push_back(pts[i]);
    in.area = signed_area(in.coords);
    info.push_back(std::move(in));
  }
  std::vector<std::size_t> outers;
  for (std::size_t i = 0; i < loops.size(); ++i)
    if (info[i].area > 0) outers.push_back(i);
  std::vector<std::vector<std::size_t>> holes_of(loops.size());
  for (std::size_t i = 0; i < loops.size(); ++i) {
    if (info[i].area >= 0) continue;
    std::size_t owner = loops.size();
    double owner_area = std::numeric_limits<double>::infinity();
    for (std::size_t o : outers) {
      int votes = 0, total = 0;
      for (const Vec2& p : info[i].coords) {
        ++total;
        if (point_in_loop(p, info[o].coords)) ++votes;
      }
      if (2 * votes > total && info[o].area < owner_area) {
        owner = o;
        owner_area = info[o].area;
      }
    }
    if (owner == loops.size()) {
      if (std::abs(info[i].area) == 0.0) continue;
      throw Error(ErrorCode::CapFailure, "section loop is a hole without an enclosing boundary");
    }
    holes_of[owner].push_back(i);
  }
  std::vector<std::array<std::size_t, 3>> tris;
  for (std::size_t o : outers) {
    std::vector<std::vector<std::size_t>> holes;
    for (std::size_t h : holes_of[o]) holes.push_back(loops[h]);
    auto t = triangulate_polygon(pts, loops[o], std::move(holes));
    tris.insert(tris.end(), t.begin(), t.end());
  }
  return tris;
}

}  // namespace rcd
