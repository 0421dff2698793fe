#pragma once

#include <optional>
#include <span>
#include <vector>

#include "rcd/clip.hpp"
#include "rcd/merge.hpp"

namespace rcd {

using BoxPlaneSet = std::array<Plane, 6>;

namespace detail {

// The mesh ∩ box, as a soup: surface pieces inside every plane plus cap
// polygons on the box faces. Empty when the box misses the solid.
inline Soup intersect_soup(const Soup& surface, const BoxPlaneSet& planes, double tol) {
  Soup inside = surface;
  for (const Plane& pl : planes) {
    SoupSplit split = split_soup(inside, pl, tol);
    inside = std::move(split.inside);
    if (inside.empty()) return {};
    if (split.crossed) cap_soup(inside, pl, pl.normal, tol);
  }
  return inside;
}

// Every surface polygon cut by all six planes. Pieces inside the whole box are
// dropped; the rest are returned. Cuts here replay exactly the cuts made while
// building the intersection soup, so the two conform along the section.
inline Soup surface_outside_box(const Soup& surface, const BoxPlaneSet& planes, double tol) {
  Soup out;
  for (const SoupPolygon& poly : surface) {
    // (piece, still inside every plane so far)
    std::vector<std::pair<SoupPolygon, bool>> pieces{{poly, true}};
    for (const Plane& pl : planes) {
      std::vector<std::pair<SoupPolygon, bool>> next;
      for (auto& [piece, in_all] : pieces) {
        PolygonSplit ps = split_polygon(piece, pl, tol);
        if (ps.side != Side::Outside) next.emplace_back(std::move(ps.inside), in_all);
        if (ps.side != Side::Inside) next.emplace_back(std::move(ps.outside), false);
      }
      pieces = std::move(next);
    }
    for (auto& [piece, in_all] : pieces)
      if (!in_all) out.push_back(std::move(piece));
  }
  return out;
}

inline std::optional<TriangleMesh> difference_one_box(const TriangleMesh& mesh, const Aabb& box) {
  const Aabb bounds = mesh_aabb(mesh);
  if (!bounds.interiors_overlap(box)) return mesh;
  if (box.contains(bounds.min) && box.contains(bounds.max)) return std::nullopt;
  const Soup surface = soup_from_mesh(mesh);
  const double tol = soup_tolerance(surface);
  const BoxPlaneSet planes = box_planes(box);
  const Soup inside = intersect_soup(surface, planes, tol);
  if (inside.empty()) return mesh;
  Soup result = surface_outside_box(surface, planes, tol);
  if (result.empty()) return std::nullopt;
  for (const SoupPolygon& poly : inside) {
    if (!poly.cap) continue;
    SoupPolygon flipped{{poly.pts.rbegin(), poly.pts.rend()}, true};
    result.push_back(std::move(flipped));
  }
  return soup_to_mesh(result);
}

}  // namespace detail

inline BoxPlaneSet box_plane_set(const Aabb& box) { return box_planes(box); }

// Mesh ∩ box via the six box planes, keeping inside. Absent when empty.
inline std::optional<TriangleMesh> boolean_intersect_box(const TriangleMesh& mesh, const Aabb& box) {
  const Aabb bounds = mesh_aabb(mesh);
  if (!bounds.interiors_overlap(box)) return std::nullopt;
  if (box.contains(bounds.min) && box.contains(bounds.max)) return mesh;
  const detail::Soup surface = detail::soup_from_mesh(mesh);
  const detail::Soup inside = detail::intersect_soup(surface, box_planes(box), detail::soup_tolerance(surface));
  if (inside.empty()) return std::nullopt;
  return detail::soup_to_mesh(inside);
}

// Mesh minus the interiors of all boxes, one box at a time.
inline std::optional<TriangleMesh> boolean_difference_boxes(const TriangleMesh& mesh, std::span<const Aabb> boxes) {
  std::optional<TriangleMesh> current = mesh;
  for (const Aabb& box : boxes) {
    current = detail::difference_one_box(*current, box);
    if (!current) return std::nullopt;
  }
  return current;
}

struct ConvexDifferenceStats {
  std::size_t parts_split = 0;
  std::size_t parts_removed = 0;
};

// Removes a box from a set of convex parts while keeping every output convex:
// each intruding part is cut by the six box planes (−x, +x, −y, +y, −z, +z),
// the piece inside the box is dropped and the outside pieces are re-merged
// where that is exact. Parts that do not intrude pass through untouched.
inline std::vector<ConvexPart> bool_difference_convex(const std::vector<ConvexPart>& parts, const Aabb& box,
                                                      ConvexDifferenceStats* stats = nullptr) {
  std::vector<ConvexPart> out;
  const BoxPlaneSet planes = box_planes(box);
  for (const ConvexPart& part : parts) {
    if (!intrudes_box(part, box, 0.0)) {
      out.push_back(part);
      continue;
    }
    std::vector<ConvexPart> pieces;
    std::optional<ConvexPart> rest = part;
    for (const Plane& pl : planes) {
      SplitResult s = split_by_plane(*rest, pl);
      if (s.outside) pieces.push_back(std::move(*s.outside));
      rest = std::move(s.inside);
      if (!rest) break;
    }
    if (stats) {
      ++stats->parts_split;
      if (pieces.empty()) ++stats->parts_removed;
    }
    for (ConvexPart& p : merge_neighbors(std::move(pieces), 0.0)) out.push_back(std::move(p));
  }
  return out;
}

}  // namespace rcd
