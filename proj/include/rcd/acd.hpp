#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "rcd/clip.hpp"
#include "rcd/convex.hpp"
#include "rcd/parallel.hpp"
#include "rcd/spatial.hpp"

namespace rcd {

struct AcdParams {
  double tolerance = 0.05;
  std::size_t max_parts = 4096;
  std::size_t candidate_planes_per_axis = 8;
  double min_part_volume_fraction = 1e-6;
  std::size_t scoring_samples = 512;
  std::size_t acceptance_samples = 8192;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
};

struct ConcavityMeasure {
  double value = 0.0;
  Vec3 witness_point;
};

namespace detail {

// Depth of p below the hull surface (0 when on or outside it).
inline double depth_in_hull(const ConvexPart& hull, const Vec3& p) {
  double best = std::numeric_limits<double>::infinity();
  for (const Plane& pl : hull.planes()) best = std::min(best, -pl.signed_distance(p));
  return std::max(0.0, best);
}

// Hull facets with no coplanar mesh face: the "lids" spanning concave
// regions. A surface point's concavity is its distance to the nearest lid;
// points on the hull score zero. Without any lid (dimples in otherwise
// supported facets, closed cavities) the depth below the hull is used.
// Lids are a subset of the hull boundary, so the value never undercuts depth.
class HullLids {
 public:
  HullLids(const TriangleMesh& mesh, const ConvexPart& hull) : hull_(hull) {
    const double diag = std::max(1.0, hull.aabb().diagonal());
    on_hull_tol_ = 1e-9 * diag;
    const double plane_tol = 1e-9 * diag;
    const auto& planes = hull.planes();
    auto plane_of = [&](const Vec3& a, const Vec3& b, const Vec3& c) {
      const Vec3 n = cross(b - a, c - a);
      if (norm(n) == 0.0) return planes.size();
      const Vec3 u = normalized(n);
      for (std::size_t k = 0; k < planes.size(); ++k)
        if (dot(u, planes[k].normal) > 1.0 - 1e-9 && std::abs(planes[k].signed_distance(a)) <= plane_tol &&
            std::abs(planes[k].signed_distance(b)) <= plane_tol && std::abs(planes[k].signed_distance(c)) <= plane_tol)
          return k;
      return planes.size();
    };
    std::vector<bool> supported(planes.size(), false);
    for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
      const std::size_t k = plane_of(mesh.corner(f, 0), mesh.corner(f, 1), mesh.corner(f, 2));
      if (k < planes.size()) supported[k] = true;
    }
    const TriangleMesh& hm = hull.mesh();
    TriangleMesh lids;
    lids.vertices = hm.vertices;
    for (std::size_t f = 0; f < hm.faces.size(); ++f) {
      const std::size_t k = plane_of(hm.corner(f, 0), hm.corner(f, 1), hm.corner(f, 2));
      if (k < planes.size() && supported[k]) continue;
      lids.faces.push_back(hm.faces[f]);
    }
    has_lids_ = !lids.faces.empty();
    if (has_lids_) bvh_ = TriangleBvh(lids);
  }

  double at(const Vec3& p) const {
    const double depth = depth_in_hull(hull_, p);
    if (depth <= on_hull_tol_) return 0.0;
    return has_lids_ ? bvh_.distance(p) : depth;
  }

  bool has_lids() const { return has_lids_; }

 private:
  const ConvexPart& hull_;
  TriangleBvh bvh_;
  double on_hull_tol_ = 0.0;
  bool has_lids_ = false;
};

inline ConcavityMeasure concavity_against(const TriangleMesh& mesh, const ConvexPart& hull, std::size_t n,
                                          std::uint64_t seed) {
  const SurfaceSampleCloud cloud = sample_surface(mesh, n, seed);
  const HullLids lids(mesh, hull);
  ConcavityMeasure m;
  m.witness_point = cloud.points.empty() ? Vec3{} : cloud.points.front();
  for (const Vec3& p : cloud.points) {
    const double d = lids.at(p);
    if (d > m.value) {
      m.value = d;
      m.witness_point = p;
    }
  }
  // Lid detection is per facet, so a facet only partly covered by a coplanar
  // cap still hides the notch behind it. The hull-to-mesh gap catches that.
  if (mesh.faces.empty()) return m;
  const TriangleBvh bvh(mesh);
  for (const Vec3& q : sample_surface(hull.mesh(), n, seed ^ 0x5bd1e995ULL).points) {
    const TriangleBvh::Hit h = bvh.closest(q);
    if (h.distance > m.value) {
      m.value = h.distance;
      m.witness_point = h.point;
    }
  }
  return m;
}

}  // namespace detail

// Max over surface samples of the distance to the convex hull's lids, or of
// hull samples to the surface, whichever is larger.
inline ConcavityMeasure concavity(const TriangleMesh& mesh, std::size_t n_samples, std::uint64_t seed) {
  const ConvexPart hull = convex_hull(mesh.vertices);
  return detail::concavity_against(mesh, hull, n_samples, seed);
}

struct SplitCandidate {
  Plane plane;
  double score = std::numeric_limits<double>::infinity();
  bool valid = false;
};

namespace detail {

inline std::vector<Plane> candidate_planes(const Aabb& box, const Vec3& witness, std::size_t per_axis) {
  std::vector<Plane> planes;
  for (int axis = 0; axis < 3; ++axis) {
    const double lo = box.min[axis], hi = box.max[axis];
    std::vector<double> offsets;
    for (std::size_t k = 1; k <= per_axis; ++k) offsets.push_back(lo + (hi - lo) * double(k) / double(per_axis + 1));
    if (witness[axis] > lo && witness[axis] < hi) offsets.push_back(witness[axis]);
    std::sort(offsets.begin(), offsets.end());
    offsets.erase(std::unique(offsets.begin(), offsets.end()), offsets.end());
    for (double o : offsets) planes.push_back(Plane::axis_aligned(axis, +1, o));
  }
  return planes;
}

inline bool usable_child(const std::optional<TriangleMesh>& child, double min_volume) {
  return child && !child->faces.empty() && signed_volume(*child) > min_volume;
}

// Concavity of one side of a cut as the decomposition will keep it: disjoint
// components that are each large enough become separate pieces.
inline double side_concavity(const TriangleMesh& side, std::size_t n, std::uint64_t seed, double min_volume) {
  const std::vector<TriangleMesh> comps = connected_components(side);
  bool separable = comps.size() > 1;
  for (const auto& c : comps) separable = separable && signed_volume(c) > min_volume;
  if (!separable) return concavity(side, n, seed).value;
  double worst = 0.0;
  for (const auto& c : comps) worst = std::max(worst, concavity(c, n, seed).value);
  return worst;
}

// Scores every candidate: sum of child concavities at the reduced sample count.
inline std::vector<SplitCandidate> score_candidates(const TriangleMesh& mesh, const ConcavityMeasure& phi,
                                                    const AcdParams& params, double min_volume) {
  const std::vector<Plane> planes = candidate_planes(mesh_aabb(mesh), phi.witness_point, params.candidate_planes_per_axis);
  std::vector<SplitCandidate> scored(planes.size());
  parallel_for(planes.size(), params.threads, [&](std::size_t i) {
    scored[i].plane = planes[i];
    const MeshSplit split = split_mesh_by_plane(mesh, planes[i]);
    if (!usable_child(split.inside, min_volume) || !usable_child(split.outside, min_volume)) return;
    try {
      scored[i].score = side_concavity(*split.inside, params.scoring_samples, params.seed, min_volume) +
                        side_concavity(*split.outside, params.scoring_samples, params.seed, min_volume);
      scored[i].valid = true;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::DegenerateInput && e.code() != ErrorCode::EmptyMesh) throw;
    }
  });
  return scored;
}

inline std::optional<Plane> best_candidate(const std::vector<SplitCandidate>& scored) {
  // Candidates are already in (axis, offset) order; strict < keeps the first on ties.
  const SplitCandidate* best = nullptr;
  for (const auto& c : scored)
    if (c.valid && (!best || c.score < best->score)) best = &c;
  if (!best) return std::nullopt;
  return best->plane;
}

}  // namespace detail

// Best axis-aligned split plane for a mesh whose concavity exceeds tolerance.
inline Plane pick_split_plane(const TriangleMesh& mesh, const AcdParams& params) {
  const ConcavityMeasure phi = concavity(mesh, params.acceptance_samples, params.seed);
  const double min_volume = params.min_part_volume_fraction * mesh_volume(mesh);
  auto best = detail::best_candidate(detail::score_candidates(mesh, phi, params, min_volume));
  if (!best) throw Error(ErrorCode::NoValidPlane, "every candidate plane produces a degenerate piece");
  return *best;
}

struct AcdResult {
  std::vector<ConvexPart> parts;
  std::vector<TriangleMesh> sources;  // sub-mesh each part is the hull of
  std::vector<double> concavities;    // acceptance-sample concavity per part
  bool budget_exhausted = false;
  std::size_t unsplittable = 0;  // pieces above tolerance with no valid plane
};

// Recursively splits the worst piece until every piece is within tolerance or
// the parts budget is reached.
inline AcdResult convex_decompose(const TriangleMesh& mesh, const AcdParams& params) {
  if (!(params.tolerance > 0.0)) throw Error(ErrorCode::InvalidArgument, "decomposition tolerance must be positive");
  if (params.max_parts < 1) throw Error(ErrorCode::InvalidArgument, "max_parts must be at least 1");
  struct Piece {
    TriangleMesh mesh;
    ConvexPart hull;
    ConcavityMeasure phi;
    bool final = false;
  };
  auto make_piece = [&](TriangleMesh m) {
    ConvexPart hull = convex_hull(m.vertices);
    ConcavityMeasure phi = detail::concavity_against(m, hull, params.acceptance_samples, params.seed);
    return Piece{std::move(m), std::move(hull), phi, false};
  };
  const double min_volume = params.min_part_volume_fraction * mesh_volume(mesh);
  std::vector<Piece> pieces;
  pieces.push_back(make_piece(mesh));
  AcdResult result;

  while (true) {
    std::size_t worst = pieces.size();
    for (std::size_t i = 0; i < pieces.size(); ++i)
      if (!pieces[i].final && pieces[i].phi.value > params.tolerance &&
          (worst == pieces.size() || pieces[i].phi.value > pieces[worst].phi.value))
        worst = i;
    if (worst == pieces.size()) break;
    if (pieces.size() >= params.max_parts) {
      result.budget_exhausted = true;
      break;
    }
    Piece& w = pieces[worst];
    const auto plane = detail::best_candidate(detail::score_candidates(w.mesh, w.phi, params, min_volume));
    if (!plane) {
      w.final = true;
      ++result.unsplittable;
      continue;
    }
    MeshSplit split = split_mesh_by_plane(w.mesh, *plane);
    std::vector<TriangleMesh> children;
    for (auto* side : {&split.inside, &split.outside}) {
      std::vector<TriangleMesh> comps = connected_components(**side);
      bool separable = comps.size() > 1;
      for (const auto& c : comps) separable = separable && signed_volume(c) > min_volume;
      if (separable && pieces.size() + children.size() + comps.size() <= params.max_parts + 1) {
        for (auto& c : comps) children.push_back(std::move(c));
      } else {
        children.push_back(std::move(**side));
      }
    }
    std::vector<Piece> made(children.size());
    parallel_for(children.size(), params.threads,
                 [&](std::size_t i) { made[i] = make_piece(simplify_coplanar(children[i])); });
    pieces[worst] = std::move(made[0]);
    for (std::size_t i = 1; i < made.size(); ++i) pieces.push_back(std::move(made[i]));
  }
  for (Piece& p : pieces) {
    result.parts.push_back(std::move(p.hull));
    result.sources.push_back(std::move(p.mesh));
    result.concavities.push_back(p.phi.value);
  }
  return result;
}

}  // namespace rcd
