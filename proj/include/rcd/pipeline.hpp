#pragma once

#include <chrono>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "rcd/acd.hpp"
#include "rcd/boolean.hpp"
#include "rcd/merge.hpp"
#include "rcd/parallel.hpp"

namespace rcd {

inline const std::string kRemainderId = "remainder";

struct RegionBox {
  std::string id;
  Aabb box;
  double tolerance = 0.0;
};

struct PipelineParams {
  std::vector<RegionBox> regions;
  double remainder_tolerance = 0.05;
  double merge_tolerance = 0.0;
  AcdParams acd;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
};

struct TaggedPart {
  ConvexPart part;
  std::string provenance;  // region id or "remainder"
};

struct ExactMesh {
  std::string region;
  TriangleMesh mesh;
};

struct DecompositionStats {
  std::size_t part_count = 0;
  std::map<std::string, std::size_t> parts_per_region;
  double wall_seconds = 0.0;
};

struct Decomposition {
  std::vector<TaggedPart> convex_parts;
  std::vector<ExactMesh> exact_meshes;
  DecompositionStats stats;
  std::vector<std::string> warnings;
  // Volume of the sub-mesh each provenance decomposed (region clip or remainder).
  std::map<std::string, double> source_volumes;
  double input_volume = 0.0;

  std::vector<ConvexPart> parts() const {
    std::vector<ConvexPart> out;
    for (const auto& t : convex_parts) out.push_back(t.part);
    return out;
  }
};

struct RegionValidation {
  std::vector<std::pair<std::string, std::string>> overlapping;
  std::vector<std::string> empty;  // disjoint from the mesh bounds or zero volume
  std::vector<std::string> warnings;
};

// Checks region ids, tolerances and overlap. Overlapping interiors are a hard
// error; regions that miss the mesh are reported and later skipped.
inline RegionValidation validate_regions(const TriangleMesh& mesh, const std::vector<RegionBox>& regions) {
  RegionValidation r;
  const Aabb bounds = mesh_aabb(mesh);
  std::set<std::string> ids;
  for (const RegionBox& reg : regions) {
    if (reg.id.empty() || reg.id == kRemainderId || !ids.insert(reg.id).second)
      throw Error(ErrorCode::InvalidArgument, "region id '" + reg.id + "' is empty, reserved or duplicated");
    if (!(reg.tolerance >= 0.0) || !std::isfinite(reg.tolerance))
      throw Error(ErrorCode::InvalidArgument, "region '" + reg.id + "' has a negative or non-finite tolerance");
    if (!reg.box.valid()) throw Error(ErrorCode::InvalidArgument, "region '" + reg.id + "' has min > max");
    if (reg.box.volume() <= 0.0 || !reg.box.interiors_overlap(bounds)) {
      r.empty.push_back(reg.id);
      r.warnings.push_back("EmptyRegion: region '" + reg.id + "' does not overlap the mesh and is skipped");
    }
  }
  for (std::size_t i = 0; i < regions.size(); ++i)
    for (std::size_t j = i + 1; j < regions.size(); ++j)
      if (regions[i].box.volume() > 0.0 && regions[j].box.volume() > 0.0 &&
          regions[i].box.interiors_overlap(regions[j].box))
        r.overlapping.emplace_back(regions[i].id, regions[j].id);
  if (!r.overlapping.empty()) {
    std::string msg = "overlapping regions:";
    for (const auto& [a, b] : r.overlapping) msg += " (" + a + ", " + b + ")";
    throw Error(ErrorCode::OverlappingRegions, msg);
  }
  return r;
}

struct BoxResult {
  std::vector<ConvexPart> convex;
  std::vector<TriangleMesh> exact;
  double source_volume = 0.0;
  bool budget_exhausted = false;
};

// One region: clip the mesh to the box, then decompose it at the region's
// tolerance, or keep it verbatim when the tolerance is zero.
inline BoxResult process_box(const RegionBox& region, const TriangleMesh& mesh, AcdParams acd) {
  BoxResult r;
  std::optional<TriangleMesh> clipped = boolean_intersect_box(mesh, region.box);
  if (!clipped) return r;
  r.source_volume = mesh_volume(*clipped);
  if (region.tolerance == 0.0) {
    r.exact.push_back(std::move(*clipped));
    return r;
  }
  acd.tolerance = region.tolerance;
  AcdResult d = convex_decompose(*clipped, acd);
  r.convex = std::move(d.parts);
  r.budget_exhausted = d.budget_exhausted;
  return r;
}

// The remainder: decompose, then carve every box out of the parts while
// keeping them convex.
inline std::vector<ConvexPart> decomp_remainder(const TriangleMesh& mesh_rem, const std::vector<Aabb>& boxes,
                                                AcdParams acd, double tolerance, bool* budget_exhausted = nullptr,
                                                ConvexDifferenceStats* stats = nullptr) {
  acd.tolerance = tolerance;
  AcdResult d = convex_decompose(mesh_rem, acd);
  if (budget_exhausted) *budget_exhausted = d.budget_exhausted;
  std::vector<ConvexPart> parts = std::move(d.parts);
  for (const Aabb& box : boxes) parts = bool_difference_convex(parts, box, stats);
  return parts;
}

// Exclusion slack used by the invariant checks and the merge veto.
inline double exclusion_slack(const TriangleMesh& mesh) { return 1e-6 * mesh_aabb(mesh).diagonal(); }

// Runs the whole region-aware decomposition.
inline Decomposition interactive_decomposition(const TriangleMesh& mesh, const PipelineParams& params) {
  const auto start = std::chrono::steady_clock::now();
  if (!(params.remainder_tolerance > 0.0))
    throw Error(ErrorCode::InvalidArgument, "remainder tolerance must be positive");
  if (!(params.merge_tolerance >= 0.0)) throw Error(ErrorCode::InvalidArgument, "merge tolerance must be non-negative");
  const RegionValidation validation = validate_regions(mesh, params.regions);
  Decomposition out;
  out.warnings = validation.warnings;
  out.input_volume = mesh_volume(mesh);

  std::vector<RegionBox> active;
  for (const RegionBox& r : params.regions)
    if (std::find(validation.empty.begin(), validation.empty.end(), r.id) == validation.empty.end()) active.push_back(r);
  std::vector<Aabb> boxes;
  for (const RegionBox& r : active) boxes.push_back(r.box);

  AcdParams acd = params.acd;
  acd.seed = params.seed;
  // Tasks run concurrently; ACD inside each stays single-threaded unless
  // there is only one task.
  const std::size_t tasks = active.size() + 1;
  acd.threads = tasks == 1 ? params.threads : 1;

  const std::optional<TriangleMesh> mesh_rem = boolean_difference_boxes(mesh, boxes);
  std::vector<BoxResult> results(tasks);
  bool remainder_budget = false;
  parallel_for(tasks, params.threads, [&](std::size_t i) {
    if (i < active.size()) {
      results[i] = process_box(active[i], mesh, acd);
    } else if (mesh_rem) {
      results[i].source_volume = mesh_volume(*mesh_rem);
      results[i].convex = decomp_remainder(*mesh_rem, boxes, acd, params.remainder_tolerance, &remainder_budget);
    }
  });

  const double slack = exclusion_slack(mesh);
  for (std::size_t i = 0; i < tasks; ++i) {
    const bool is_region = i < active.size();
    const std::string id = is_region ? active[i].id : kRemainderId;
    out.source_volumes[id] = results[i].source_volume;
    if (is_region && active[i].tolerance > 0.0 && results[i].convex.empty())
      out.warnings.push_back("region '" + id + "' contains no geometry");
    if ((is_region && results[i].budget_exhausted) || (!is_region && remainder_budget))
      out.warnings.push_back("BudgetExhausted: '" + id + "' stopped at the parts budget above tolerance");
    for (TriangleMesh& m : results[i].exact) out.exact_meshes.push_back({id, std::move(m)});
    // Merge within one provenance only; a merge that would break region
    // exclusion is vetoed.
    std::vector<ConvexPart> merged;
    if (is_region) {
      const Aabb box = active[i].box;
      merged = merge_neighbors_if(std::move(results[i].convex), params.merge_tolerance,
                                  [&](const ConvexPart& m) { return fully_inside_box(m, box, slack); });
    } else {
      merged = merge_neighbors_if(std::move(results[i].convex), params.merge_tolerance, [&](const ConvexPart& m) {
        for (const Aabb& b : boxes)
          if (intrudes_box(m, b, slack)) return false;
        return true;
      });
    }
    out.stats.parts_per_region[id] = merged.size();
    for (ConvexPart& p : merged) out.convex_parts.push_back({std::move(p), id});
  }
  out.stats.part_count = out.convex_parts.size();
  out.stats.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

struct InvariantReport {
  bool partition = true;
  bool region_exclusion = true;
  double max_cross_overlap = 0.0;  // largest overlap volume between provenances
  double coverage_error = 0.0;     // relative |Σ source volumes − input volume|
  std::vector<std::string> violations;
};

// Literal checks of the two output constraints: provenance pieces are
// volume-disjoint and cover the input; no part straddles a region boundary.
inline InvariantReport check_invariants(const Decomposition& d, const std::vector<RegionBox>& regions,
                                        double exclusion_slack_length) {
  InvariantReport rep;
  std::map<std::string, Aabb> box_of;
  for (const RegionBox& r : regions) box_of[r.id] = r.box;

  double total = 0.0;
  for (const auto& [id, v] : d.source_volumes) total += v;
  rep.coverage_error = d.input_volume > 0.0 ? std::abs(total - d.input_volume) / d.input_volume : 0.0;
  if (rep.coverage_error > 1e-6) {
    rep.partition = false;
    rep.violations.push_back("coverage: source volumes differ from input by " + std::to_string(rep.coverage_error));
  }
  const auto& parts = d.convex_parts;
  for (std::size_t i = 0; i < parts.size(); ++i)
    for (std::size_t j = i + 1; j < parts.size(); ++j) {
      if (parts[i].provenance == parts[j].provenance) continue;
      rep.max_cross_overlap = std::max(rep.max_cross_overlap, intersection_volume(parts[i].part, parts[j].part));
    }
  // Exact meshes live inside their region box, so overlap with a foreign part
  // is bounded by that part's overlap with the box.
  for (const ExactMesh& e : d.exact_meshes) {
    const ConvexPart region_part = box_part(box_of[e.region]);
    for (const TaggedPart& p : parts)
      if (p.provenance != e.region)
        rep.max_cross_overlap = std::max(rep.max_cross_overlap, intersection_volume(p.part, region_part));
  }
  if (rep.max_cross_overlap >= 1e-6 * std::max(total, d.input_volume)) {
    rep.partition = false;
    rep.violations.push_back("partition: cross-provenance overlap " + std::to_string(rep.max_cross_overlap));
  }

  for (const TaggedPart& p : parts) {
    if (p.provenance != kRemainderId) {
      if (!fully_inside_box(p.part, box_of[p.provenance], exclusion_slack_length)) {
        rep.region_exclusion = false;
        rep.violations.push_back("exclusion: a part of region '" + p.provenance + "' leaves its box");
      }
      continue;
    }
    for (const RegionBox& r : regions)
      if (intrudes_box(p.part, r.box, exclusion_slack_length)) {
        rep.region_exclusion = false;
        rep.violations.push_back("exclusion: a remainder part enters region '" + r.id + "'");
      }
  }
  for (const ExactMesh& e : d.exact_meshes)
    for (const Vec3& v : e.mesh.vertices)
      if (!box_of[e.region].contains(v, exclusion_slack_length)) {
        rep.region_exclusion = false;
        rep.violations.push_back("exclusion: exact mesh of '" + e.region + "' leaves its box");
        break;
      }
  return rep;
}

}  // namespace rcd
