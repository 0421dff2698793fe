#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "rcd/parallel.hpp"
#include "rcd/pipeline.hpp"
#include "rcd/spatial.hpp"

namespace rcd {

inline constexpr std::size_t kDefaultErrorSamples = 20000;

struct RegionError {
  std::string id;
  double d_a_to_o = 0.0;
  double d_o_to_a = 0.0;
  double region_error = 0.0;
};

struct RegionErrorReport {
  std::vector<RegionError> regions;
  double overall = 0.0;
};

inline double overall_error(const std::vector<RegionError>& regions) {
  if (regions.empty()) throw Error(ErrorCode::EmptyInput, "no regions to average");
  double sum = 0.0;
  for (const RegionError& r : regions) sum += r.region_error;
  return sum / double(regions.size());
}

// The approximation as one triangle soup with an owner per face, plus the
// solids needed to reject samples on internal faces.
class ApproxSurface {
 public:
  ApproxSurface(std::vector<ConvexPart> parts, std::vector<TriangleMesh> exact,
                const std::vector<std::string>& part_tags = {}, const std::vector<std::string>& exact_tags = {},
                double slack = 1e-9)
      : parts_(std::move(parts)), exact_(std::move(exact)), slack_(slack) {
    for (std::size_t i = 0; i < parts_.size(); ++i) append(parts_[i].mesh(), i < part_tags.size() ? part_tags[i] : "");
    for (std::size_t i = 0; i < exact_.size(); ++i) append(exact_[i], i < exact_tags.size() ? exact_tags[i] : "");
    for (const TriangleMesh& m : exact_) exact_boxes_.push_back(mesh_aabb(m));
    bvh_.add(all_);
    bvh_.build();
  }

  static ApproxSurface from(const Decomposition& d, double slack) {
    std::vector<ConvexPart> parts;
    std::vector<std::string> ptags, etags;
    std::vector<TriangleMesh> exact;
    for (const auto& t : d.convex_parts) {
      parts.push_back(t.part);
      ptags.push_back(t.provenance);
    }
    for (const auto& e : d.exact_meshes) {
      exact.push_back(e.mesh);
      etags.push_back(e.region);
    }
    return ApproxSurface(std::move(parts), std::move(exact), ptags, etags, slack);
  }

  const TriangleMesh& mesh() const { return all_; }
  const TriangleBvh& bvh() const { return bvh_; }
  std::size_t owner(std::size_t face) const { return owner_[face]; }
  const std::string& tag(std::size_t face) const { return tags_[owner_[face]]; }

  // True when p, sampled on owner `o`, lies inside or on another solid.
  bool internal(const Vec3& p, std::size_t o) const {
    for (std::size_t k = 0; k < parts_.size(); ++k)
      if (k != o && parts_[k].aabb().contains(p, slack_) && contains_point(parts_[k], p, slack_)) return true;
    for (std::size_t k = 0; k < exact_.size(); ++k)
      if (parts_.size() + k != o && exact_boxes_[k].contains(p, slack_) && winding_number(exact_[k], p) > 0.25)
        return true;
    return false;
  }

  // Up to n samples over the given faces, internal ones dropped.
  SurfaceSampleCloud visible_samples(std::span<const std::uint32_t> faces, std::size_t n, std::uint64_t seed) const {
    SurfaceSampleCloud cloud = sample_faces(all_, faces, n, seed);
    SurfaceSampleCloud out;
    for (std::size_t i = 0; i < cloud.points.size(); ++i)
      if (!internal(cloud.points[i], owner_[cloud.source_face[i]])) {
        out.points.push_back(cloud.points[i]);
        out.source_face.push_back(cloud.source_face[i]);
      }
    return out;
  }

 private:
  void append(const TriangleMesh& m, const std::string& tag) {
    const auto base = static_cast<std::uint32_t>(all_.vertices.size());
    all_.vertices.insert(all_.vertices.end(), m.vertices.begin(), m.vertices.end());
    for (const Face& f : m.faces) {
      all_.faces.push_back({f[0] + base, f[1] + base, f[2] + base});
      owner_.push_back(tags_.size());
    }
    tags_.push_back(tag);
  }

  std::vector<ConvexPart> parts_;
  std::vector<TriangleMesh> exact_;
  std::vector<Aabb> exact_boxes_;
  TriangleMesh all_;
  std::vector<std::size_t> owner_;
  std::vector<std::string> tags_;
  TriangleBvh bvh_;
  double slack_;
};

namespace detail {

inline std::vector<std::uint32_t> faces_touching(const TriangleMesh& m, const Aabb& box) {
  std::vector<std::uint32_t> out;
  for (std::size_t f = 0; f < m.faces.size(); ++f) {
    Aabb fb;
    for (int k = 0; k < 3; ++k) fb.expand(m.corner(f, k));
    if (fb.overlaps(box)) out.push_back(static_cast<std::uint32_t>(f));
  }
  return out;
}

inline double internal_slack(const TriangleMesh& original) {
  return 1e-9 * std::max(1.0, mesh_aabb(original).diagonal());
}

}  // namespace detail

// Directional Hausdorff terms inside one region. Approximation samples count
// for the region when their part belongs to it or they lie strictly inside
// the box; samples inside or on another part are internal and skipped.
inline RegionError region_hausdorff(const TriangleMesh& original, const TriangleBvh& original_bvh,
                                    const ApproxSurface& approx, const RegionBox& region, std::size_t n,
                                    std::uint64_t seed) {
  RegionError r;
  r.id = region.id;
  const double margin = detail::internal_slack(original);

  const auto ofaces = detail::faces_touching(original, region.box);
  const auto afaces = detail::faces_touching(approx.mesh(), region.box);
  if (ofaces.empty() || afaces.empty())
    throw Error(ErrorCode::NoSamplesInRegion, "region '" + region.id + "' contains no surface");

  const SurfaceSampleCloud os = sample_faces(original, ofaces, n, seed);
  std::size_t o_count = 0;
  for (const Vec3& p : os.points) {
    if (!region.box.contains(p)) continue;
    ++o_count;
    r.d_o_to_a = std::max(r.d_o_to_a, approx.bvh().distance(p));
  }
  const SurfaceSampleCloud as = approx.visible_samples(afaces, n, seed ^ 0x9e3779b97f4a7c15ULL);
  std::size_t a_count = 0;
  for (std::size_t i = 0; i < as.points.size(); ++i) {
    const Vec3& p = as.points[i];
    if (!region.box.contains(p)) continue;
    if (approx.tag(as.source_face[i]) != region.id && !region.box.strictly_contains(p, margin)) continue;
    ++a_count;
    r.d_a_to_o = std::max(r.d_a_to_o, original_bvh.distance(p));
  }
  if (o_count == 0 || a_count == 0)
    throw Error(ErrorCode::NoSamplesInRegion, "region '" + region.id + "' produced no samples");
  r.region_error = std::max(r.d_a_to_o, r.d_o_to_a);
  return r;
}

inline RegionErrorReport evaluate_regions(const TriangleMesh& original, const Decomposition& d,
                                          const std::vector<RegionBox>& regions, std::size_t n, std::uint64_t seed,
                                          std::size_t threads = 1) {
  const TriangleBvh obvh(original);
  const ApproxSurface approx = ApproxSurface::from(d, detail::internal_slack(original));
  RegionErrorReport rep;
  rep.regions.resize(regions.size());
  parallel_for(regions.size(), threads,
               [&](std::size_t i) { rep.regions[i] = region_hausdorff(original, obvh, approx, regions[i], n, seed); });
  rep.overall = overall_error(rep.regions);
  return rep;
}

enum class Colormap { WhiteRed, Grayscale };

inline Colormap colormap_from_string(const std::string& s) {
  if (s == "white-red" || s == "whitered") return Colormap::WhiteRed;
  if (s == "grayscale" || s == "gray") return Colormap::Grayscale;
  throw Error(ErrorCode::InvalidArgument, "unknown colormap '" + s + "'");
}

inline std::array<std::uint8_t, 3> apply_colormap(Colormap map, double t) {
  const auto c = static_cast<std::uint8_t>(std::lround(255.0 * (1.0 - t)));
  if (map == Colormap::Grayscale) return {c, c, c};
  return {255, c, c};
}

inline double normalize_clamp(double d, double alpha, double beta) {
  if (!(beta > alpha)) return d > alpha ? 1.0 : 0.0;
  return std::clamp((d - alpha) / (beta - alpha), 0.0, 1.0);
}

struct ErrorSampleSet {
  std::vector<Vec3> points;
  std::vector<double> distances;
  std::vector<double> normalized;
  std::vector<std::array<std::uint8_t, 3>> colors;
  double alpha = 0.0;
  double beta = 0.0;
};

struct ErrorSampleOptions {
  std::size_t n = kDefaultErrorSamples;
  Colormap colormap = Colormap::WhiteRed;
  double alpha = 0.0;
  std::optional<double> beta;  // max observed distance when unset
  std::vector<Aabb> filter_boxes;
  bool on_approx = false;
  std::uint64_t seed = 0;
};

namespace detail {

// n visible samples of the approximation, topping up after rejections.
inline std::vector<Vec3> sample_approximation(const ApproxSurface& approx, std::size_t n, std::uint64_t seed) {
  std::vector<std::uint32_t> all(approx.mesh().faces.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<std::uint32_t>(i);
  std::vector<Vec3> out;
  for (int round = 0; round < 16 && out.size() < n; ++round) {
    const SurfaceSampleCloud c = approx.visible_samples(all, n - out.size(), seed + 0x51ed27ULL * round);
    out.insert(out.end(), c.points.begin(), c.points.end());
  }
  return out;
}

}  // namespace detail

// Per-point error for visualization: one surface is sampled, the other is
// represented by a point index over n samples of it.
inline ErrorSampleSet error_samples(const TriangleMesh& original, const std::vector<ConvexPart>& parts,
                                    const std::vector<TriangleMesh>& exact, const ErrorSampleOptions& opt) {
  if (original.faces.empty() || (parts.empty() && exact.empty()))
    throw Error(ErrorCode::EmptyMesh, "error samples need both an original and an approximation");
  const ApproxSurface approx(parts, exact, {}, {}, detail::internal_slack(original));
  ErrorSampleSet out;
  std::vector<Vec3> reference;
  if (opt.on_approx) {
    out.points = detail::sample_approximation(approx, opt.n, opt.seed);
    reference = sample_surface(original, opt.n, opt.seed + 1).points;
  } else {
    out.points = sample_surface(original, opt.n, opt.seed).points;
    reference = detail::sample_approximation(approx, opt.n, opt.seed + 1);
  }
  if (reference.empty() || out.points.empty()) throw Error(ErrorCode::EmptyMesh, "no visible samples");
  const PointIndex index(reference);
  out.distances.reserve(out.points.size());
  for (const Vec3& p : out.points) out.distances.push_back(index.nearest(p).second);
  if (!opt.on_approx && !opt.filter_boxes.empty()) {
    std::vector<Vec3> pts;
    std::vector<double> ds;
    for (std::size_t i = 0; i < out.points.size(); ++i)
      for (const Aabb& b : opt.filter_boxes)
        if (b.contains(out.points[i])) {
          pts.push_back(out.points[i]);
          ds.push_back(out.distances[i]);
          break;
        }
    out.points = std::move(pts);
    out.distances = std::move(ds);
  }
  out.alpha = opt.alpha;
  if (opt.beta) {
    out.beta = *opt.beta;
  } else {
    out.beta = opt.alpha;
    for (double d : out.distances) out.beta = std::max(out.beta, d);
  }
  for (double d : out.distances) {
    const double t = normalize_clamp(d, out.alpha, out.beta);
    out.normalized.push_back(t);
    out.colors.push_back(apply_colormap(opt.colormap, t));
  }
  return out;
}

struct ObjectiveReport {
  double lambda_err = 1.0;
  double lambda_sim = 0.0;
  std::vector<std::string> ids;
  std::vector<double> phi;
  std::vector<double> delta;
  double xi = 0.0;
  double tau = 0.0;
  double weighted_total = 0.0;
};

// ξ = Σ (φ_r − δ_r)² with φ_r the measured region error and δ_r its target;
// the total is λ_err·ξ + λ_sim·τ.
inline ObjectiveReport objective_report(const RegionErrorReport& errors, const std::vector<RegionBox>& regions,
                                        double lambda_err, double lambda_sim, double tau) {
  if (!(lambda_err >= 0.0) || !(lambda_sim >= 0.0))
    throw Error(ErrorCode::InvalidArgument, "objective weights must be non-negative");
  ObjectiveReport o;
  o.lambda_err = lambda_err;
  o.lambda_sim = lambda_sim;
  o.tau = tau;
  for (const RegionError& e : errors.regions) {
    const auto it = std::find_if(regions.begin(), regions.end(), [&](const RegionBox& r) { return r.id == e.id; });
    if (it == regions.end()) throw Error(ErrorCode::InvalidArgument, "no target for region '" + e.id + "'");
    o.ids.push_back(e.id);
    o.phi.push_back(e.region_error);
    o.delta.push_back(it->tolerance);
    o.xi += (e.region_error - it->tolerance) * (e.region_error - it->tolerance);
  }
  o.weighted_total = lambda_err * o.xi + lambda_sim * tau;
  return o;
}

}  // namespace rcd
