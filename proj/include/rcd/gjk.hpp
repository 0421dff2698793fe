#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <span>

#include "rcd/convex.hpp"
#include "rcd/error.hpp"
#include "rcd/geometry.hpp"

namespace rcd {

inline constexpr int kGjkMaxIterations = 64;
inline constexpr double kGjkTolerance = 1e-9;

namespace detail {

struct SimplexPoint {
  Vec3 w;  // support point of the Minkowski difference A - B
};

// Exact closest point to the origin on the convex hull of up to four points,
// by enumerating sub-simplices (Johnson's distance sub-algorithm, brute force).
// Shrinks `simplex` to the supporting subset.
inline Vec3 closest_on_simplex(std::array<Vec3, 4>& simplex, int& size, bool& contains_origin) {
  contains_origin = false;
  double best = std::numeric_limits<double>::infinity();
  Vec3 best_point{};
  int best_mask = 1;
  for (int mask = 1; mask < (1 << size); ++mask) {
    std::array<int, 4> idx{};
    int k = 0;
    for (int i = 0; i < size; ++i)
      if (mask & (1 << i)) idx[static_cast<std::size_t>(k++)] = i;
    const Vec3 p0 = simplex[static_cast<std::size_t>(idx[0])];
    Vec3 point = p0;
    if (k > 1) {
      std::array<Vec3, 3> e{};
      for (int i = 1; i < k; ++i) e[static_cast<std::size_t>(i - 1)] = simplex[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])] - p0;
      const int m = k - 1;
      double g[3][4] = {};
      for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j) g[i][j] = dot(e[static_cast<std::size_t>(i)], e[static_cast<std::size_t>(j)]);
        g[i][3] = -dot(p0, e[static_cast<std::size_t>(i)]);
      }
      // Gaussian elimination with partial pivoting.
      double scale = 0.0;
      for (int i = 0; i < m; ++i) scale = std::max(scale, std::abs(g[i][i]));
      bool singular = false;
      for (int c = 0; c < m && !singular; ++c) {
        int piv = c;
        for (int r = c + 1; r < m; ++r)
          if (std::abs(g[r][c]) > std::abs(g[piv][c])) piv = r;
        if (std::abs(g[piv][c]) <= 1e-14 * scale) {
          singular = true;
          break;
        }
        if (piv != c)
          for (int j = 0; j < 4; ++j) std::swap(g[c][j], g[piv][j]);
        for (int r = 0; r < m; ++r) {
          if (r == c) continue;
          const double f = g[r][c] / g[c][c];
          for (int j = c; j < 4; ++j) g[r][j] -= f * g[c][j];
        }
      }
      if (singular) continue;
      double lambda0 = 1.0;
      bool interior = true;
      for (int i = 0; i < m; ++i) {
        const double l = g[i][3] / g[i][i];
        if (!(l > 0.0)) interior = false;
        lambda0 -= l;
        point += e[static_cast<std::size_t>(i)] * l;
      }
      if (!interior || !(lambda0 > 0.0)) continue;
      if (k == 4) {
        contains_origin = true;
        return Vec3{};
      }
    }
    const double d = norm2(point);
    if (d < best) {
      best = d;
      best_point = point;
      best_mask = mask;
    }
  }
  std::array<Vec3, 4> reduced{};
  int n = 0;
  for (int i = 0; i < size; ++i)
    if (best_mask & (1 << i)) reduced[static_cast<std::size_t>(n++)] = simplex[static_cast<std::size_t>(i)];
  simplex = reduced;
  size = n;
  return best_point;
}

inline Vec3 support(std::span<const Vec3> pts, const Pose& pose, const Vec3& world_dir) {
  const Vec3 local = pose.apply_inverse_dir(world_dir);
  std::size_t best = 0;
  double best_dot = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double d = dot(pts[i], local);
    if (d > best_dot) {
      best_dot = d;
      best = i;
    }
  }
  return pose.apply(pts[best]);
}

}  // namespace detail

struct GjkResult {
  double distance = 0.0;
  int iterations = 0;
};

// Euclidean separation of two convex point sets under rigid poses; 0 when they
// intersect. Throws NoConvergence when the duality gap stays open after the
// iteration cap (callers retry with a perturbed pose).
inline GjkResult gjk_distance_points(std::span<const Vec3> a, const Pose& pose_a, std::span<const Vec3> b,
                                     const Pose& pose_b) {
  if (a.empty() || b.empty()) throw Error(ErrorCode::InvalidArgument, "GJK needs non-empty point sets");
  auto support = [&](const Vec3& d) { return detail::support(a, pose_a, d) - detail::support(b, pose_b, -d); };

  std::array<Vec3, 4> simplex{};
  int size = 0;
  Vec3 v = pose_a.apply(a[0]) - pose_b.apply(b[0]);
  if (norm2(v) == 0.0) v = {1.0, 0.0, 0.0};
  v = support(-v);
  simplex[0] = v;
  size = 1;
  GjkResult result;
  for (int iter = 1; iter <= kGjkMaxIterations; ++iter) {
    result.iterations = iter;
    const double vv = norm2(v);
    if (vv <= kGjkTolerance * kGjkTolerance) {
      result.distance = 0.0;
      return result;
    }
    const Vec3 w = support(-v);
    // Duality gap: |v| - (v.w)/|v| bounds the error of |v| as the distance.
    if (vv - dot(v, w) <= kGjkTolerance * std::sqrt(vv) || vv - dot(v, w) <= 1e-14 * vv) {
      result.distance = std::sqrt(vv);
      return result;
    }
    bool duplicate = false;
    for (int i = 0; i < size; ++i)
      if (simplex[static_cast<std::size_t>(i)] == w) duplicate = true;
    if (duplicate) {
      result.distance = std::sqrt(vv);
      return result;
    }
    simplex[static_cast<std::size_t>(size++)] = w;
    bool inside = false;
    const Vec3 next = detail::closest_on_simplex(simplex, size, inside);
    if (inside) {
      result.distance = 0.0;
      return result;
    }
    if (norm2(next) >= vv) {
      // No progress: numerical floor reached.
      result.distance = std::sqrt(std::min(vv, norm2(next)));
      return result;
    }
    v = next;
  }
  const Vec3 w = support(-v);
  const double vv = norm2(v);
  if (vv - dot(v, w) <= 1e-6 * std::sqrt(vv)) {
    result.distance = std::sqrt(vv);
    return result;
  }
  throw Error(ErrorCode::NoConvergence, "GJK did not converge in " + std::to_string(kGjkMaxIterations) + " iterations");
}

inline double gjk_distance(const ConvexPart& a, const Pose& pose_a, const ConvexPart& b, const Pose& pose_b) {
  return gjk_distance_points(a.vertices(), pose_a, b.vertices(), pose_b).distance;
}

}  // namespace rcd
