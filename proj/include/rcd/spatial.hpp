#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include <boost/geometry.hpp>
#include <boost/geometry/index/rtree.hpp>

#include "rcd/mesh.hpp"

namespace rcd {

// Closest-point queries against a triangle set (median-split AABB tree).
class TriangleBvh {
 public:
  TriangleBvh() = default;

  explicit TriangleBvh(const TriangleMesh& mesh) {
    add(mesh);
    build();
  }

  void add(const TriangleMesh& mesh) {
    for (std::size_t f = 0; f < mesh.faces.size(); ++f)
      tris_.push_back({mesh.corner(f, 0), mesh.corner(f, 1), mesh.corner(f, 2)});
  }

  void build() {
    nodes_.clear();
    order_.resize(tris_.size());
    std::iota(order_.begin(), order_.end(), 0u);
    centroids_.resize(tris_.size());
    for (std::size_t i = 0; i < tris_.size(); ++i) centroids_[i] = (tris_[i][0] + tris_[i][1] + tris_[i][2]) / 3.0;
    if (!tris_.empty()) build_node(0, static_cast<std::uint32_t>(tris_.size()));
  }

  bool empty() const { return tris_.empty(); }
  std::size_t size() const { return tris_.size(); }

  struct Hit {
    double distance = std::numeric_limits<double>::infinity();
    Vec3 point;
    std::size_t triangle = 0;
  };

  Hit closest(const Vec3& p) const {
    Hit best;
    if (nodes_.empty()) return best;
    double best2 = std::numeric_limits<double>::infinity();
    std::vector<std::uint32_t> stack{0};
    while (!stack.empty()) {
      const Node& n = nodes_[stack.back()];
      stack.pop_back();
      if (box_dist2(n.box, p) >= best2) continue;
      if (n.count > 0) {
        for (std::uint32_t k = n.first; k < n.first + n.count; ++k) {
          const auto& t = tris_[order_[k]];
          const Vec3 q = closest_point_on_triangle(p, t[0], t[1], t[2]);
          const double d2 = norm2(q - p);
          if (d2 < best2) {
            best2 = d2;
            best.point = q;
            best.triangle = order_[k];
          }
        }
        continue;
      }
      // Visit the nearer child first.
      const double dl = box_dist2(nodes_[n.left].box, p), dr = box_dist2(nodes_[n.right].box, p);
      if (dl < dr) {
        stack.push_back(n.right);
        stack.push_back(n.left);
      } else {
        stack.push_back(n.left);
        stack.push_back(n.right);
      }
    }
    best.distance = std::sqrt(best2);
    return best;
  }

  double distance(const Vec3& p) const { return closest(p).distance; }

 private:
  struct Node {
    Aabb box;
    std::uint32_t left = 0, right = 0;
    std::uint32_t first = 0, count = 0;
  };

  static double box_dist2(const Aabb& b, const Vec3& p) {
    double d2 = 0.0;
    for (int k = 0; k < 3; ++k) {
      const double v = std::max({b.min[k] - p[k], 0.0, p[k] - b.max[k]});
      d2 += v * v;
    }
    return d2;
  }

  std::uint32_t build_node(std::uint32_t first, std::uint32_t count) {
    const auto id = static_cast<std::uint32_t>(nodes_.size());
    nodes_.emplace_back();
    Aabb box, cbox;
    for (std::uint32_t k = first; k < first + count; ++k) {
      for (const Vec3& v : tris_[order_[k]]) box.expand(v);
      cbox.expand(centroids_[order_[k]]);
    }
    nodes_[id].box = box;
    if (count <= 4) {
      nodes_[id].first = first;
      nodes_[id].count = count;
      return id;
    }
    const Vec3 ext = cbox.max - cbox.min;
    const int axis = ext.x >= ext.y && ext.x >= ext.z ? 0 : (ext.y >= ext.z ? 1 : 2);
    const std::uint32_t mid = first + count / 2;
    std::nth_element(order_.begin() + first, order_.begin() + mid, order_.begin() + first + count,
                     [&](std::uint32_t a, std::uint32_t b) { return centroids_[a][axis] < centroids_[b][axis]; });
    const std::uint32_t l = build_node(first, mid - first);
    const std::uint32_t r = build_node(mid, first + count - mid);
    nodes_[id].left = l;
    nodes_[id].right = r;
    return id;
  }

  std::vector<std::array<Vec3, 3>> tris_;
  std::vector<Vec3> centroids_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
};

// Nearest-neighbour lookups over a fixed point set.
class PointIndex {
 public:
  explicit PointIndex(const std::vector<Vec3>& points) {
    std::vector<Value> values;
    values.reserve(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) values.emplace_back(BPoint(points[i].x, points[i].y, points[i].z), i);
    tree_ = Tree(values.begin(), values.end());  // packing constructor
  }

  // Index and distance of the nearest point.
  std::pair<std::size_t, double> nearest(const Vec3& p) const {
    namespace bgi = boost::geometry::index;
    std::vector<Value> hit;
    tree_.query(bgi::nearest(BPoint(p.x, p.y, p.z), 1), std::back_inserter(hit));
    if (hit.empty()) return {0, std::numeric_limits<double>::infinity()};
    const BPoint& q = hit[0].first;
    const Vec3 v{q.get<0>(), q.get<1>(), q.get<2>()};
    return {hit[0].second, rcd::distance(p, v)};
  }

  std::size_t size() const { return tree_.size(); }

 private:
  using BPoint = boost::geometry::model::point<double, 3, boost::geometry::cs::cartesian>;
  using Value = std::pair<BPoint, std::size_t>;
  using Tree = boost::geometry::index::rtree<Value, boost::geometry::index::quadratic<16>>;
  Tree tree_;
};

// Generalized winding number of a closed mesh around p (1 inside, 0 outside).
inline double winding_number(const TriangleMesh& mesh, const Vec3& p) {
  double total = 0.0;
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    const Vec3 a = mesh.corner(f, 0) - p, b = mesh.corner(f, 1) - p, c = mesh.corner(f, 2) - p;
    const double la = norm(a), lb = norm(b), lc = norm(c);
    const double num = dot(a, cross(b, c));
    const double den = la * lb * lc + dot(a, b) * lc + dot(b, c) * la + dot(c, a) * lb;
    total += 2.0 * std::atan2(num, den);
  }
  return total / (4.0 * 3.14159265358979323846);
}

}  // namespace rcd
