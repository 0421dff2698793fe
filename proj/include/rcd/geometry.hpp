#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <functional>
#include <limits>
#include <ostream>

namespace rcd {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  constexpr Vec3() = default;
  constexpr Vec3(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}

  constexpr double operator[](int axis) const { return axis == 0 ? x : (axis == 1 ? y : z); }
  constexpr double& operator[](int axis) { return axis == 0 ? x : (axis == 1 ? y : z); }

  constexpr Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  constexpr Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  constexpr Vec3 operator-() const { return {-x, -y, -z}; }
  constexpr Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  constexpr Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
  constexpr Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
  constexpr Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
  constexpr Vec3& operator*=(double s) { x *= s; y *= s; z *= s; return *this; }

  constexpr bool operator==(const Vec3& o) const { return x == o.x && y == o.y && z == o.z; }
  constexpr bool operator!=(const Vec3& o) const { return !(*this == o); }
};

constexpr Vec3 operator*(double s, const Vec3& v) { return v * s; }

constexpr double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
constexpr Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(const Vec3& v) { return std::sqrt(dot(v, v)); }
constexpr double norm2(const Vec3& v) { return dot(v, v); }
inline Vec3 normalized(const Vec3& v) {
  const double n = norm(v);
  return n > 0.0 ? v / n : Vec3{};
}
inline double distance(const Vec3& a, const Vec3& b) { return norm(a - b); }
constexpr Vec3 cwise_min(const Vec3& a, const Vec3& b) {
  return {std::min(a.x, b.x), std::min(a.y, b.y), std::min(a.z, b.z)};
}
constexpr Vec3 cwise_max(const Vec3& a, const Vec3& b) {
  return {std::max(a.x, b.x), std::max(a.y, b.y), std::max(a.z, b.z)};
}

// Strict lexicographic order; used wherever a canonical orientation is needed.
constexpr bool lex_less(const Vec3& a, const Vec3& b) {
  if (a.x != b.x) return a.x < b.x;
  if (a.y != b.y) return a.y < b.y;
  return a.z < b.z;
}

inline std::ostream& operator<<(std::ostream& os, const Vec3& v) {
  return os << '(' << v.x << ", " << v.y << ", " << v.z << ')';
}

// Bitwise hash: two vectors hash equal iff their coordinates are bit-identical
// (with -0.0 folded onto 0.0).
struct Vec3Hash {
  std::size_t operator()(const Vec3& v) const noexcept {
    auto bits = [](double d) {
      if (d == 0.0) d = 0.0;
      std::uint64_t u;
      std::memcpy(&u, &d, sizeof u);
      return u;
    };
    std::uint64_t h = 1469598103934665603ull;
    for (std::uint64_t b : {bits(v.x), bits(v.y), bits(v.z)}) {
      h ^= b + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    }
    return static_cast<std::size_t>(h);
  }
};

struct Aabb {
  Vec3 min{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
           std::numeric_limits<double>::infinity()};
  Vec3 max{-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
           -std::numeric_limits<double>::infinity()};

  constexpr Aabb() = default;
  constexpr Aabb(const Vec3& lo, const Vec3& hi) : min(lo), max(hi) {}

  bool valid() const { return min.x <= max.x && min.y <= max.y && min.z <= max.z; }
  void expand(const Vec3& p) {
    min = cwise_min(min, p);
    max = cwise_max(max, p);
  }
  void expand(const Aabb& b) {
    min = cwise_min(min, b.min);
    max = cwise_max(max, b.max);
  }
  Aabb inflated(double r) const { return {min - Vec3{r, r, r}, max + Vec3{r, r, r}}; }
  Vec3 center() const { return (min + max) * 0.5; }
  Vec3 extent() const { return max - min; }
  double diagonal() const { return valid() ? norm(max - min) : 0.0; }
  double volume() const {
    if (!valid()) return 0.0;
    const Vec3 e = extent();
    return e.x * e.y * e.z;
  }
  bool contains(const Vec3& p, double slack = 0.0) const {
    return p.x >= min.x - slack && p.x <= max.x + slack && p.y >= min.y - slack &&
           p.y <= max.y + slack && p.z >= min.z - slack && p.z <= max.z + slack;
  }
  // Point lies inside the box shrunk by `margin` on every side.
  bool strictly_contains(const Vec3& p, double margin) const {
    return p.x > min.x + margin && p.x < max.x - margin && p.y > min.y + margin &&
           p.y < max.y - margin && p.z > min.z + margin && p.z < max.z - margin;
  }
  bool overlaps(const Aabb& o, double slack = 0.0) const {
    return min.x <= o.max.x + slack && o.min.x <= max.x + slack && min.y <= o.max.y + slack &&
           o.min.y <= max.y + slack && min.z <= o.max.z + slack && o.min.z <= max.z + slack;
  }
  // Open interiors intersect with positive volume (beyond `slack`).
  bool interiors_overlap(const Aabb& o, double slack = 0.0) const {
    return min.x < o.max.x - slack && o.min.x < max.x - slack && min.y < o.max.y - slack &&
           o.min.y < max.y - slack && min.z < o.max.z - slack && o.min.z < max.z - slack;
  }
  bool operator==(const Aabb& o) const { return min == o.min && max == o.max; }
};

// Halfspace convention: x is inside iff dot(normal, x) <= offset.
struct Plane {
  Vec3 normal{0.0, 0.0, 1.0};
  double offset = 0.0;
  // Index of the coordinate axis for axis-aligned planes, -1 otherwise. Splits
  // against axis-aligned planes snap that coordinate exactly onto the plane.
  int axis = -1;

  static Plane from_normal(const Vec3& n, double d) { return {normalized(n), d, -1}; }
  static Plane through(const Vec3& n, const Vec3& point) {
    const Vec3 u = normalized(n);
    return {u, dot(u, point), -1};
  }
  // Plane with normal +e_axis (sign=+1) or -e_axis (sign=-1) through coordinate value.
  static Plane axis_aligned(int axis_index, double sign, double value) {
    Vec3 n{};
    n[axis_index] = sign > 0 ? 1.0 : -1.0;
    return {n, sign > 0 ? value : -value, axis_index};
  }

  double signed_distance(const Vec3& p) const { return dot(normal, p) - offset; }
  Plane flipped() const { return {-normal, -offset, axis}; }
  // Coordinate value of an axis-aligned plane.
  double axis_value() const { return normal[axis] > 0 ? offset : -offset; }
};

// The six planes bounding a box, outward normals, in the fixed order
// -x, +x, -y, +y, -z, +z. The intersection of their inside halfspaces is the box.
inline std::array<Plane, 6> box_planes(const Aabb& box) {
  return {Plane::axis_aligned(0, -1, box.min.x), Plane::axis_aligned(0, +1, box.max.x),
          Plane::axis_aligned(1, -1, box.min.y), Plane::axis_aligned(1, +1, box.max.y),
          Plane::axis_aligned(2, -1, box.min.z), Plane::axis_aligned(2, +1, box.max.z)};
}

struct Mat3 {
  std::array<double, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};

  static Mat3 identity() { return {}; }
  // Rotation by `angle` radians about unit `axis` (Rodrigues).
  static Mat3 rotation(const Vec3& axis, double angle) {
    const Vec3 u = normalized(axis);
    const double c = std::cos(angle), s = std::sin(angle), t = 1.0 - c;
    Mat3 r;
    r.m = {t * u.x * u.x + c,       t * u.x * u.y - s * u.z, t * u.x * u.z + s * u.y,
           t * u.x * u.y + s * u.z, t * u.y * u.y + c,       t * u.y * u.z - s * u.x,
           t * u.x * u.z - s * u.y, t * u.y * u.z + s * u.x, t * u.z * u.z + c};
    return r;
  }
  double operator()(int r, int c) const { return m[static_cast<std::size_t>(r * 3 + c)]; }
  Vec3 operator*(const Vec3& v) const {
    return {m[0] * v.x + m[1] * v.y + m[2] * v.z, m[3] * v.x + m[4] * v.y + m[5] * v.z,
            m[6] * v.x + m[7] * v.y + m[8] * v.z};
  }
  Mat3 operator*(const Mat3& o) const {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        double s = 0.0;
        for (int k = 0; k < 3; ++k) s += (*this)(i, k) * o(k, j);
        r.m[static_cast<std::size_t>(i * 3 + j)] = s;
      }
    return r;
  }
  Mat3 transposed() const {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) r.m[static_cast<std::size_t>(i * 3 + j)] = (*this)(j, i);
    return r;
  }
};

// Rigid transform x -> rotation * x + translation.
struct Pose {
  Mat3 rotation;
  Vec3 translation;

  static Pose identity() { return {}; }
  static Pose translated(const Vec3& t) { return {Mat3::identity(), t}; }
  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
  Vec3 apply_dir(const Vec3& d) const { return rotation * d; }
  Vec3 apply_inverse_dir(const Vec3& d) const { return rotation.transposed() * d; }
  Pose then(const Pose& next) const {
    return {next.rotation * rotation, next.rotation * translation + next.translation};
  }
};

inline double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c) {
  return 0.5 * norm(cross(b - a, c - a));
}

// Orientation of d relative to plane (a, b, c): 6x signed tetra volume. Falls
// back to extended precision when the double result is near zero.
inline double orient3d(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
  const Vec3 ad = a - d, bd = b - d, cd = c - d;
  const double det = dot(ad, cross(bd, cd));
  if (std::abs(det) >= 1e-12) return det;
  using ld = long double;
  const ld adx = ld(a.x) - ld(d.x), ady = ld(a.y) - ld(d.y), adz = ld(a.z) - ld(d.z);
  const ld bdx = ld(b.x) - ld(d.x), bdy = ld(b.y) - ld(d.y), bdz = ld(b.z) - ld(d.z);
  const ld cdx = ld(c.x) - ld(d.x), cdy = ld(c.y) - ld(d.y), cdz = ld(c.z) - ld(d.z);
  const ld r = adx * (bdy * cdz - bdz * cdy) + ady * (bdz * cdx - bdx * cdz) +
               adz * (bdx * cdy - bdy * cdx);
  return static_cast<double>(r);
}

// Closest point on triangle (a, b, c) to p (Ericson, Real-Time Collision Detection 5.1.5).
inline Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 ab = b - a, ac = c - a, ap = p - a;
  const double d1 = dot(ab, ap), d2 = dot(ac, ap);
  if (d1 <= 0.0 && d2 <= 0.0) return a;
  const Vec3 bp = p - b;
  const double d3 = dot(ab, bp), d4 = dot(ac, bp);
  if (d3 >= 0.0 && d4 <= d3) return b;
  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) {
    const double v = d1 / (d1 - d3);
    return a + ab * v;
  }
  const Vec3 cp = p - c;
  const double d5 = dot(ab, cp), d6 = dot(ac, cp);
  if (d6 >= 0.0 && d5 <= d6) return c;
  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) {
    const double w = d2 / (d2 - d6);
    return a + ac * w;
  }
  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
    const double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
    return b + (c - b) * w;
  }
  const double denom = 1.0 / (va + vb + vc);
  const double v = vb * denom, w = vc * denom;
  return a + ab * v + ac * w;
}

}  // namespace rcd

template <>
struct std::hash<rcd::Vec3> : rcd::Vec3Hash {};
