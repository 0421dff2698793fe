#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <random>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

#include "rcd/error.hpp"
#include "rcd/geometry.hpp"

namespace rcd {

using Face = std::array<std::uint32_t, 3>;

// Indexed triangle surface. Faces are counter-clockwise seen from outside.
struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<Face> faces;

  bool empty() const { return faces.empty(); }
  const Vec3& corner(std::size_t face, int k) const {
    return vertices[faces[face][static_cast<std::size_t>(k)]];
  }
  double face_area(std::size_t f) const { return triangle_area(corner(f, 0), corner(f, 1), corner(f, 2)); }
  Vec3 face_normal(std::size_t f) const {
    return normalized(cross(corner(f, 1) - corner(f, 0), corner(f, 2) - corner(f, 0)));
  }
};

// Deterministic generator shared by every sampling routine. Produces the same
// stream on every platform (std distributions are implementation-defined).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  std::uint64_t next() { return engine_(); }
  // Standard normal via Box-Muller.
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
  }
  Vec3 unit_vector() {
    Vec3 v{normal(), normal(), normal()};
    double n = norm(v);
    while (n < 1e-12) {
      v = {normal(), normal(), normal()};
      n = norm(v);
    }
    return v / n;
  }

 private:
  std::mt19937_64 engine_;
};

inline Aabb mesh_aabb(const TriangleMesh& mesh) {
  Aabb box;
  for (const Vec3& v : mesh.vertices) box.expand(v);
  return box;
}

inline Aabb points_aabb(std::span<const Vec3> points) {
  Aabb box;
  for (const Vec3& v : points) box.expand(v);
  return box;
}

struct ValidationReport {
  bool empty = false;
  bool watertight = false;
  std::size_t vertex_count = 0;
  std::size_t face_count = 0;
  std::size_t boundary_edges = 0;
  std::size_t non_manifold_edges = 0;
  std::vector<std::size_t> degenerate_faces;
  std::vector<std::size_t> invalid_faces;  // index out of range or repeated corner
};

namespace detail {
inline std::uint64_t edge_key(std::uint32_t a, std::uint32_t b) {
  return (static_cast<std::uint64_t>(a) << 32) | b;
}
}  // namespace detail

inline ValidationReport validate(const TriangleMesh& mesh) {
  ValidationReport report;
  report.vertex_count = mesh.vertices.size();
  report.face_count = mesh.faces.size();
  report.empty = mesh.faces.empty() || mesh.vertices.empty();
  if (report.empty) return report;

  const double diag = mesh_aabb(mesh).diagonal();
  const double min_area = 1e-12 * diag * diag;
  std::unordered_map<std::uint64_t, int> directed;
  directed.reserve(mesh.faces.size() * 3);
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    const Face& t = mesh.faces[f];
    const auto n = mesh.vertices.size();
    if (t[0] >= n || t[1] >= n || t[2] >= n || t[0] == t[1] || t[1] == t[2] || t[0] == t[2]) {
      report.invalid_faces.push_back(f);
      continue;
    }
    if (mesh.face_area(f) <= min_area) report.degenerate_faces.push_back(f);
    for (int k = 0; k < 3; ++k) ++directed[detail::edge_key(t[k], t[(k + 1) % 3])];
  }
  // Undirected view: an edge is manifold-closed iff each direction appears exactly once.
  std::map<std::pair<std::uint32_t, std::uint32_t>, std::pair<int, int>> undirected;
  for (const auto& [key, count] : directed) {
    const auto a = static_cast<std::uint32_t>(key >> 32);
    const auto b = static_cast<std::uint32_t>(key & 0xffffffffu);
    auto& slot = undirected[{std::min(a, b), std::max(a, b)}];
    (a < b ? slot.first : slot.second) += count;
  }
  for (const auto& [edge, counts] : undirected) {
    const int total = counts.first + counts.second;
    if (total == 1) {
      ++report.boundary_edges;
    } else if (counts.first != 1 || counts.second != 1) {
      ++report.non_manifold_edges;
    }
  }
  report.watertight = report.invalid_faces.empty() && report.boundary_edges == 0 &&
                      report.non_manifold_edges == 0;
  return report;
}

// Divergence-theorem volume without the watertightness check.
inline double signed_volume(const TriangleMesh& mesh) {
  double six_v = 0.0;
  for (const Face& f : mesh.faces) {
    const Vec3& a = mesh.vertices[f[0]];
    const Vec3& b = mesh.vertices[f[1]];
    const Vec3& c = mesh.vertices[f[2]];
    six_v += dot(a, cross(b, c));
  }
  return six_v / 6.0;
}

inline double mesh_volume(const TriangleMesh& mesh) {
  if (!validate(mesh).watertight) throw Error(ErrorCode::NotWatertight, "volume requires a closed surface");
  return signed_volume(mesh);
}

inline double surface_area(const TriangleMesh& mesh) {
  double area = 0.0;
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) area += mesh.face_area(f);
  return area;
}

// Merge vertices with bit-identical coordinates, drop faces that collapse.
inline TriangleMesh weld_exact(const TriangleMesh& mesh) {
  TriangleMesh out;
  std::unordered_map<Vec3, std::uint32_t, Vec3Hash> ids;
  std::vector<std::uint32_t> remap(mesh.vertices.size());
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
    auto [it, inserted] = ids.try_emplace(mesh.vertices[i], static_cast<std::uint32_t>(out.vertices.size()));
    if (inserted) out.vertices.push_back(mesh.vertices[i]);
    remap[i] = it->second;
  }
  for (const Face& f : mesh.faces) {
    Face g{remap[f[0]], remap[f[1]], remap[f[2]]};
    if (g[0] != g[1] && g[1] != g[2] && g[0] != g[2]) out.faces.push_back(g);
  }
  return out;
}

// Merge vertices closer than `tol` (grid hashing; first occurrence wins).
inline TriangleMesh weld(const TriangleMesh& mesh, double tol) {
  if (tol <= 0.0) return weld_exact(mesh);
  struct CellHash {
    std::size_t operator()(const std::array<std::int64_t, 3>& c) const noexcept {
      std::size_t h = 0;
      for (auto v : c) h = h * 1000003u ^ std::hash<std::int64_t>{}(v);
      return h;
    }
  };
  const double cell = tol * 4.0;
  auto cell_of = [&](const Vec3& p) {
    return std::array<std::int64_t, 3>{static_cast<std::int64_t>(std::floor(p.x / cell)),
                                       static_cast<std::int64_t>(std::floor(p.y / cell)),
                                       static_cast<std::int64_t>(std::floor(p.z / cell))};
  };
  std::unordered_map<std::array<std::int64_t, 3>, std::vector<std::uint32_t>, CellHash> grid;
  TriangleMesh out;
  std::vector<std::uint32_t> remap(mesh.vertices.size());
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
    const Vec3& p = mesh.vertices[i];
    const auto c = cell_of(p);
    std::int64_t found = -1;
    for (std::int64_t dx = -1; dx <= 1 && found < 0; ++dx)
      for (std::int64_t dy = -1; dy <= 1 && found < 0; ++dy)
        for (std::int64_t dz = -1; dz <= 1 && found < 0; ++dz) {
          auto it = grid.find({c[0] + dx, c[1] + dy, c[2] + dz});
          if (it == grid.end()) continue;
          for (std::uint32_t id : it->second)
            if (distance(out.vertices[id], p) <= tol) {
              found = id;
              break;
            }
        }
    if (found < 0) {
      found = static_cast<std::int64_t>(out.vertices.size());
      out.vertices.push_back(p);
      grid[c].push_back(static_cast<std::uint32_t>(found));
    }
    remap[i] = static_cast<std::uint32_t>(found);
  }
  for (const Face& f : mesh.faces) {
    Face g{remap[f[0]], remap[f[1]], remap[f[2]]};
    if (g[0] != g[1] && g[1] != g[2] && g[0] != g[2]) out.faces.push_back(g);
  }
  return out;
}

// Drop vertices not referenced by any face, preserving order.
inline TriangleMesh compact(const TriangleMesh& mesh) {
  std::vector<std::int64_t> remap(mesh.vertices.size(), -1);
  TriangleMesh out;
  for (const Face& f : mesh.faces) {
    Face g{};
    for (int k = 0; k < 3; ++k) {
      auto& r = remap[f[static_cast<std::size_t>(k)]];
      if (r < 0) {
        r = static_cast<std::int64_t>(out.vertices.size());
        out.vertices.push_back(mesh.vertices[f[static_cast<std::size_t>(k)]]);
      }
      g[static_cast<std::size_t>(k)] = static_cast<std::uint32_t>(r);
    }
    out.faces.push_back(g);
  }
  return out;
}

inline TriangleMesh transformed(const TriangleMesh& mesh, const Pose& pose) {
  TriangleMesh out = mesh;
  for (Vec3& v : out.vertices) v = pose.apply(v);
  return out;
}

inline TriangleMesh scaled(const TriangleMesh& mesh, double s) {
  TriangleMesh out = mesh;
  for (Vec3& v : out.vertices) v *= s;
  return out;
}

inline TriangleMesh concatenate(std::span<const TriangleMesh> meshes) {
  TriangleMesh out;
  for (const TriangleMesh& m : meshes) {
    const auto base = static_cast<std::uint32_t>(out.vertices.size());
    out.vertices.insert(out.vertices.end(), m.vertices.begin(), m.vertices.end());
    for (const Face& f : m.faces) out.faces.push_back({f[0] + base, f[1] + base, f[2] + base});
  }
  return out;
}

// Edge-connected components, each compacted. Order follows the lowest face index.
inline std::vector<TriangleMesh> connected_components(const TriangleMesh& mesh) {
  std::vector<std::uint32_t> parent(mesh.vertices.size());
  std::iota(parent.begin(), parent.end(), 0u);
  auto find = [&](std::uint32_t a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  };
  for (const Face& f : mesh.faces) {
    for (int k = 1; k < 3; ++k) {
      const auto r0 = find(f[0]);
      const auto r = find(f[static_cast<std::size_t>(k)]);
      if (r != r0) parent[std::max(r, r0)] = std::min(r, r0);
    }
  }
  std::map<std::uint32_t, std::size_t> slot;
  std::vector<TriangleMesh> parts;
  for (const Face& f : mesh.faces) {
    const auto root = find(f[0]);
    auto [it, inserted] = slot.try_emplace(root, parts.size());
    if (inserted) parts.emplace_back();
    parts[it->second].faces.push_back(f);
  }
  for (TriangleMesh& p : parts) {
    p.vertices = mesh.vertices;
    p = compact(p);
  }
  return parts;
}

struct SurfaceSampleCloud {
  std::vector<Vec3> points;
  std::vector<std::uint32_t> source_face;
  double density = 0.0;  // samples per unit area
};

namespace detail {
inline Vec3 sample_triangle(const Vec3& a, const Vec3& b, const Vec3& c, Rng& rng) {
  const double r1 = std::sqrt(rng.uniform());
  const double r2 = rng.uniform();
  return a * (1.0 - r1) + b * (r1 * (1.0 - r2)) + c * (r1 * r2);
}
}  // namespace detail

// Area-uniform samples restricted to the listed faces (all faces when empty).
inline SurfaceSampleCloud sample_faces(const TriangleMesh& mesh, std::span<const std::uint32_t> faces,
                                       std::size_t n, std::uint64_t seed) {
  std::vector<std::uint32_t> all;
  if (faces.empty()) {
    all.resize(mesh.faces.size());
    std::iota(all.begin(), all.end(), 0u);
    faces = all;
  }
  std::vector<double> cumulative;
  cumulative.reserve(faces.size());
  double total = 0.0;
  for (std::uint32_t f : faces) {
    total += mesh.face_area(f);
    cumulative.push_back(total);
  }
  if (faces.empty() || !(total > 0.0)) throw Error(ErrorCode::EmptyMesh, "no surface area to sample");
  SurfaceSampleCloud cloud;
  cloud.points.reserve(n);
  cloud.source_face.reserve(n);
  cloud.density = static_cast<double>(n) / total;
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = rng.uniform() * total;
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    if (it == cumulative.end()) --it;
    const std::uint32_t f = faces[static_cast<std::size_t>(it - cumulative.begin())];
    cloud.points.push_back(detail::sample_triangle(mesh.corner(f, 0), mesh.corner(f, 1), mesh.corner(f, 2), rng));
    cloud.source_face.push_back(f);
  }
  return cloud;
}

// Face chosen proportional to area, then a uniform barycentric point on it.
inline SurfaceSampleCloud sample_surface(const TriangleMesh& mesh, std::size_t n, std::uint64_t seed) {
  if (mesh.faces.empty()) throw Error(ErrorCode::EmptyMesh, "mesh has no faces");
  return sample_faces(mesh, {}, n, seed);
}

}  // namespace rcd
