#pragma once

#include <cctype>
#include <charconv>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>

#include "rcd/mesh.hpp"

namespace rcd {

enum class MeshFormat { Obj, Stl, Auto };

struct LoadOptions {
  MeshFormat format = MeshFormat::Auto;
  // Accept non-watertight input; volume-based features must then be skipped.
  bool force = false;
};

inline constexpr double kStlWeldTolerance = 1e-9;

namespace detail {

inline bool parse_double(std::string_view tok, double& out) {
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

inline std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

inline TriangleMesh parse_obj(std::string_view text) {
  TriangleMesh mesh;
  std::size_t line_no = 0;
  std::vector<std::int64_t> poly;
  while (!text.empty()) {
    const auto eol = text.find('\n');
    std::string_view line = text.substr(0, eol);
    text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const auto toks = split_ws(line);
    if (toks.empty()) continue;
    auto fail = [&](const std::string& why) {
      throw Error(ErrorCode::ParseError, "OBJ line " + std::to_string(line_no) + ": " + why);
    };
    if (toks[0] == "v") {
      if (toks.size() < 4) fail("vertex needs three coordinates");
      Vec3 p;
      for (int k = 0; k < 3; ++k)
        if (!parse_double(toks[static_cast<std::size_t>(k + 1)], p[k])) fail("bad coordinate");
      mesh.vertices.push_back(p);
    } else if (toks[0] == "f") {
      if (toks.size() < 4) fail("face needs at least three corners");
      poly.clear();
      for (std::size_t k = 1; k < toks.size(); ++k) {
        std::string_view idx = toks[k].substr(0, toks[k].find('/'));
        std::int64_t v = 0;
        auto [ptr, ec] = std::from_chars(idx.data(), idx.data() + idx.size(), v);
        if (ec != std::errc() || ptr != idx.data() + idx.size() || v == 0) fail("bad face index");
        const auto n = static_cast<std::int64_t>(mesh.vertices.size());
        const std::int64_t zero_based = v > 0 ? v - 1 : n + v;
        if (zero_based < 0 || zero_based >= n) fail("face index " + std::to_string(v) + " out of range");
        poly.push_back(zero_based);
      }
      for (std::size_t k = 1; k + 1 < poly.size(); ++k)
        mesh.faces.push_back({static_cast<std::uint32_t>(poly[0]), static_cast<std::uint32_t>(poly[k]),
                              static_cast<std::uint32_t>(poly[k + 1])});
    }
  }
  return mesh;
}

inline TriangleMesh parse_stl(std::string_view bytes) {
  if (bytes.size() < 84) throw Error(ErrorCode::ParseError, "STL shorter than its 84-byte header");
  std::uint32_t count = 0;
  std::memcpy(&count, bytes.data() + 80, 4);
  if (bytes.size() < 84 + static_cast<std::size_t>(count) * 50)
    throw Error(ErrorCode::ParseError, "STL truncated: header declares " + std::to_string(count) + " triangles");
  TriangleMesh soup;
  soup.vertices.reserve(static_cast<std::size_t>(count) * 3);
  for (std::uint32_t t = 0; t < count; ++t) {
    const char* rec = bytes.data() + 84 + static_cast<std::size_t>(t) * 50;
    for (int k = 0; k < 3; ++k) {
      float xyz[3];
      std::memcpy(xyz, rec + 12 + k * 12, 12);
      soup.vertices.push_back({xyz[0], xyz[1], xyz[2]});
    }
    soup.faces.push_back({3 * t, 3 * t + 1, 3 * t + 2});
  }
  return weld(soup, kStlWeldTolerance);
}

inline bool looks_like_binary_stl(std::string_view bytes) {
  if (bytes.size() < 84) return false;
  std::uint32_t count = 0;
  std::memcpy(&count, bytes.data() + 80, 4);
  return bytes.size() == 84 + static_cast<std::size_t>(count) * 50;
}

inline MeshFormat format_from_path(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  for (char& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (ext == ".obj") return MeshFormat::Obj;
  if (ext == ".stl") return MeshFormat::Stl;
  return MeshFormat::Auto;
}

}  // namespace detail

// Parses an in-memory OBJ or binary STL payload and validates it.
inline TriangleMesh parse_mesh(std::string_view bytes, const LoadOptions& options = {}) {
  MeshFormat format = options.format;
  if (format == MeshFormat::Auto) format = detail::looks_like_binary_stl(bytes) ? MeshFormat::Stl : MeshFormat::Obj;
  TriangleMesh mesh = format == MeshFormat::Stl ? detail::parse_stl(bytes) : detail::parse_obj(bytes);
  if (mesh.faces.empty()) throw Error(ErrorCode::ParseError, "mesh contains no faces");
  if (!options.force) {
    const ValidationReport report = validate(mesh);
    if (!report.watertight)
      throw Error(ErrorCode::NotWatertight, std::to_string(report.boundary_edges) + " boundary and " +
                                                std::to_string(report.non_manifold_edges) +
                                                " non-manifold edges");
  }
  return mesh;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& path, std::string_view data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

inline TriangleMesh load_mesh(const std::filesystem::path& path, LoadOptions options = {}) {
  if (options.format == MeshFormat::Auto) options.format = detail::format_from_path(path);
  return parse_mesh(read_file(path), options);
}

// Shortest decimal form that round-trips the double exactly.
inline std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

inline std::string to_obj(const TriangleMesh& mesh) {
  std::string out;
  out.reserve(mesh.vertices.size() * 48 + mesh.faces.size() * 24);
  for (const Vec3& v : mesh.vertices) {
    out += "v ";
    out += format_double(v.x);
    out += ' ';
    out += format_double(v.y);
    out += ' ';
    out += format_double(v.z);
    out += '\n';
  }
  for (const Face& f : mesh.faces) {
    out += "f " + std::to_string(f[0] + 1) + ' ' + std::to_string(f[1] + 1) + ' ' + std::to_string(f[2] + 1) + '\n';
  }
  return out;
}

inline std::string to_stl(const TriangleMesh& mesh) {
  std::string out(84 + mesh.faces.size() * 50, '\0');
  const char header[] = "binary STL";
  std::memcpy(out.data(), header, sizeof header - 1);
  const auto count = static_cast<std::uint32_t>(mesh.faces.size());
  std::memcpy(out.data() + 80, &count, 4);
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    char* rec = out.data() + 84 + f * 50;
    const Vec3 n = mesh.face_normal(f);
    const float nf[3] = {static_cast<float>(n.x), static_cast<float>(n.y), static_cast<float>(n.z)};
    std::memcpy(rec, nf, 12);
    for (int k = 0; k < 3; ++k) {
      const Vec3& p = mesh.corner(f, k);
      const float pf[3] = {static_cast<float>(p.x), static_cast<float>(p.y), static_cast<float>(p.z)};
      std::memcpy(rec + 12 + k * 12, pf, 12);
    }
  }
  return out;
}

inline void save_mesh(const TriangleMesh& mesh, const std::filesystem::path& path,
                      MeshFormat format = MeshFormat::Auto) {
  if (format == MeshFormat::Auto) format = detail::format_from_path(path);
  write_file(path, format == MeshFormat::Stl ? to_stl(mesh) : to_obj(mesh));
}

}  // namespace rcd
