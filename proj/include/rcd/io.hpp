#pragma once

#include <cstdio>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

#include "rcd/mesh_io.hpp"
#include "rcd/metrics.hpp"
#include "rcd/perf_bench.hpp"
#include "rcd/pipeline.hpp"

namespace rcd {

using Json = nlohmann::json;

inline constexpr std::uint64_t kDefaultSeed = 0;

namespace detail {

[[noreturn]] inline void schema_error(const std::string& what) { throw Error(ErrorCode::InvalidArgument, what); }

inline double number_field(const Json& j, const char* key, double fallback, bool required = false) {
  if (!j.contains(key)) {
    if (required) schema_error(std::string("missing field '") + key + "'");
    return fallback;
  }
  if (!j[key].is_number()) schema_error(std::string("field '") + key + "' must be a number");
  return j[key].get<double>();
}

inline Vec3 vec3_field(const Json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_array() || j[key].size() != 3)
    schema_error(std::string("field '") + key + "' must be [x, y, z]");
  Vec3 v;
  for (int k = 0; k < 3; ++k) {
    if (!j[key][k].is_number()) schema_error(std::string("field '") + key + "' must hold numbers");
    v[k] = j[key][k].get<double>();
  }
  return v;
}

inline Json vec3_json(const Vec3& v) { return Json::array({v.x, v.y, v.z}); }

}  // namespace detail

// Regions file: {"regions":[{"id","min","max","tolerance"}], "remainder_tolerance",
// "merge_tolerance", "seed"}. Missing top-level fields take defaults.
inline PipelineParams params_from_json(const Json& j) {
  if (!j.is_object()) detail::schema_error("regions file must be a JSON object");
  PipelineParams p;
  if (j.contains("regions")) {
    if (!j["regions"].is_array()) detail::schema_error("'regions' must be an array");
    for (const Json& r : j["regions"]) {
      if (!r.is_object() || !r.contains("id") || !r["id"].is_string())
        detail::schema_error("each region needs a string 'id'");
      RegionBox box;
      box.id = r["id"].get<std::string>();
      box.box = {detail::vec3_field(r, "min"), detail::vec3_field(r, "max")};
      box.tolerance = detail::number_field(r, "tolerance", 0.0, true);
      p.regions.push_back(box);
    }
  }
  p.remainder_tolerance = detail::number_field(j, "remainder_tolerance", p.remainder_tolerance);
  p.merge_tolerance = detail::number_field(j, "merge_tolerance", p.merge_tolerance);
  if (j.contains("seed")) {
    if (!j["seed"].is_number_integer() || j["seed"].get<std::int64_t>() < 0)
      detail::schema_error("'seed' must be a non-negative integer");
    p.seed = j["seed"].get<std::uint64_t>();
  }
  return p;
}

inline PipelineParams parse_params(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::ParseError, std::string("invalid JSON: ") + e.what());
  }
  return params_from_json(j);
}

inline Json regions_json(const std::vector<RegionBox>& regions) {
  Json arr = Json::array();
  for (const RegionBox& r : regions)
    arr.push_back({{"id", r.id}, {"min", detail::vec3_json(r.box.min)}, {"max", detail::vec3_json(r.box.max)},
                   {"tolerance", r.tolerance}});
  return arr;
}

inline Json params_json(const PipelineParams& p) {
  return {{"regions", regions_json(p.regions)},
          {"remainder_tolerance", p.remainder_tolerance},
          {"merge_tolerance", p.merge_tolerance},
          {"seed", p.seed}};
}

inline Json validation_json(const ValidationReport& v) {
  return {{"watertight", v.watertight},         {"empty", v.empty},
          {"vertex_count", v.vertex_count},     {"face_count", v.face_count},
          {"boundary_edges", v.boundary_edges}, {"non_manifold_edges", v.non_manifold_edges},
          {"degenerate_faces", v.degenerate_faces.size()}};
}

inline Json error_json(const Error& e) { return {{"error", {{"code", std::string(to_string(e.code())) }, {"message", e.what()}}}}; }

// Part files of a decomposition in output order, with their file names.
struct PartFile {
  std::string name;
  std::string provenance;
  bool exact = false;
  const TriangleMesh* mesh = nullptr;
  double volume = 0.0;
};

inline std::vector<PartFile> part_files(const Decomposition& d) {
  std::vector<PartFile> out;
  char buf[32];
  for (std::size_t i = 0; i < d.convex_parts.size(); ++i) {
    std::snprintf(buf, sizeof buf, "part_%04zu.obj", i);
    out.push_back({buf, d.convex_parts[i].provenance, false, &d.convex_parts[i].part.mesh(),
                   d.convex_parts[i].part.volume()});
  }
  for (std::size_t i = 0; i < d.exact_meshes.size(); ++i) {
    std::snprintf(buf, sizeof buf, "exact_%04zu.obj", i);
    out.push_back({buf, d.exact_meshes[i].region, true, &d.exact_meshes[i].mesh, mesh_volume(d.exact_meshes[i].mesh)});
  }
  return out;
}

// Deterministic manifest; wall time is left out so identical runs produce
// identical bytes.
inline Json manifest_json(const Decomposition& d, const PipelineParams& params) {
  Json parts = Json::array();
  for (const PartFile& f : part_files(d))
    parts.push_back({{"file", f.name},
                     {"provenance", f.provenance},
                     {"kind", f.exact ? "exact" : "convex"},
                     {"volume", f.volume},
                     {"vertex_count", f.mesh->vertices.size()},
                     {"face_count", f.mesh->faces.size()}});
  Json per_region = Json::object();
  for (const auto& [id, n] : d.stats.parts_per_region) per_region[id] = n;
  Json sources = Json::object();
  for (const auto& [id, v] : d.source_volumes) sources[id] = v;
  return {{"parts", parts},
          {"stats", {{"part_count", d.stats.part_count}, {"exact_count", d.exact_meshes.size()}, {"parts_per_region", per_region}}},
          {"warnings", d.warnings},
          {"input_volume", d.input_volume},
          {"source_volumes", sources},
          {"params", params_json(params)}};
}

inline std::string manifest_text(const Decomposition& d, const PipelineParams& params) {
  return manifest_json(d, params).dump(2) + "\n";
}

inline void write_decomposition(const std::filesystem::path& dir, const Decomposition& d, const PipelineParams& params) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + dir.string());
  for (const PartFile& f : part_files(d)) write_file(dir / f.name, to_obj(*f.mesh));
  write_file(dir / "manifest.json", manifest_text(d, params));
}

// Loads a decomposition back from a manifest file or its directory.
inline Decomposition read_decomposition(std::filesystem::path path) {
  if (std::filesystem::is_directory(path)) path /= "manifest.json";
  Json m;
  try {
    m = Json::parse(read_file(path));
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::ParseError, "invalid manifest: " + std::string(e.what()));
  }
  if (!m.contains("parts") || !m["parts"].is_array()) detail::schema_error("manifest has no 'parts' array");
  const std::filesystem::path dir = path.parent_path();
  Decomposition d;
  for (const Json& p : m["parts"]) {
    if (!p.contains("file") || !p.contains("provenance")) detail::schema_error("manifest part needs 'file' and 'provenance'");
    LoadOptions opt;
    opt.format = MeshFormat::Obj;
    TriangleMesh mesh = load_mesh(dir / p["file"].get<std::string>(), opt);
    const std::string prov = p["provenance"].get<std::string>();
    if (p.value("kind", "convex") == "exact") {
      d.exact_meshes.push_back({prov, std::move(mesh)});
    } else {
      d.convex_parts.push_back({convex_hull(mesh.vertices), prov});
      ++d.stats.parts_per_region[prov];
    }
  }
  d.stats.part_count = d.convex_parts.size();
  d.input_volume = m.value("input_volume", 0.0);
  if (m.contains("warnings")) d.warnings = m["warnings"].get<std::vector<std::string>>();
  if (m.contains("source_volumes"))
    for (const auto& [id, v] : m["source_volumes"].items()) d.source_volumes[id] = v.get<double>();
  return d;
}

inline Json region_report_json(const RegionErrorReport& r) {
  Json regions = Json::array();
  for (const RegionError& e : r.regions)
    regions.push_back({{"id", e.id}, {"d_a_to_o", e.d_a_to_o}, {"d_o_to_a", e.d_o_to_a}, {"region_error", e.region_error}});
  return {{"regions", regions}, {"overall", r.overall}};
}

inline Json perf_json(const PerfReport& p) {
  return {{"queries_per_second", p.queries_per_second},
          {"total_narrowphase_queries", p.total_narrowphase_queries},
          {"broadphase_pairs", p.broadphase_pairs},
          {"duration_wall", p.duration_wall},
          {"reference_rate", p.reference_rate},
          {"proxy_rtf", p.proxy_rtf},
          {"steps", p.steps},
          {"frozen_moves", p.frozen_moves}};
}

inline Json objective_json(const ObjectiveReport& o) {
  Json regions = Json::array();
  for (std::size_t i = 0; i < o.ids.size(); ++i) regions.push_back({{"id", o.ids[i]}, {"phi", o.phi[i]}, {"delta", o.delta[i]}});
  return {{"lambda_err", o.lambda_err}, {"lambda_sim", o.lambda_sim}, {"regions", regions},
          {"xi", o.xi},                 {"tau", o.tau},               {"weighted_total", o.weighted_total}};
}

inline Json invariants_json(const InvariantReport& r) {
  return {{"partition", r.partition},
          {"region_exclusion", r.region_exclusion},
          {"max_cross_overlap", r.max_cross_overlap},
          {"coverage_error", r.coverage_error},
          {"violations", r.violations}};
}

inline std::string hex_color(const std::array<std::uint8_t, 3>& c) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", c[0], c[1], c[2]);
  return buf;
}

inline Json error_samples_json(const ErrorSampleSet& s) {
  Json pts = Json::array(), colors = Json::array();
  for (const Vec3& p : s.points) pts.push_back(detail::vec3_json(p));
  for (const auto& c : s.colors) colors.push_back(hex_color(c));
  return {{"points", pts}, {"distances", s.distances}, {"normalized", s.normalized},
          {"colors", colors}, {"alpha", s.alpha},      {"beta", s.beta}};
}

inline std::string error_samples_ply(const ErrorSampleSet& s) {
  std::string out = "ply\nformat ascii 1.0\nelement vertex " + std::to_string(s.points.size()) +
                    "\nproperty double x\nproperty double y\nproperty double z\n"
                    "property uchar red\nproperty uchar green\nproperty uchar blue\n"
                    "property double distance\nend_header\n";
  for (std::size_t i = 0; i < s.points.size(); ++i) {
    const Vec3& p = s.points[i];
    out += format_double(p.x) + ' ' + format_double(p.y) + ' ' + format_double(p.z) + ' ' +
           std::to_string(s.colors[i][0]) + ' ' + std::to_string(s.colors[i][1]) + ' ' + std::to_string(s.colors[i][2]) +
           ' ' + format_double(s.distances[i]) + '\n';
  }
  return out;
}

}  // namespace rcd
