// rcd: batch front end for the region-aware decomposition toolkit.

#include <cstdlib>
#include <iostream>

#include "CLI11.hpp"
#include "rcd/fixtures.hpp"
#include "rcd/io.hpp"
#include "rcd/service.hpp"

namespace {

using namespace rcd;

struct Common {
  std::uint64_t seed = kDefaultSeed;
  std::size_t threads = 1;
  bool force = false;
};

TriangleMesh load_input(const std::string& path, bool force) {
  LoadOptions opt;
  opt.force = force;
  return load_mesh(path, opt);
}

PipelineParams load_regions(const std::string& path) {
  if (path.empty()) return {};
  return parse_params(read_file(path));
}

void print(const Json& j) { std::cout << j.dump(2) << "\n"; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Region-aware approximate convex decomposition"};
  app.require_subcommand(1);
  bool json_errors = false;
  Common common;
  app.add_flag("--json-errors", json_errors, "Print errors to stderr as JSON");
  app.add_option("--threads", common.threads, "Worker threads (0 = all cores)")->capture_default_str();

  // decompose
  auto* dec = app.add_subcommand("decompose", "Decompose a mesh into convex parts");
  std::string dec_mesh, dec_regions, dec_out;
  std::optional<double> dec_eps, dec_tau;
  std::optional<std::uint64_t> dec_seed;
  std::size_t dec_max_parts = AcdParams{}.max_parts;
  dec->add_option("mesh", dec_mesh, "Input mesh (OBJ or binary STL)")->required()->check(CLI::ExistingFile);
  dec->add_option("--regions", dec_regions, "Regions JSON file")->check(CLI::ExistingFile);
  dec->add_option("--remainder-eps", dec_eps, "Remainder concavity tolerance (overrides the regions file)");
  dec->add_option("--merge-tau", dec_tau, "Relative volume error allowed when merging (overrides the regions file)");
  dec->add_option("--seed", dec_seed, "Random seed (overrides the regions file)");
  dec->add_option("--max-parts", dec_max_parts, "Part budget per decomposition call")->capture_default_str();
  dec->add_option("-o,--out", dec_out, "Output directory")->required();
  dec->add_flag("--force", common.force, "Accept meshes that are not watertight");

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "Per-region symmetric Hausdorff error of a decomposition");
  std::string ev_mesh, ev_parts, ev_regions;
  std::size_t ev_n = kDefaultErrorSamples;
  std::uint64_t ev_seed = kDefaultSeed;
  std::optional<double> ev_lambda_err, ev_lambda_sim;
  double ev_tau = 0.0;
  ev->add_option("mesh", ev_mesh, "Original mesh")->required()->check(CLI::ExistingFile);
  ev->add_option("--parts", ev_parts, "Decomposition directory or manifest")->required()->check(CLI::ExistingPath);
  ev->add_option("--regions", ev_regions, "Regions JSON file")->required()->check(CLI::ExistingFile);
  ev->add_option("-n,--samples", ev_n, "Samples per surface and region")->capture_default_str();
  ev->add_option("--seed", ev_seed, "Random seed")->capture_default_str();
  ev->add_option("--lambda-err", ev_lambda_err, "Add an objective report with this error weight");
  ev->add_option("--lambda-sim", ev_lambda_sim, "Objective weight of the performance term");
  ev->add_option("--tau", ev_tau, "Performance proxy value for the objective (proxy_rtf)");

  // samples
  auto* sm = app.add_subcommand("samples", "Colored per-point error samples for visualization");
  std::string sm_mesh, sm_parts, sm_filter, sm_out, sm_colormap = "white-red";
  std::size_t sm_n = kDefaultErrorSamples;
  std::uint64_t sm_seed = kDefaultSeed;
  double sm_alpha = 0.0;
  std::optional<double> sm_beta;
  bool sm_on_approx = false;
  sm->add_option("mesh", sm_mesh, "Original mesh")->required()->check(CLI::ExistingFile);
  sm->add_option("--parts", sm_parts, "Decomposition directory or manifest")->required()->check(CLI::ExistingPath);
  sm->add_option("--filter", sm_filter, "Regions JSON whose boxes restrict the output")->check(CLI::ExistingFile);
  sm->add_flag("--on-approx", sm_on_approx, "Sample the approximation instead of the original");
  sm->add_option("-n,--samples", sm_n, "Sample count")->capture_default_str();
  sm->add_option("--alpha", sm_alpha, "Distance mapped to 0")->capture_default_str();
  sm->add_option("--beta", sm_beta, "Distance mapped to 1 (default: largest distance)");
  sm->add_option("--colormap", sm_colormap, "white-red or grayscale")->capture_default_str();
  sm->add_option("--seed", sm_seed, "Random seed")->capture_default_str();
  sm->add_option("-o,--out", sm_out, "Write .ply or .json here instead of JSON on stdout");

  // bench
  auto* be = app.add_subcommand("bench", "Collision-query throughput of a decomposition");
  std::string be_parts;
  std::size_t be_steps = 100;
  std::uint64_t be_seed = kDefaultSeed;
  be->add_option("--parts", be_parts, "Decomposition directory or manifest")->required()->check(CLI::ExistingPath);
  be->add_option("--steps", be_steps, "Timed steps after warm-up")->capture_default_str();
  be->add_option("--seed", be_seed, "Random seed")->capture_default_str();

  // serve
  auto* sv = app.add_subcommand("serve", "Run the HTTP service");
  ServiceConfig scfg;
  std::string sv_host = "0.0.0.0", sv_dir = scfg.data_dir.string();
  int sv_port = 8080;
  sv->add_option("--port", sv_port, "Listen port")->envname("RCD_PORT")->capture_default_str();
  sv->add_option("--host", sv_host, "Listen address")->capture_default_str();
  sv->add_option("--data-dir", sv_dir, "Store directory")->envname("RCD_DATA_DIR")->capture_default_str();
  sv->add_option("--max-jobs", scfg.max_jobs, "Concurrent pipeline jobs")->envname("RCD_MAX_JOBS")->capture_default_str();

  // fixture
  auto* fx = app.add_subcommand("fixture", "Write a built-in test mesh");
  std::string fx_name, fx_out;
  fx->add_option("name", fx_name, "cube, l-prism, dumbbell, ring, dimpled-cube, icosphere, motor")->required();
  fx->add_option("-o,--out", fx_out, "Output .obj or .stl")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    const std::size_t threads = resolve_threads(common.threads);
    if (*dec) {
      const TriangleMesh mesh = load_input(dec_mesh, common.force);
      PipelineParams p = load_regions(dec_regions);
      if (dec_eps) p.remainder_tolerance = *dec_eps;
      if (dec_tau) p.merge_tolerance = *dec_tau;
      if (dec_seed) p.seed = *dec_seed;
      p.threads = threads;
      p.acd.max_parts = dec_max_parts;
      const Decomposition d = interactive_decomposition(mesh, p);
      write_decomposition(dec_out, d, p);
      for (const std::string& w : d.warnings) std::cerr << "warning: " << w << "\n";
      Json summary = manifest_json(d, p)["stats"];
      summary["wall_seconds"] = d.stats.wall_seconds;
      summary["manifest"] = (std::filesystem::path(dec_out) / "manifest.json").string();
      print(summary);
    } else if (*ev) {
      const TriangleMesh mesh = load_input(ev_mesh, true);
      const Decomposition d = read_decomposition(ev_parts);
      const PipelineParams p = load_regions(ev_regions);
      const RegionErrorReport rep = evaluate_regions(mesh, d, p.regions, ev_n, ev_seed, threads);
      Json out = region_report_json(rep);
      if (ev_lambda_err || ev_lambda_sim)
        out["objective"] = objective_json(
            objective_report(rep, p.regions, ev_lambda_err.value_or(1.0), ev_lambda_sim.value_or(0.0), ev_tau));
      print(out);
    } else if (*sm) {
      const TriangleMesh mesh = load_input(sm_mesh, true);
      const Decomposition d = read_decomposition(sm_parts);
      ErrorSampleOptions opt;
      opt.n = sm_n;
      opt.seed = sm_seed;
      opt.alpha = sm_alpha;
      opt.beta = sm_beta;
      opt.on_approx = sm_on_approx;
      opt.colormap = colormap_from_string(sm_colormap);
      for (const RegionBox& r : load_regions(sm_filter).regions) opt.filter_boxes.push_back(r.box);
      std::vector<TriangleMesh> exact;
      for (const ExactMesh& e : d.exact_meshes) exact.push_back(e.mesh);
      const ErrorSampleSet s = error_samples(mesh, d.parts(), exact, opt);
      if (sm_out.empty()) {
        print(error_samples_json(s));
      } else {
        write_file(sm_out, sm_out.ends_with(".ply") ? error_samples_ply(s) : error_samples_json(s).dump() + "\n");
      }
    } else if (*be) {
      const Decomposition d = read_decomposition(be_parts);
      const BenchScene scene = build_scene(d, be_seed);
      const PerfReport r = run_bench(scene, be_steps, be_seed, reference_rate());
      std::cerr << "bench: " << r.broadphase_pairs << " object queries, " << r.total_narrowphase_queries
                << " GJK calls in " << r.duration_wall << " s, " << r.queries_per_second << " q/s, proxy_rtf "
                << r.proxy_rtf << "\n";
      print(perf_json(r));
    } else if (*sv) {
      scfg.data_dir = sv_dir;
      scfg.threads = threads;
      std::cerr << "listening on " << sv_host << ":" << sv_port << "\n";
      return serve(scfg, sv_host, sv_port);
    } else if (*fx) {
      save_mesh(fixtures::by_name(fx_name), fx_out);
    }
    return 0;
  } catch (const Error& e) {
    if (json_errors)
      std::cerr << error_json(e).dump() << "\n";
    else
      std::cerr << "error: " << e.what() << "\n";
    return e.is_validation() ? 2 : 1;
  } catch (const std::exception& e) {
    if (json_errors)
      std::cerr << Json{{"error", {{"code", "Internal"}, {"message", e.what()}}}}.dump() << "\n";
    else
      std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
