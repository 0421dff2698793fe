// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any of them failed.

#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <thread>

#include "rcd/fixtures.hpp"
#include "rcd/gjk.hpp"
#include "rcd/service.hpp"

using namespace rcd;

namespace {

using Clock = std::chrono::steady_clock;

struct Verdict {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(4);
  s << v;
  return s.str();
}

// ---- Fixture suite with one region set each ----

struct Case {
  std::string name;
  TriangleMesh mesh;
  PipelineParams params;
};

RegionBox region(std::string id, Aabb box, double eps) { return {std::move(id), box, eps}; }

std::vector<RegionBox> motor_regions(const fixtures::MotorLike& m, double eps) {
  // Feature boxes grown sideways and upward; the lower face stays on the
  // housing top so the regions cover the features and not the body.
  std::vector<RegionBox> out;
  for (const auto& [name, b] : m.feature_boxes) {
    if (name == "shaft") continue;
    Aabb r = b;
    r.min.x -= 0.05;
    r.min.y -= 0.05;
    r.max.x += 0.05;
    r.max.y += 0.05;
    r.max.z += 0.05;
    out.push_back(region(name, r, eps));
  }
  return out;
}

std::vector<Case> suite() {
  std::vector<Case> cs;
  auto add = [&](std::string name, TriangleMesh mesh, std::vector<RegionBox> regions, double rem) {
    PipelineParams p;
    p.regions = std::move(regions);
    p.remainder_tolerance = rem;
    cs.push_back({std::move(name), std::move(mesh), std::move(p)});
  };
  add("cube", fixtures::unit_cube(), {region("corner", {{0.5, 0.5, 0.5}, {1.1, 1.1, 1.1}}, 0.05)}, 0.05);
  add("l-prism", fixtures::l_prism(), {region("notch", {{0.5, 0.5, -0.1}, {2.1, 2.1, 1.1}}, 0.0)}, 0.2);
  add("dimpled-cube", fixtures::dimpled_cube(), {region("dimple", {{0.25, 0.25, 0.7}, {0.75, 0.75, 1.05}}, 0.02)}, 0.05);
  add("dumbbell", fixtures::dumbbell(),
      {region("neck", {{0.8, -0.1, -0.1}, {1.3, 1.1, 1.1}}, 0.02), region("lobe", {{2.2, -0.1, -0.1}, {3.1, 1.1, 1.1}}, 0.0)},
      0.05);
  const fixtures::MotorLike motor = fixtures::motor_like();
  add("motor", motor.mesh, motor_regions(motor, 0.01), 0.05);
  return cs;
}

struct Solved {
  const Case* c;
  Decomposition d;
};

std::vector<Solved>& solved(const std::vector<Case>& cs) {
  static std::vector<Solved> out;
  if (out.empty())
    for (const Case& c : cs) out.push_back({&c, interactive_decomposition(c.mesh, c.params)});
  return out;
}

// ---- Oracles ----

// L-prism hull facet over the notch is the rectangle (2,1)-(1,2) x [0,1]; the
// concavity of a prism point is its distance to it, 0 on the hull boundary.
double l_prism_concavity(const Vec3& p) {
  const double depth = std::min({p.x, p.y, 2.0 - p.x, 2.0 - p.y, p.z, 1.0 - p.z, (3.0 - p.x - p.y) / std::sqrt(2.0)});
  if (depth <= 1e-9) return 0.0;
  const Vec3 a{2, 1, 0}, u = normalized(Vec3{-1, 1, 0});
  const double t = std::clamp(dot(p - a, u), 0.0, std::sqrt(2.0));
  return distance(p, Vec3{a.x + t * u.x, a.y + t * u.y, std::clamp(p.z, 0.0, 1.0)});
}

double brute_distance(const TriangleMesh& m, const Vec3& p) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t f = 0; f < m.faces.size(); ++f)
    best = std::min(best, distance(p, closest_point_on_triangle(p, m.corner(f, 0), m.corner(f, 1), m.corner(f, 2))));
  return best;
}

double cloud_distance(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
  double best = std::numeric_limits<double>::infinity();
  for (const Vec3& p : a)
    for (const Vec3& q : b) best = std::min(best, norm2(p - q));
  return std::sqrt(best);
}

ConvexPart random_part(Rng& rng, int n) {
  std::vector<Vec3> pts;
  const Vec3 c{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
  const Vec3 scale{rng.uniform(0.2, 1.5), rng.uniform(0.2, 1.5), rng.uniform(0.2, 1.5)};
  for (int i = 0; i < n; ++i) {
    const Vec3 u = rng.unit_vector() * std::cbrt(rng.uniform());
    pts.push_back(c + Vec3{u.x * scale.x, u.y * scale.y, u.z * scale.z});
  }
  return convex_hull(pts);
}

double max_region_error(const TriangleMesh& mesh, const Decomposition& d, const std::vector<RegionBox>& regions) {
  double m = 0.0;
  for (const RegionError& r : evaluate_regions(mesh, d, regions, 20000, 0).regions) m = std::max(m, r.region_error);
  return m;
}

Decomposition uniform(const TriangleMesh& mesh, double eps) {
  AcdParams a;
  a.tolerance = eps;
  Decomposition d;
  for (ConvexPart& p : convex_decompose(mesh, a).parts) d.convex_parts.push_back({std::move(p), kRemainderId});
  return d;
}

// ---- Criteria ----

Verdict constraints(const std::vector<Case>& cs) {
  const auto t = Clock::now();
  Verdict v{true, ""};
  for (const Solved& s : solved(cs)) {
    const InvariantReport r = check_invariants(s.d, s.c->params.regions, exclusion_slack(s.c->mesh));
    const bool ok = r.partition && r.region_exclusion;
    v.pass = v.pass && ok;
    v.detail += s.c->name + (ok ? " ok, " : " VIOLATED, ");
  }
  const double dt = seconds_since(t);
  v.pass = v.pass && dt < 120.0;
  v.detail += fmt(dt) + " s";
  return v;
}

Verdict tolerance(const std::vector<Case>& cs) {
  const auto t = Clock::now();
  Verdict v{true, ""};
  double worst_ratio = 0.0, worst_exact = 0.0;
  for (const Solved& s : solved(cs)) {
    const RegionErrorReport rep = evaluate_regions(s.c->mesh, s.d, s.c->params.regions, 20000, 0);
    for (std::size_t i = 0; i < rep.regions.size(); ++i) {
      const double eps = s.c->params.regions[i].tolerance;
      const double e = rep.regions[i].region_error;
      if (eps > 0.0) {
        worst_ratio = std::max(worst_ratio, e / eps);
        v.pass = v.pass && e <= 1.1 * eps;
      } else {
        worst_exact = std::max(worst_exact, e);
        v.pass = v.pass && e <= 1e-9;
      }
    }
  }
  const double dt = seconds_since(t);
  v.pass = v.pass && dt < 60.0;
  v.detail = "worst error/eps " + fmt(worst_ratio) + ", worst exact-region error " + fmt(worst_exact) + ", " + fmt(dt) + " s";
  return v;
}

Verdict fewer_parts() {
  const auto t = Clock::now();
  const fixtures::MotorLike motor = fixtures::motor_like();
  const double E = 0.005;
  PipelineParams p;
  p.regions = motor_regions(motor, E);
  p.remainder_tolerance = 0.05;
  const Decomposition ra = interactive_decomposition(motor.mesh, p);
  const double ra_err = max_region_error(motor.mesh, ra, p.regions);
  // Coarsest uniform tolerance on a descending grid that reaches E.
  std::size_t uniform_parts = 0;
  double uniform_eps = 0.0, uniform_err = 0.0;
  for (int k = 10; k >= 1; --k) {
    const double eps = 0.001 * k;
    const Decomposition u = uniform(motor.mesh, eps);
    const double err = max_region_error(motor.mesh, u, p.regions);
    if (err <= E) {
      uniform_parts = u.convex_parts.size();
      uniform_eps = eps;
      uniform_err = err;
      break;
    }
  }
  const std::size_t ra_parts = ra.convex_parts.size();
  const double ratio = uniform_parts ? double(ra_parts) / double(uniform_parts) : 1e9;
  const double dt = seconds_since(t);
  Verdict v;
  v.pass = ra_err <= E && uniform_parts > 0 && ratio <= 0.7 && dt < 120.0;
  v.detail = "region-aware " + std::to_string(ra_parts) + " parts (max err " + fmt(ra_err) + "), uniform eps " +
             fmt(uniform_eps) + " " + std::to_string(uniform_parts) + " parts (max err " + fmt(uniform_err) +
             "), ratio " + fmt(ratio) + ", " + fmt(dt) + " s";
  return v;
}

Verdict performance() {
  const auto t = Clock::now();
  const fixtures::MotorLike motor = fixtures::motor_like();
  PipelineParams p;
  p.regions = motor_regions(motor, 0.1);
  p.remainder_tolerance = 0.1;
  const Decomposition small = interactive_decomposition(motor.mesh, p);
  const Decomposition large = uniform(motor.mesh, 0.005);
  const std::size_t ns = small.convex_parts.size(), nl = large.convex_parts.size();
  const std::uint64_t seed = 17;
  const BenchScene ss = build_scene(small, seed), sl = build_scene(large, seed);
  int wins = 0;
  std::string ratios;
  for (int run = 0; run < 5; ++run) {
    const double a = run_bench(ss, 40, seed).queries_per_second;
    const double b = run_bench(sl, 40, seed).queries_per_second;
    wins += a >= 1.5 * b;
    ratios += (run ? "/" : "") + fmt(a / b);
  }
  Verdict v;
  v.pass = nl >= 10 * ns && wins >= 4;
  v.detail = std::to_string(ns) + " vs " + std::to_string(nl) + " parts, throughput ratios " + ratios + ", " +
             std::to_string(wins) + "/5 runs >= 1.5, " + fmt(seconds_since(t)) + " s";
  return v;
}

Verdict boolean_conservation() {
  const std::vector<std::string> names = {"cube", "l-prism", "dumbbell", "ring", "dimpled-cube", "icosphere", "motor"};
  std::vector<TriangleMesh> meshes;
  for (const auto& n : names) meshes.push_back(fixtures::by_name(n));
  Rng rng(31337);
  double worst = 0.0;
  int leaky = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const TriangleMesh& mesh = meshes[trial % meshes.size()];
    const Aabb bounds = mesh_aabb(mesh);
    Vec3 lo, hi;
    for (int k = 0; k < 3; ++k) {
      double a = rng.uniform(bounds.min[k] - 0.1, bounds.max[k]);
      double b = rng.uniform(bounds.min[k], bounds.max[k] + 0.1);
      if (a > b) std::swap(a, b);
      if (b - a < 1e-3) b = a + 1e-3;
      lo[k] = a;
      hi[k] = b;
    }
    const Aabb box{lo, hi};
    const double vol = mesh_volume(mesh);
    const auto in = boolean_intersect_box(mesh, box);
    const std::vector<Aabb> boxes{box};
    const auto out = boolean_difference_boxes(mesh, boxes);
    leaky += (in && !validate(*in).watertight) + (out && !validate(*out).watertight);
    const double total = (in ? mesh_volume(*in) : 0.0) + (out ? mesh_volume(*out) : 0.0);
    worst = std::max(worst, std::abs(total - vol) / vol);
  }
  return {worst <= 1e-6 && leaky == 0,
          "50 pairs, worst relative volume error " + fmt(worst) + ", " + std::to_string(leaky) + " open outputs"};
}

Verdict convex_ops() {
  // Split conservation.
  Rng rng(2024);
  double split_worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const ConvexPart part = random_part(rng, 20);
    const Plane plane = Plane::through(rng.unit_vector(), part.centroid() + rng.unit_vector() * rng.uniform(0, 0.5));
    const SplitResult r = split_by_plane(part, plane);
    const double total = (r.inside ? r.inside->volume() : 0.0) + (r.outside ? r.outside->volume() : 0.0);
    split_worst = std::max(split_worst, std::abs(total - part.volume()) / part.volume());
  }
  // Hull containment: every input point inside every hull triangle's halfspace.
  Rng hr(11);
  double hull_worst = -std::numeric_limits<double>::infinity();
  bool hull_ok = true;
  for (int cloud = 0; cloud < 10; ++cloud) {
    std::vector<Vec3> pts;
    for (int i = 0; i < 200; ++i) pts.push_back(hr.unit_vector() * std::cbrt(hr.uniform()));
    const ConvexPart hull = convex_hull(pts);
    const TriangleMesh& m = hull.mesh();
    for (std::size_t f = 0; f < m.faces.size(); ++f) {
      const Plane pl = Plane::through(cross(m.corner(f, 1) - m.corner(f, 0), m.corner(f, 2) - m.corner(f, 0)), m.corner(f, 0));
      for (const Vec3& p : pts) {
        hull_worst = std::max(hull_worst, pl.signed_distance(p));
        hull_ok = hull_ok && pl.signed_distance(p) <= hull.convexity_tolerance();
      }
    }
  }
  // GJK against closest pairs of dense surface samples.
  Rng gr(99);
  int gjk_bad = 0;
  double gjk_worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const ConvexPart a = random_part(gr, 30), b = random_part(gr, 30);
    const Pose pb = Pose::translated(gr.unit_vector() * gr.uniform(1.0, 4.0));
    const std::size_t n = 2000;
    const std::vector<Vec3> sa = sample_surface(a.mesh(), n, 1 + i).points;
    std::vector<Vec3> sb = sample_surface(b.mesh(), n, 1000 + i).points;
    for (Vec3& p : sb) p = pb.apply(p);
    const double spacing = std::max(std::sqrt(surface_area(a.mesh()) / n), std::sqrt(surface_area(b.mesh()) / n));
    const double oracle = cloud_distance(sa, sb);
    const double d = gjk_distance(a, Pose::identity(), b, pb);
    gjk_worst = std::max(gjk_worst, (oracle - d) / spacing);
    gjk_bad += d > oracle + 1e-9 || oracle - d > 2.0 * spacing;
  }
  return {split_worst <= 1e-9 && hull_ok && gjk_bad == 0,
          "split worst " + fmt(split_worst) + ", hull worst signed distance " + fmt(hull_worst) + ", GJK " +
              std::to_string(gjk_bad) + "/100 outside (worst gap " + fmt(gjk_worst) + " spacings)"};
}

Verdict concavity_oracle() {
  const TriangleMesh l = fixtures::l_prism();
  double oracle = 0.0;
  for (const Vec3& p : sample_surface(l, 1000000, 12345).points) oracle = std::max(oracle, l_prism_concavity(p));
  const std::size_t n = 8192;
  const double phi = concavity(l, n, 7).value;
  bool ok = std::abs(oracle - 1.0 / std::sqrt(2.0)) <= 0.01 / std::sqrt(2.0) && std::abs(phi - oracle) <= 0.01 * oracle;
  std::string convex;
  for (const auto& [name, mesh] : {std::pair{"cube", fixtures::unit_cube()}, std::pair{"icosphere", fixtures::icosphere(3)}}) {
    const double c = concavity(mesh, n, 1).value;
    const double bound = 1e-9 + std::sqrt(surface_area(mesh) / double(n));
    ok = ok && c <= bound;
    convex += std::string(", ") + name + " " + fmt(c) + " (bound " + fmt(bound) + ")";
  }
  return {ok, "L-prism phi " + fmt(phi) + " vs oracle " + fmt(oracle) + convex};
}

// ---- Determinism across schedules and front ends ----

std::string run_cli(const std::string& args) {
  FILE* p = ::popen((std::string(RCD_CLI_PATH) + " " + args + " 2>/dev/null").c_str(), "r");
  if (!p) return {};
  std::string out;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, p)) > 0) out.append(buf, n);
  const int status = ::pclose(p);
  return WIFEXITED(status) && WEXITSTATUS(status) == 0 ? out : std::string("exit failure");
}

Verdict determinism(const std::vector<Case>& cs) {
  const auto t = Clock::now();
  const auto dir = std::filesystem::temp_directory_path() / ("rcd_accept_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);

  Service service(ServiceConfig{dir / "store", 1, 1});
  httplib::Server server;
  service.mount(server);
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread listener([&] { server.listen_after_bind(); });
  server.wait_until_ready();
  httplib::Client client("127.0.0.1", port);

  Verdict v{true, ""};
  for (const Case& c : cs) {
    const std::string obj = (dir / (c.name + ".obj")).string();
    save_mesh(c.mesh, obj);
    const TriangleMesh loaded = load_mesh(obj);
    PipelineParams p1 = c.params, pn = c.params;
    p1.threads = 1;
    pn.threads = 4;
    const std::string one = manifest_text(interactive_decomposition(loaded, p1), p1);
    const bool threads_ok = one == manifest_text(interactive_decomposition(loaded, pn), pn);

    const std::string regions = (dir / (c.name + ".json")).string();
    write_file(regions, params_json(c.params).dump());
    bool cli_ok = true;
    for (int th : {1, 4}) {
      const std::string out = (dir / (c.name + "_cli" + std::to_string(th))).string();
      run_cli("--threads " + std::to_string(th) + " decompose " + obj + " --regions " + regions + " -o " + out);
      cli_ok = cli_ok && std::filesystem::exists(out + "/manifest.json") && read_file(out + "/manifest.json") == one;
    }

    bool svc_ok = false;
    const auto up = client.Post("/meshes", read_file(obj), "text/plain");
    if (up && up->status == 200) {
      const Json body = {{"mesh_id", Json::parse(up->body)["mesh_id"]}, {"kind", "decompose"}, {"params", params_json(c.params)}};
      const auto job = client.Post("/jobs", body.dump(), "application/json");
      if (job && job->status == 202) {
        const std::string id = Json::parse(job->body)["job_id"];
        svc_ok = service.wait(id).state == JobState::Done && read_file(service.job_dir(id) / "manifest.json") == one;
      }
    }
    const bool ok = threads_ok && cli_ok && svc_ok;
    v.pass = v.pass && ok;
    v.detail += c.name + (ok ? " ok, " : std::string(" differs (threads ") + (threads_ok ? "ok" : "x") + ", cli " +
                                             (cli_ok ? "ok" : "x") + ", service " + (svc_ok ? "ok" : "x") + "), ");
  }
  server.stop();
  listener.join();
  std::filesystem::remove_all(dir);
  v.detail += fmt(seconds_since(t)) + " s";
  return v;
}

Verdict error_sample_branches() {
  const TriangleMesh dimpled = fixtures::dimpled_cube();
  const TriangleMesh cube = fixtures::unit_cube();
  const Aabb dimple{{0.25, 0.25, 0.7}, {0.75, 0.75, 1.05}};
  const std::vector<ConvexPart> parts = {box_part({{0, 0, 0}, {1, 1, 1}})};
  bool ok = true;
  // Distances are to the nearest of n samples of the other surface, so each
  // lies between the true surface distance and that plus two sample spacings.
  double cloud_gap = 0.0;
  auto check_distance = [&](double reported, double exact, double ref_spacing) {
    cloud_gap = std::max(cloud_gap, (reported - exact) / ref_spacing);
    return reported >= exact - 1e-12 && reported - exact <= 2.0 * ref_spacing;
  };

  // Original side, filtered to the dimple; β fixed so that clamping happens.
  ErrorSampleOptions o;
  o.beta = 0.1;
  o.filter_boxes = {dimple};
  o.seed = 8;
  const ErrorSampleSet s = error_samples(dimpled, parts, {}, o);
  const double spacing = std::sqrt(surface_area(dimpled) / double(o.n));
  ok = ok && !s.points.empty() && s.points.size() < o.n;
  const double cube_spacing = std::sqrt(surface_area(cube) / double(o.n));
  double dmax = 0.0;
  for (std::size_t i = 0; i < s.points.size(); ++i) {
    ok = ok && dimple.contains(s.points[i]);
    ok = ok && check_distance(s.distances[i], brute_distance(cube, s.points[i]), cube_spacing);
    dmax = std::max(dmax, s.distances[i]);
    const double t = std::clamp(s.distances[i] / 0.1, 0.0, 1.0);
    const auto g = static_cast<std::uint8_t>(std::lround(255.0 * (1.0 - t)));
    ok = ok && s.normalized[i] == t && s.colors[i] == std::array<std::uint8_t, 3>{255, g, g};
  }
  ok = ok && std::abs(dmax - 0.2) <= spacing;

  // Approximation side: the filter does not apply, β defaults to the maximum.
  ErrorSampleOptions a;
  a.on_approx = true;
  a.filter_boxes = {dimple};
  a.seed = 8;
  const ErrorSampleSet sa = error_samples(dimpled, parts, {}, a);
  ok = ok && sa.points.size() == a.n;
  double amax = 0.0;
  for (std::size_t i = 0; i < sa.points.size(); ++i) {
    ok = ok && check_distance(sa.distances[i], brute_distance(dimpled, sa.points[i]), spacing);
    amax = std::max(amax, sa.distances[i]);
  }
  const double centre = 0.2 * 0.2 / std::sqrt(0.08);
  ok = ok && std::abs(amax - centre) <= spacing && sa.beta == amax;
  for (std::size_t i = 0; i < sa.points.size(); ++i) ok = ok && sa.normalized[i] == std::clamp(sa.distances[i] / amax, 0.0, 1.0);
  return {ok, "original-side max " + fmt(dmax) + " (0.2 +- " + fmt(spacing) + "), approx-side max " + fmt(amax) + " (" +
                  fmt(centre) + "), worst gap to surface distance " + fmt(cloud_gap) + " spacings"};
}

}  // namespace

int main(int argc, char** argv) {
  // Optional arguments pick criteria by number; default is all of them.
  std::set<std::string> only(argv + 1, argv + argc);
  const std::vector<Case> cs = suite();
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
      {"1 constraint satisfaction", [&] { return constraints(cs); }},
      {"2 tolerance guarantee", [&] { return tolerance(cs); }},
      {"3 fewer parts", fewer_parts},
      {"4 performance direction", performance},
      {"5 boolean conservation", boolean_conservation},
      {"6 convex-ops oracles", convex_ops},
      {"7 concavity oracle", concavity_oracle},
      {"8 determinism", [&] { return determinism(cs); }},
      {"9 error sample branches", error_sample_branches},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    if (!only.empty() && !only.count(name.substr(0, name.find(' ')))) continue;
    Verdict v;
    try {
      v = check();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failed += !v.pass;
    std::cout << (v.pass ? "PASS " : "FAIL ") << name << ": " << v.detail << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
