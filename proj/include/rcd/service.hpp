#pragma once

#include <zlib.h>

#include <atomic>
#include <condition_variable>
#include <deque>
#include <filesystem>
#include <map>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <thread>
#include <vector>

#include "httplib.h"
#include "rcd/io.hpp"

namespace rcd {

inline constexpr std::size_t kMaxUploadBytes = 100u * 1024u * 1024u;

// Minimal zip writer, stored entries only.
class ZipWriter {
 public:
  void add(const std::string& name, const std::string& data) {
    const auto crc = static_cast<std::uint32_t>(
        ::crc32(0L, reinterpret_cast<const Bytef*>(data.data()), static_cast<uInt>(data.size())));
    const auto offset = static_cast<std::uint32_t>(out_.size());
    put32(out_, 0x04034b50);
    header(out_, name, data.size(), crc);
    out_ += name;
    out_ += data;
    put32(central_, 0x02014b50);
    put16(central_, 20);  // version made by
    header(central_, name, data.size(), crc);
    put16(central_, 0);  // comment
    put16(central_, 0);  // disk
    put16(central_, 0);  // internal attrs
    put32(central_, 0);  // external attrs
    put32(central_, offset);
    central_ += name;
    ++entries_;
  }

  std::string finish() {
    std::string z = out_;
    const auto cd_offset = static_cast<std::uint32_t>(z.size());
    z += central_;
    put32(z, 0x06054b50);
    put16(z, 0);
    put16(z, 0);
    put16(z, entries_);
    put16(z, entries_);
    put32(z, static_cast<std::uint32_t>(central_.size()));
    put32(z, cd_offset);
    put16(z, 0);
    return z;
  }

 private:
  static void put16(std::string& s, std::uint16_t v) {
    s += char(v & 0xff);
    s += char(v >> 8);
  }
  static void put32(std::string& s, std::uint32_t v) {
    put16(s, std::uint16_t(v & 0xffff));
    put16(s, std::uint16_t(v >> 16));
  }
  static void header(std::string& s, const std::string& name, std::size_t size, std::uint32_t crc) {
    put16(s, 20);  // version needed
    put16(s, 0);   // flags
    put16(s, 0);   // stored
    put16(s, 0);   // time
    put16(s, 0x21);  // date 1980-01-01
    put32(s, crc);
    put32(s, static_cast<std::uint32_t>(size));
    put32(s, static_cast<std::uint32_t>(size));
    put16(s, static_cast<std::uint16_t>(name.size()));
    put16(s, 0);  // extra
  }

  std::string out_, central_;
  std::uint16_t entries_ = 0;
};

struct ServiceConfig {
  std::filesystem::path data_dir = "rcd-data";
  std::size_t max_jobs = 2;
  std::size_t threads = 1;  // pipeline workers per job
};

enum class JobState { Queued, Running, Done, Failed };

inline std::string to_string(JobState s) {
  switch (s) {
    case JobState::Queued: return "queued";
    case JobState::Running: return "running";
    case JobState::Done: return "done";
    case JobState::Failed: return "failed";
  }
  return "failed";
}

inline JobState job_state_from(const std::string& s) {
  if (s == "queued") return JobState::Queued;
  if (s == "running") return JobState::Running;
  if (s == "done") return JobState::Done;
  return JobState::Failed;
}

struct Job {
  std::string id;
  std::string kind;  // decompose, error_eval, bench
  std::string mesh_id;
  Json params = Json::object();
  JobState state = JobState::Queued;
  double progress = 0.0;
  std::string error;
};

inline std::string content_id(std::string_view bytes) {
  std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// Disk-backed store and job runner behind the HTTP routes. Files live under
// data_dir: meshes/<id>.obj, jobs/<id>/..., and index.json.
class Service {
 public:
  explicit Service(ServiceConfig cfg) : cfg_(std::move(cfg)) {
    std::filesystem::create_directories(cfg_.data_dir / "meshes");
    std::filesystem::create_directories(cfg_.data_dir / "jobs");
    load_index();
    for (std::size_t i = 0; i < std::max<std::size_t>(1, cfg_.max_jobs); ++i) workers_.emplace_back([this] { work(); });
  }

  ~Service() {
    {
      std::lock_guard lk(queue_mu_);
      stop_ = true;
    }
    queue_cv_.notify_all();
    for (auto& t : workers_) t.join();
  }

  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  void mount(httplib::Server& srv) {
    srv.set_payload_max_length(kMaxUploadBytes);
    srv.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                             {"Access-Control-Allow-Methods", "GET, POST, PUT, OPTIONS"},
                             {"Access-Control-Allow-Headers", "Content-Type"}});
    srv.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
    srv.Post("/meshes", [this](const auto& req, auto& res) { guard(res, [&] { upload(req, res); }); });
    srv.Get(R"(/meshes/([0-9a-f]+))", [this](const auto& req, auto& res) { guard(res, [&] { get_mesh(req, res); }); });
    srv.Put(R"(/meshes/([0-9a-f]+)/regions)",
            [this](const auto& req, auto& res) { guard(res, [&] { put_regions(req, res); }); });
    srv.Post("/jobs", [this](const auto& req, auto& res) { guard(res, [&] { post_job(req, res); }); });
    srv.Get(R"(/jobs/([\w-]+))", [this](const auto& req, auto& res) { guard(res, [&] { get_job(req, res); }); });
    srv.Get(R"(/jobs/([\w-]+)/result)", [this](const auto& req, auto& res) { guard(res, [&] { get_result(req, res); }); });
    srv.Get(R"(/jobs/([\w-]+)/files/([\w.]+))",
            [this](const auto& req, auto& res) { guard(res, [&] { get_file(req, res); }); });
    srv.Post("/evaluate/error", [this](const auto& req, auto& res) { guard(res, [&] { evaluate(req, res); }); });
    srv.Get(R"(/export/([\w-]+))", [this](const auto& req, auto& res) { guard(res, [&] { export_zip(req, res); }); });
  }

  // Blocks until the job leaves the queue; for tests and the CLI.
  Job wait(const std::string& id) {
    std::unique_lock lk(mu_);
    done_cv_.wait(lk, [&] {
      const auto it = jobs_.find(id);
      return it == jobs_.end() || it->second.state == JobState::Done || it->second.state == JobState::Failed;
    });
    return jobs_.at(id);
  }

  std::filesystem::path job_dir(const std::string& id) const { return cfg_.data_dir / "jobs" / id; }

 private:
  struct HttpError {
    int status;
    Json body;
  };

  [[noreturn]] static void fail(int status, const std::string& code, const std::string& msg) {
    throw HttpError{status, {{"error", {{"code", code}, {"message", msg}}}}};
  }

  template <class F>
  static void guard(httplib::Response& res, F&& f) {
    try {
      f();
    } catch (const HttpError& e) {
      res.status = e.status;
      res.set_content(e.body.dump(), "application/json");
    } catch (const Error& e) {
      res.status = e.is_validation() ? 422 : 500;
      res.set_content(error_json(e).dump(), "application/json");
    } catch (const Json::exception& e) {
      res.status = 422;
      res.set_content(Json{{"error", {{"code", "InvalidArgument"}, {"message", e.what()}}}}.dump(), "application/json");
    } catch (const std::exception& e) {
      res.status = 500;
      res.set_content(Json{{"error", {{"code", "Internal"}, {"message", e.what()}}}}.dump(), "application/json");
    }
  }

  static void reply(httplib::Response& res, const Json& j, int status = 200) {
    res.status = status;
    res.set_content(j.dump(), "application/json");
  }

  static Json body_json(const httplib::Request& req) {
    try {
      return Json::parse(req.body);
    } catch (const Json::parse_error& e) {
      throw Error(ErrorCode::ParseError, std::string("invalid JSON body: ") + e.what());
    }
  }

  // ---- store ----

  void load_index() {
    const auto path = cfg_.data_dir / "index.json";
    if (!std::filesystem::exists(path)) return;
    const Json idx = Json::parse(read_file(path));
    const Json meshes = idx.value("meshes", Json::object());
    const Json jobs = idx.value("jobs", Json::object());
    for (const auto& [id, m] : meshes.items()) meshes_[id] = m;
    for (const auto& [id, j] : jobs.items()) {
      Job job{id,
              j.at("kind").get<std::string>(),
              j.at("mesh_id").get<std::string>(),
              j.value("params", Json::object()),
              job_state_from(j.at("state").get<std::string>()),
              j.value("progress", 0.0),
              j.value("error", std::string())};
      // Work in flight when the service stopped is not resumed.
      if (job.state == JobState::Queued || job.state == JobState::Running) {
        job.state = JobState::Failed;
        job.error = "interrupted by service restart";
      }
      jobs_[id] = job;
    }
    next_job_ = idx.value("next_job", std::size_t{1});
  }

  // Caller holds mu_ exclusively.
  void save_index() const {
    Json jobs = Json::object();
    for (const auto& [id, j] : jobs_)
      jobs[id] = {{"kind", j.kind}, {"mesh_id", j.mesh_id}, {"params", j.params}, {"state", to_string(j.state)},
                  {"progress", j.progress}, {"error", j.error}};
    const Json idx = {{"meshes", meshes_}, {"jobs", jobs}, {"next_job", next_job_}};
    const auto tmp = cfg_.data_dir / "index.json.tmp";
    write_file(tmp, idx.dump(1));
    std::filesystem::rename(tmp, cfg_.data_dir / "index.json");
  }

  Json mesh_record(const std::string& id) const {
    std::shared_lock lk(mu_);
    const auto it = meshes_.find(id);
    if (it == meshes_.end()) fail(404, "NotFound", "unknown mesh '" + id + "'");
    return it->second;
  }

  TriangleMesh load_stored_mesh(const std::string& id) const {
    mesh_record(id);
    LoadOptions opt;
    opt.format = MeshFormat::Obj;
    return load_mesh(cfg_.data_dir / "meshes" / (id + ".obj"), opt);
  }

  Job job_record(const std::string& id) const {
    std::shared_lock lk(mu_);
    const auto it = jobs_.find(id);
    if (it == jobs_.end()) fail(404, "NotFound", "unknown job '" + id + "'");
    return it->second;
  }

  Job done_job(const std::string& id) const {
    Job j = job_record(id);
    if (j.state != JobState::Done) fail(409, "JobNotDone", "job '" + id + "' is " + to_string(j.state));
    return j;
  }

  // ---- routes ----

  void upload(const httplib::Request& req, httplib::Response& res) {
    std::string bytes = req.body;
    if (req.is_multipart_form_data()) {
      if (req.files.empty()) throw Error(ErrorCode::ParseError, "multipart upload has no file");
      bytes = req.files.begin()->second.content;
    }
    if (bytes.size() > kMaxUploadBytes) fail(413, "PayloadTooLarge", "mesh exceeds 100 MB");
    LoadOptions opt;
    opt.force = true;
    const TriangleMesh mesh = parse_mesh(bytes, opt);
    const ValidationReport v = validate(mesh);
    if (!v.watertight) {
      reply(res, {{"error", {{"code", "NotWatertight"}, {"message", "mesh is not watertight"}}}, {"validation", validation_json(v)}},
            422);
      return;
    }
    const std::string obj = to_obj(mesh);
    const std::string id = content_id(obj);
    const Aabb b = mesh_aabb(mesh);
    const Json record = {{"mesh_id", id},
                         {"validation", validation_json(v)},
                         {"bounds", {{"min", detail::vec3_json(b.min)}, {"max", detail::vec3_json(b.max)}}},
                         {"volume", mesh_volume(mesh)}};
    {
      std::unique_lock lk(mu_);
      write_file(cfg_.data_dir / "meshes" / (id + ".obj"), obj);
      Json& slot = meshes_[id];
      const Json regions = slot.contains("regions") ? slot["regions"] : Json();
      slot = record;
      if (!regions.is_null()) slot["regions"] = regions;
      save_index();
    }
    reply(res, {{"mesh_id", id}, {"validation", validation_json(v)}});
  }

  void get_mesh(const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.matches[1];
    const Json rec = mesh_record(id);
    if (req.has_param("download")) {
      res.set_content(read_file(cfg_.data_dir / "meshes" / (id + ".obj")), "text/plain");
      return;
    }
    Json out = rec;
    out["download"] = "/meshes/" + id + "?download=1";
    reply(res, out);
  }

  void put_regions(const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.matches[1];
    const TriangleMesh mesh = load_stored_mesh(id);
    const Json body = body_json(req);
    const PipelineParams p = params_from_json(body);
    const RegionValidation v = validate_regions(mesh, p.regions);
    {
      std::unique_lock lk(mu_);
      meshes_[id]["regions"] = params_json(p);
      save_index();
    }
    reply(res, {{"valid", true}, {"warnings", v.warnings}, {"empty", v.empty}});
  }

  void post_job(const httplib::Request& req, httplib::Response& res) {
    const Json body = body_json(req);
    Job job;
    job.mesh_id = body.at("mesh_id").get<std::string>();
    job.kind = body.value("kind", "decompose");
    job.params = body.value("params", Json::object());
    if (job.kind != "decompose" && job.kind != "error_eval" && job.kind != "bench")
      throw Error(ErrorCode::InvalidArgument, "unknown job kind '" + job.kind + "'");
    const Json rec = mesh_record(job.mesh_id);
    if (job.kind == "decompose") {
      // Explicit params win; otherwise the mesh's stored regions are used.
      Json p = job.params.contains("regions") || !rec.contains("regions") ? job.params : rec["regions"];
      for (const char* k : {"remainder_tolerance", "merge_tolerance", "seed"})
        if (job.params.contains(k)) p[k] = job.params[k];
      if (job.params.contains("threads")) p["threads"] = job.params["threads"];
      validate_regions(load_stored_mesh(job.mesh_id), params_from_json(p).regions);
      job.params = p;
    } else {
      const std::string ref = job.params.at("job_id").get<std::string>();
      const Job src = job_record(ref);
      if (src.kind != "decompose") throw Error(ErrorCode::InvalidArgument, "job '" + ref + "' is not a decomposition");
    }
    {
      std::unique_lock lk(mu_);
      job.id = "job-" + std::to_string(next_job_++);
      jobs_[job.id] = job;
      save_index();
    }
    {
      std::lock_guard lk(queue_mu_);
      queue_.push_back(job.id);
    }
    queue_cv_.notify_one();
    reply(res, {{"job_id", job.id}}, 202);
  }

  static Json job_json(const Job& j) {
    Json out = {{"job_id", j.id}, {"kind", j.kind},         {"mesh_id", j.mesh_id},
                {"state", to_string(j.state)}, {"progress", j.progress}};
    if (j.state == JobState::Failed) out["error"] = j.error;
    if (j.state == JobState::Done) out["result"] = "/jobs/" + j.id + "/result";
    return out;
  }

  void get_job(const httplib::Request& req, httplib::Response& res) { reply(res, job_json(job_record(req.matches[1]))); }

  void get_result(const httplib::Request& req, httplib::Response& res) {
    const Job j = done_job(req.matches[1]);
    const Json r = Json::parse(read_file(job_dir(j.id) / (j.kind == "decompose" ? "manifest.json" : "report.json")));
    if (j.kind != "decompose") {
      reply(res, r);
      return;
    }
    Json files = Json::array();
    for (const Json& p : r["parts"]) files.push_back("/jobs/" + j.id + "/files/" + p["file"].get<std::string>());
    reply(res, {{"manifest", r}, {"files", files}, {"export", "/export/" + j.id}});
  }

  void get_file(const httplib::Request& req, httplib::Response& res) {
    const Job j = done_job(req.matches[1]);
    const std::string name = req.matches[2];
    const auto path = job_dir(j.id) / name;
    if (name.find("..") != std::string::npos || !std::filesystem::exists(path))
      fail(404, "NotFound", "no file '" + name + "'");
    res.set_content(read_file(path), name.ends_with(".json") ? "application/json" : "text/plain");
  }

  void evaluate(const httplib::Request& req, httplib::Response& res) {
    const Json body = body_json(req);
    const TriangleMesh mesh = load_stored_mesh(body.at("mesh_id").get<std::string>());
    const Job src = done_job(body.at("job_id").get<std::string>());
    const Decomposition d = read_decomposition(job_dir(src.id));
    ErrorSampleOptions opt;
    opt.on_approx = body.value("on_approx", false);
    opt.n = body.value("n", kDefaultErrorSamples);
    opt.seed = body.value("seed", kDefaultSeed);
    opt.alpha = body.value("alpha", 0.0);
    if (body.contains("beta") && !body["beta"].is_null()) opt.beta = body["beta"].get<double>();
    if (body.contains("colormap")) opt.colormap = colormap_from_string(body["colormap"].get<std::string>());
    if (body.contains("regions")) {
      Json wrap = body["regions"].is_array() ? Json{{"regions", body["regions"]}} : body["regions"];
      for (const RegionBox& r : params_from_json(wrap).regions) opt.filter_boxes.push_back(r.box);
    }
    std::vector<TriangleMesh> exact;
    for (const ExactMesh& e : d.exact_meshes) exact.push_back(e.mesh);
    reply(res, error_samples_json(error_samples(mesh, d.parts(), exact, opt)));
  }

  void export_zip(const httplib::Request& req, httplib::Response& res) {
    const Job j = done_job(req.matches[1]);
    if (j.kind != "decompose") throw Error(ErrorCode::InvalidArgument, "only decompositions can be exported");
    const auto dir = job_dir(j.id);
    const Json m = Json::parse(read_file(dir / "manifest.json"));
    ZipWriter zip;
    for (const Json& p : m["parts"]) {
      const std::string f = p["file"].get<std::string>();
      zip.add(f, read_file(dir / f));
    }
    zip.add("manifest.json", read_file(dir / "manifest.json"));
    res.set_header("Content-Disposition", "attachment; filename=\"" + j.id + ".zip\"");
    res.set_content(zip.finish(), "application/zip");
  }

  // ---- jobs ----

  void set_state(const std::string& id, JobState s, double progress, const std::string& err = "") {
    {
      std::unique_lock lk(mu_);
      Job& j = jobs_.at(id);
      j.state = s;
      j.progress = progress;
      j.error = err;
      save_index();
    }
    done_cv_.notify_all();
  }

  void work() {
    for (;;) {
      std::string id;
      {
        std::unique_lock lk(queue_mu_);
        queue_cv_.wait(lk, [&] { return stop_ || !queue_.empty(); });
        if (stop_ && queue_.empty()) return;
        id = queue_.front();
        queue_.pop_front();
      }
      const Job job = job_record(id);
      set_state(id, JobState::Running, 0.1);
      try {
        run(job);
        set_state(id, JobState::Done, 1.0);
      } catch (const std::exception& e) {
        set_state(id, JobState::Failed, 1.0, e.what());
      }
    }
  }

  void run(const Job& job) {
    const TriangleMesh mesh = load_stored_mesh(job.mesh_id);
    const auto dir = job_dir(job.id);
    std::filesystem::create_directories(dir);
    if (job.kind == "decompose") {
      PipelineParams p = params_from_json(job.params);
      p.threads = job.params.value("threads", cfg_.threads);
      write_decomposition(dir, interactive_decomposition(mesh, p), p);
      return;
    }
    const std::string ref = job.params.at("job_id").get<std::string>();
    const Job src = job_record(ref);
    if (src.state != JobState::Done) throw Error(ErrorCode::InvalidArgument, "decomposition job '" + ref + "' is not done");
    const Decomposition d = read_decomposition(job_dir(ref));
    const std::uint64_t seed = job.params.value("seed", kDefaultSeed);
    Json report;
    if (job.kind == "error_eval") {
      const PipelineParams p = params_from_json(src.params);
      const std::vector<RegionBox> regions = job.params.contains("regions")
                                                 ? params_from_json(Json{{"regions", job.params["regions"]}}).regions
                                                 : p.regions;
      report = region_report_json(evaluate_regions(mesh, d, regions, job.params.value("n", kDefaultErrorSamples), seed));
    } else {
      const BenchScene scene = build_scene(d, seed);
      report = perf_json(run_bench(scene, job.params.value("steps", std::size_t{100}), seed, reference_rate()));
    }
    write_file(dir / "report.json", report.dump(2) + "\n");
  }

  ServiceConfig cfg_;
  mutable std::shared_mutex mu_;
  std::condition_variable_any done_cv_;
  std::map<std::string, Json> meshes_;
  std::map<std::string, Job> jobs_;
  std::size_t next_job_ = 1;

  std::mutex queue_mu_;
  std::condition_variable queue_cv_;
  std::deque<std::string> queue_;
  bool stop_ = false;
  std::vector<std::thread> workers_;
};

// Runs the HTTP service until the process is stopped.
inline int serve(const ServiceConfig& cfg, const std::string& host, int port) {
  Service service(cfg);
  httplib::Server srv;
  service.mount(srv);
  if (!srv.listen(host, port)) throw Error(ErrorCode::IoError, "cannot listen on " + host + ":" + std::to_string(port));
  return 0;
}

}  // namespace rcd
