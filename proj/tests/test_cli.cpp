#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>

#include "rcd/fixtures.hpp"
#include "rcd/io.hpp"

using namespace rcd;

namespace {

struct Outcome {
  int code = -1;
  std::string out;
  std::string err;
};

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = std::filesystem::temp_directory_path() /
           ("rcd_cli_" + std::to_string(::getpid()) + "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    std::filesystem::remove_all(dir_);
    std::filesystem::create_directories(dir_);
  }
  void TearDown() override { std::filesystem::remove_all(dir_); }

  Outcome run(const std::string& args) const {
    const auto err = dir_ / "stderr.txt";
    const std::string cmd = std::string(RCD_CLI_PATH) + " " + args + " 2>" + err.string();
    Outcome r;
    FILE* p = ::popen(cmd.c_str(), "r");
    if (!p) return r;
    char buf[4096];
    std::size_t n;
    while ((n = std::fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
    const int status = ::pclose(p);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.err = read_file(err);
    return r;
  }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  std::filesystem::path dir_;
};

const char* kNotchRegions = R"({"regions":[{"id":"notch","min":[0.5,0.5,-0.1],"max":[2.1,2.1,1.1],"tolerance":0}],
                               "remainder_tolerance":0.2})";

}  // namespace

TEST_F(Cli, DecomposeMatchesLibrary) {
  ASSERT_EQ(run("fixture l-prism -o " + path("l.obj")).code, 0);
  write_file(path("regions.json"), kNotchRegions);
  const Outcome r = run("decompose " + path("l.obj") + " --regions " + path("regions.json") + " -o " + path("out"));
  ASSERT_EQ(r.code, 0) << r.err;
  const Json summary = Json::parse(r.out);
  EXPECT_EQ(summary["exact_count"], 1);

  const PipelineParams p = parse_params(kNotchRegions);
  const std::string expected = manifest_text(interactive_decomposition(load_mesh(path("l.obj")), p), p);
  EXPECT_EQ(read_file(path("out") + "/manifest.json"), expected);

  // Thread count does not change the output.
  ASSERT_EQ(run("--threads 3 decompose " + path("l.obj") + " --regions " + path("regions.json") + " -o " + path("out3")).code, 0);
  EXPECT_EQ(read_file(path("out3") + "/manifest.json"), expected);
}

TEST_F(Cli, NoRegionsOnCubeIsOnePart) {
  ASSERT_EQ(run("fixture cube -o " + path("c.stl")).code, 0);
  const Outcome r = run("decompose " + path("c.stl") + " -o " + path("out"));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(Json::parse(r.out)["part_count"], 1);
}

TEST_F(Cli, EvaluateExactRegionIsZero) {
  ASSERT_EQ(run("fixture l-prism -o " + path("l.obj")).code, 0);
  write_file(path("regions.json"), kNotchRegions);
  ASSERT_EQ(run("decompose " + path("l.obj") + " --regions " + path("regions.json") + " -o " + path("out")).code, 0);
  const Outcome r = run("evaluate " + path("l.obj") + " --parts " + path("out") + " --regions " + path("regions.json") +
                    " -n 2000 --lambda-err 1");
  ASSERT_EQ(r.code, 0) << r.err;
  const Json j = Json::parse(r.out);
  EXPECT_LE(j["regions"][0]["region_error"].get<double>(), 1e-9);
  EXPECT_TRUE(j.contains("objective"));
}

TEST_F(Cli, SamplesAndBench) {
  ASSERT_EQ(run("fixture dimpled-cube -o " + path("d.obj")).code, 0);
  ASSERT_EQ(run("decompose " + path("d.obj") + " --remainder-eps 0.1 -o " + path("out")).code, 0);
  const Outcome s = run("samples " + path("d.obj") + " --parts " + path("out") + " -n 300 -o " + path("s.ply"));
  ASSERT_EQ(s.code, 0) << s.err;
  EXPECT_NE(read_file(path("s.ply")).find("element vertex 300"), std::string::npos);
  const Outcome b = run("bench --parts " + path("out") + " --steps 3");
  ASSERT_EQ(b.code, 0) << b.err;
  EXPECT_TRUE(Json::parse(b.out).contains("proxy_rtf"));
}

TEST_F(Cli, ValidationErrorsExitTwo) {
  ASSERT_EQ(run("fixture cube -o " + path("c.obj")).code, 0);
  write_file(path("overlap.json"), R"({"regions":[{"id":"a","min":[0,0,0],"max":[1,1,1],"tolerance":0.1},
                                                  {"id":"b","min":[0.5,0.5,0.5],"max":[2,2,2],"tolerance":0.1}]})");
  const Outcome r = run("--json-errors decompose " + path("c.obj") + " --regions " + path("overlap.json") + " -o " + path("o"));
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(Json::parse(r.err)["error"]["code"], "OverlappingRegions");
  EXPECT_EQ(run("decompose " + path("missing.obj") + " -o " + path("o")).code, 2);
  write_file(path("bad.json"), "{nope");
  EXPECT_EQ(run("decompose " + path("c.obj") + " --regions " + path("bad.json") + " -o " + path("o")).code, 2);
  EXPECT_EQ(run("fixture teapot -o " + path("t.obj")).code, 2);
}
