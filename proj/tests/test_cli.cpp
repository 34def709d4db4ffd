#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <random>
#include <string>

#include "kohn/io.hpp"

using namespace kohn;
namespace fs = std::filesystem;
using io::json;

namespace {

const fs::path& root() {
  static const fs::path p = [] {
    auto d = fs::temp_directory_path() / ("kohnlab_cli_" + std::to_string(std::random_device{}()));
    fs::create_directories(d);
    return d;
  }();
  return p;
}

struct Cleanup {
  ~Cleanup() { fs::remove_all(root()); }
} cleanup;

int run(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + (env.empty() ? "" : " ") + "\"" KOHNLAB_CLI "\" " + args + " > \"" +
                          (root() / "last.log").string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string path(const std::string& name) { return "\"" + (root() / name).string() + "\""; }

std::string write_config(const std::string& name, const json& j) {
  io::write_json(root() / name, j);
  return path(name);
}

json base_config() {
  return json::parse(R"({
    "q": 1,
    "mesh": {"h": 0.2},
    "spectrum": {"synth": {"n": 4, "dims": [2, 3, 3, 2], "lambdas": [0], "seed": 11, "ranks": [1, 1, 1]}}
  })");
}

}  // namespace

TEST_CASE("help and usage errors") {
  CHECK(run("--help") == 0);
  CHECK(run("") == 2);
  CHECK(run("no-such-command") == 2);
  CHECK(run("solve-box") == 2);
}

TEST_CASE("mesh build") {
  CHECK(run("mesh build --disc 0,2,1 --size 0.2 -o " + path("mesh")) == 0);
  CHECK(fs::exists(root() / "mesh" / "nodes.csv"));
  CHECK(fs::exists(root() / "mesh" / "triangles.csv"));
  CHECK(run("mesh build --disc 0,-2,1 --size 0.2 -o " + path("bad_mesh")) == 2);
}

TEST_CASE("spectrum synth and validate") {
  CHECK(run("spectrum synth -n 4 --dims 2,3,3,2 --lambdas 0,1 --seed 4 -o " + path("spec.json")) == 0);
  CHECK(run("spectrum validate " + path("spec.json")) == 0);
  io::write_json(root() / "labels.json",
                 json::parse(R"({"meta": {"n": 3}, "labels": [{"q": 1, "gamma": 0, "lambda": -1}]})"));
  CHECK(run("spectrum validate " + path("labels.json")) == 4);
}

TEST_CASE("solve-box roundtrip") {
  const auto cfg = write_config("box.json", base_config());
  REQUIRE(run("form random -c " + cfg + " --seed 3 -o " + path("phi")) == 0);
  REQUIRE(run("form apply -c " + cfg + " --op box-plus-one -i " + path("phi") + " -o " + path("f")) == 0);
  REQUIRE(run("solve-box -c " + cfg + " -i " + path("f") + " -o " + path("u")) == 0);
  const auto residuals = io::read_json(root() / "u" / "residuals.json");
  CHECK(residuals.at("residual").get<double>() < 1e-10);
  CHECK(fs::exists(root() / "u" / "constants.csv"));
  CHECK(fs::exists(root() / "u" / "constants.vl.json"));

  const auto config = io::config_from_json(base_config());
  const auto ctx = io::make_context(config);
  const auto phi = io::read_form(ctx, root() / "phi");
  auto diff = io::read_form(ctx, root() / "u" / "solution");
  diff.axpy(-1.0, phi);
  CHECK(diff.norm() < 1e-8 * phi.norm());
}

TEST_CASE("zero input") {
  const auto cfg = write_config("zero.json", base_config());
  REQUIRE(run("form random -c " + cfg + " --zero -o " + path("zero_f")) == 0);
  CHECK(run("solve-box -c " + cfg + " -i " + path("zero_f") + " -o " + path("zero_u")) == 0);
  CHECK(run("solve-dbar -c " + cfg + " -i " + path("zero_f") + " -o " + path("zero_phi")) == 0);
}

TEST_CASE("configuration errors") {
  auto j = base_config();
  j["q"] = 0;
  j["box"] = {{"mode", "kernel_orthogonal"}};
  const auto cfg = write_config("q0.json", j);
  CHECK(run("solve-box -c " + cfg + " -i " + path("phi") + " -o " + path("q0_out")) == 2);
  CHECK(run("experiment bogus") == 2);
  const auto good = write_config("deg.json", base_config());
  REQUIRE(run("form random -c " + good + " --degree 2 --seed 5 -o " + path("deg2")) == 0);
  CHECK(run("solve-box -c " + good + " -i " + path("deg2") + " -o " + path("deg_out")) == 2);
}

TEST_CASE("dbar rejection") {
  const auto cfg = write_config("dbar.json", base_config());
  REQUIRE(run("form random -c " + cfg + " --seed 6 -o " + path("varsigma")) == 0);
  CHECK(run("solve-dbar -c " + cfg + " -i " + path("varsigma") + " -o " + path("dbar_out")) == 4);
}

TEST_CASE("experiment verdict exit codes") {
  CHECK(run("experiment disc -o " + path("reports")) == 0);
  CHECK(fs::exists(root() / "reports" / "disc" / "report.json"));

  auto strict = base_config();
  strict["experiments"] = {{"disc", {{"min_drop", 1e9}}}};
  CHECK(run("experiment disc -c " + write_config("strict.json", strict) + " -o " + path("reports")) == 5);

  auto unstable = base_config();
  unstable.erase("spectrum");
  unstable["experiments"] = {
      {"sweep", {{"kind", "transverse"}, {"sample", 3}, {"h_levels", {0.2, 0.1}}, {"test_fields", 1}, {"tol", 0.0}}}};
  CHECK(run("experiment sweep -c " + write_config("unstable.json", unstable) + " -o " + path("reports")) == 6);
}

TEST_CASE("outputs do not depend on the thread count") {
  auto j = base_config();
  j.erase("spectrum");
  j["experiments"] = {{"sweep", {{"kind", "basic"}, {"sample", 3}, {"h_levels", {0.2, 0.1}}, {"test_fields", 1}, {"tol", 1e9}}}};
  const auto cfg = write_config("threads.json", j);
  REQUIRE(run("form random -c " + cfg + " --seed 8 -o " + path("tf")) == 0);
  for (const std::string t : {"1", "3"}) {
    const std::string env = "KOHNLAB_THREADS=" + t;
    REQUIRE(run("solve-box -c " + cfg + " -i " + path("tf") + " -o " + path("tu" + t), env) == 0);
    REQUIRE(run("experiment sweep -c " + cfg + " -o " + path("tr" + t), env) == 0);
  }
  for (const auto& rel : {"tu/solution/manifest.json", "tu/constants.csv", "tu/residuals.json", "tr/sweep/report.json",
                          "tr/sweep/constants.csv"}) {
    std::string a = rel, b = rel;
    a.insert(2, "1");
    b.insert(2, "3");
    CHECK_MESSAGE(io::read_text(root() / a) == io::read_text(root() / b), rel);
  }
  for (const auto& e : fs::directory_iterator(root() / "tu1" / "solution")) {
    const auto other = root() / "tu3" / "solution" / e.path().filename();
    CHECK(io::read_text(e.path()) == io::read_text(other));
  }
}
