#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <limits>
#include <random>

#include "kohn/fields.hpp"
#include "kohn/io.hpp"

using namespace kohn;
namespace fs = std::filesystem;
using io::json;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("kohnlab_io_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

const geo::DomainSpec& disc() {
  static const auto d = geo::DomainSpec::disc({0.0, 2.0}, 1.0, 0.0);
  return d;
}

forms::ContextPtr context(std::uint64_t seed, double h = 0.2) {
  auto spec = std::make_shared<const spectrum::SpectralComplex>(
      spectrum::synth_complex(4, {2, 3, 3, 2}, {-1.0, 0.0, 1.0}, seed));
  return std::make_shared<const forms::Context>(spec, disc(), fem::make_space(disc(), h));
}

}  // namespace

TEST_CASE("shortest round-trip doubles") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(-1e6, 1e6);
  for (int i = 0; i < 1000; ++i) {
    const double x = U(rng) * std::pow(10.0, static_cast<int>(rng() % 40) - 20);
    CHECK(std::stod(io::format_double(x)) == x);
  }
  CHECK(io::format_double(0.1) == "0.1");
  CHECK(io::format_double(2.0) == "2");
  CHECK(io::format_double(std::numeric_limits<double>::quiet_NaN()) == "nan");
}

TEST_CASE("content hash") {
  CHECK(io::content_hash("") == "cbf29ce484222325");
  CHECK(io::content_hash("a") == "af63dc4c8601ec8c");
  CHECK(io::content_hash("abc").size() == 16);
}

TEST_CASE("atomic text writes") {
  TempDir tmp;
  const auto p = tmp.path / "x.txt";
  io::write_text_atomic(p, "one");
  io::write_text_atomic(p, "two");
  CHECK(io::read_text(p) == "two");
  std::size_t entries = 0;
  for (const auto& e : fs::directory_iterator(tmp.path)) entries += e.is_regular_file();
  CHECK(entries == 1);
  CHECK_THROWS_AS(io::read_text(tmp.path / "missing"), std::exception);
}

TEST_CASE("domain json") {
  const auto d = io::domain_from_json(json::parse(R"({"disc": {"center": [0, 2], "radius": 1}, "nu": 0.5})"));
  CHECK(d.nu() == 0.5);
  CHECK(d.boundary().size() == 256);
  const auto back = io::domain_from_json(io::domain_to_json(d));
  REQUIRE(back.boundary().size() == d.boundary().size());
  CHECK(back.boundary()[7].t() == d.boundary()[7].t());
  CHECK(back.delta() == d.delta());
  CHECK_THROWS_AS(io::domain_from_json(json::parse(R"({"square": 1})")), ConfigError);
}

TEST_CASE("spectrum json round trip") {
  const auto c = spectrum::synth_complex(4, {2, 3, 3, 2}, {-1.0, 0.5}, 9);
  const auto j = io::spectrum_to_json(c);
  CHECK(j.at("schema") == io::kSpectrumSchema);
  const auto back = io::spectrum_from_json(j);
  CHECK(io::spectrum_id(back) == io::spectrum_id(c));
  const auto a = c.all_labels(), b = back.all_labels();
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].gamma == doctest::Approx(b[i].gamma).epsilon(1e-12));
    CHECK(a[i].lambda == b[i].lambda);
  }
}

TEST_CASE("label files") {
  const auto set = io::labels_from_json(json::parse(
      R"({"meta": {"n": 3}, "labels": [{"q": 1, "gamma": 0, "lambda": 0}, {"q": 1, "gamma": 0, "lambda": -1}]})"));
  REQUIRE(set.labels.size() == 2);
  const auto report = spectrum::validate_spectrum(set.labels, set.meta);
  CHECK_FALSE(report.pass);
  const auto rj = io::validation_to_json(report);
  CHECK(rj.at("pass") == false);
  CHECK(rj.at("violations").size() == 1);
  const auto back = io::labels_from_json(io::labels_to_json(set.labels, set.meta));
  CHECK(back.labels.size() == 2);
  CHECK(back.meta.n == 3);
}

TEST_CASE("spectrum sources") {
  const auto stub = io::spectrum_from_source(json::parse(R"({"stub": {"n": 5, "cap": 1}})"), ".");
  CHECK(stub->n() == 5);
  const auto synth =
      io::spectrum_from_source(json::parse(R"({"synth": {"n": 4, "dims": [1, 2, 1], "lambdas": [0], "seed": 2}})"), ".");
  CHECK(synth->levels() == 3);
  CHECK_THROWS_AS(io::spectrum_from_source(json::parse(R"({"other": 1})"), "."), ConfigError);
}

TEST_CASE("field csv round trip") {
  const auto space = fem::make_space(disc(), 0.2);
  const auto f = fields::random_field(space, disc(), 4, false);
  const auto text = io::field_csv(f);
  CHECK(text.rfind("node,t,s,re,im\n", 0) == 0);
  const auto back = io::field_from_csv(text, space);
  CHECK(back.values == f.values);
  const auto other = fem::make_space(disc(), 0.15);
  CHECK_THROWS_AS(io::field_from_csv(text, other), ConfigError);
}

TEST_CASE("mesh files") {
  TempDir tmp;
  const auto space = fem::make_space(disc(), 0.2);
  io::write_mesh(space->mesh(), tmp.path);
  CHECK(fs::exists(tmp.path / "nodes.csv"));
  CHECK(fs::exists(tmp.path / "triangles.csv"));
  const auto meta = io::read_json(tmp.path / "mesh.json");
  CHECK(meta.at("mesh_id") == io::mesh_id(space->mesh()));
}

TEST_CASE("form round trip") {
  TempDir tmp;
  const auto ctx = context(5);
  const auto phi = forms::FourierForm::random(ctx, 1, 3);
  io::write_form(phi, tmp.path / "phi");
  const auto back = io::read_form(ctx, tmp.path / "phi");
  CHECK(back.q == 1);
  auto diff = back;
  diff.axpy(-1.0, phi);
  CHECK(diff.norm() == 0.0);

  io::write_form(forms::FourierForm::zero(ctx, 1), tmp.path / "zero");
  CHECK(io::read_form(ctx, tmp.path / "zero").empty());

  CHECK_THROWS_AS(io::read_form(context(6), tmp.path / "phi"), ConfigError);
  CHECK_THROWS_AS(io::read_form(context(5, 0.15), tmp.path / "phi"), ConfigError);
}

TEST_CASE("config validation") {
  const auto c = io::config_from_json(json::parse(R"({"q": 1, "n": 4, "mesh": {"h": 0.2}})"));
  CHECK(c.q == 1);
  CHECK(c.h == 0.2);
  CHECK(c.spectrum->n() == 4);
  CHECK_THROWS_AS(io::config_from_json(json::parse(R"({"q": 0})")), ConfigError);
  CHECK_THROWS_AS(io::config_from_json(json::parse(R"({"q": 3, "n": 4})")), ConfigError);
  CHECK_THROWS_AS(io::config_from_json(json::parse(R"({"n": 2})")), ConfigError);
  CHECK_THROWS_AS(io::config_from_json(json::parse(R"({"colour": 1})")), ConfigError);
  CHECK_THROWS_AS(io::config_from_json(json::parse(R"({"mesh": {"size": 1}})")), ConfigError);
  CHECK_THROWS_AS(io::config_from_json(json::parse(R"({"experiments": {"bogus": {}}})")), ConfigError);
  CHECK_THROWS_AS(
      io::config_from_json(json::parse(R"({"nu": 0.5, "spectrum": {"stub": {"n": 4, "cap": 1, "nu": 0}}})")),
      ConfigError);
  CHECK_THROWS_AS(io::config_from_json(json::parse(R"({"box": {"mode": "other"}})")), ConfigError);
  try {
    io::config_from_json(json::parse(R"({"q": 0})"));
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("1 <= q <= n - 2") != std::string::npos);
  }
}

TEST_CASE("thread count from the environment") {
  setenv("KOHNLAB_THREADS", "3", 1);
  CHECK(io::config_from_json(json::parse(R"({"threads": 1})")).threads == 3);
  unsetenv("KOHNLAB_THREADS");
  CHECK(io::config_from_json(json::parse(R"({"threads": 2})")).threads == 2);
}

TEST_CASE("experiment options") {
  const auto c = io::config_from_json(json::parse(R"({"experiments": {"disc": {"J": 4}, "run": ["disc"]}})"));
  CHECK(io::disc_options(c).J == 4);
  CHECK(c.run == std::vector<std::string>{"disc"});
  const auto bad = io::config_from_json(json::parse(R"({"experiments": {"disc": {"K": 4}}})"));
  CHECK_THROWS_AS(io::disc_options(bad), ConfigError);
  CHECK_THROWS_AS(io::run_experiment("bogus", c), ConfigError);
}

TEST_CASE("reports") {
  TempDir tmp;
  experiments::ExperimentReport r;
  r.id = "demo";
  experiments::Table t;
  t.name = "errors";
  t.columns = {"h", "err", "label"};
  t.rows = {{0.1, 0.01, "a,b"}, {0.05, 0.0025, "c"}};
  r.tables.push_back(t);
  r.add_check("rate", 2.0, ">=", 1.8);
  r.decide();
  CHECK(io::table_csv(t) == "h,err,label\n0.1,0.01,\"a,b\"\n0.05,0.0025,c\n");
  const auto vl = io::vega_lite(t, "errors.csv");
  CHECK(vl.at("data").at("url") == "errors.csv");
  CHECK(vl.at("encoding").at("x").at("field") == "h");
  CHECK(vl.at("encoding").at("y").at("field") == "err");

  t.plot = experiments::PlotSpec{"h", {"err", "h"}, "", "line", true, true};
  const auto folded = io::vega_lite(t, "errors.csv");
  CHECK(folded.contains("transform"));
  CHECK(folded.at("encoding").at("x").at("scale").at("type") == "log");

  const auto dir = tmp.path / "demo";
  io::write_report(r, dir);
  io::write_report(r, dir);
  CHECK(fs::exists(dir / "errors.csv"));
  CHECK(fs::exists(dir / "errors.vl.json"));
  const auto j = io::read_json(dir / "report.json");
  CHECK(j.at("schema") == io::kReportSchema);
  CHECK(j.at("verdict") == "reproduced");
  CHECK(j.at("checks").at(0).at("pass") == true);
  CHECK_FALSE(fs::exists(tmp.path / ".demo.staging"));
}

TEST_CASE("slot constants") {
  const auto t = io::slot_constants_table({{"b0q1i0", "top", 1.0, 0.0, 0.5}});
  CHECK(t.columns == std::vector<std::string>{"sigma_id", "part", "gamma", "lambda", "ratio"});
  CHECK(io::table_csv(t) == "sigma_id,part,gamma,lambda,ratio\nb0q1i0,top,1,0,0.5\n");
}
