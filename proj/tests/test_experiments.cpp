#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "kohn/experiments.hpp"

using namespace kohn;
using experiments::Check;
using experiments::ExperimentReport;
using experiments::Verdict;

TEST_CASE("divergence test") {
  CHECK(experiments::diverging({1.0, 2.0, 3.0}));
  CHECK(experiments::diverging({1.0, 2.0, 4.0}));
  CHECK_FALSE(experiments::diverging({1.0, 2.0, 2.1}));
  CHECK_FALSE(experiments::diverging({3.0, 2.0, 1.0}));
  CHECK_FALSE(experiments::diverging({1.0, 2.0}, 1.5));
}

TEST_CASE("convergence rate") {
  const std::vector<double> h{0.1, 0.05, 0.025};
  std::vector<double> err;
  for (double x : h) err.push_back(3.0 * x * x);
  CHECK(experiments::convergence_rate(h, err) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("verdict rules") {
  ExperimentReport r;
  r.add_check("a", 1.0, "<", 2.0);
  r.add_check("b", 3.0, ">=", 2.0, Check::Kind::stability);
  r.decide();
  CHECK(r.verdict == Verdict::reproduced);
  r.add_check("c", 3.0, "<", 2.0, Check::Kind::stability);
  r.decide();
  CHECK(r.verdict == Verdict::inconclusive);
  r.add_check("d", 1.0, "==", 2.0);
  r.decide();
  CHECK(r.verdict == Verdict::violated);
  r.decide(Verdict::reproduced);
  CHECK(r.verdict == Verdict::reproduced);
  REQUIRE(r.find_check("c") != nullptr);
  CHECK_FALSE(r.find_check("c")->pass);
  CHECK(r.find_check("missing") == nullptr);
  CHECK(experiments::to_string(Verdict::inconclusive) == "inconclusive");
}

TEST_CASE("experiment names") {
  const auto& names = experiments::experiment_names();
  CHECK(names == std::vector<std::string>{"noncompact", "negreg", "disc", "hypo", "sweep", "converge"});
}

TEST_CASE("single ball non-compactness") {
  experiments::NoncompactOptions opt;
  opt.K = 1;
  opt.h_levels = {0.1};
  const auto r = experiments::run_noncompactness(opt);
  CHECK_FALSE(r.tables.empty());
  CHECK(r.find_check("eigen_residual") != nullptr);
}

TEST_CASE("disc non-surjectivity") {
  const auto r = experiments::run_disc_nonsurjectivity();
  CHECK(r.verdict == Verdict::reproduced);
  experiments::DiscOptions strict;
  strict.min_drop = 1e9;
  CHECK(experiments::run_disc_nonsurjectivity(strict).verdict == Verdict::violated);
}

TEST_CASE("negative regularity") {
  const auto r = experiments::run_negregularity();
  CHECK(r.verdict == Verdict::reproduced);
  for (const auto& t : r.tables) CHECK(t.plot.has_value());
}

TEST_CASE("hypoellipticity dichotomy") {
  const auto r = experiments::run_hypoellipticity();
  CHECK(r.verdict == Verdict::reproduced);
}

TEST_CASE("option errors") {
  experiments::ConvergeOptions c;
  c.h_levels = {0.1};
  CHECK_THROWS_AS(experiments::run_convergence(c), ConfigError);
  experiments::SweepOptions s;
  s.labels = {spectrum::SigmaLabel::make(1, 1.0, 0.0, 0.0, 4)};
  CHECK_THROWS_AS(experiments::run_estimate_sweep(s), ConfigError);
}
