#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "kohn/geometry.hpp"

using namespace kohn;
using geo::HalfPlanePoint;

namespace {

// ∫_a^b ds / s by composite Simpson, the length of a vertical segment.
double vertical_length(double a, double b) {
  const int n = 2000;
  const double h = (b - a) / n;
  double sum = 1.0 / a + 1.0 / b;
  for (int i = 1; i < n; ++i) sum += (i % 2 ? 4.0 : 2.0) / (a + i * h);
  return sum * h / 3.0;
}

geo::DomainSpec unit_disc() { return geo::DomainSpec::disc({0.0, 2.0}, 1.0, 0.0); }

}  // namespace

TEST_CASE("hyperbolic distance") {
  const HalfPlanePoint i(0.0, 1.0), four_i(0.0, 4.0);
  CHECK(geo::hyperbolic_distance(i, i) == doctest::Approx(0.0));
  CHECK(geo::hyperbolic_distance(i, four_i) == doctest::Approx(std::log(4.0)).epsilon(1e-14));
  CHECK(geo::hyperbolic_distance(i, four_i) == doctest::Approx(vertical_length(1.0, 4.0)).epsilon(1e-10));
  CHECK_THROWS_AS(HalfPlanePoint(0.0, -1.0), UsageError);
}

TEST_CASE("Mobius maps are isometries") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> U(-2.0, 2.0);
  for (int k = 0; k < 20; ++k) {
    const auto m = geo::MobiusMap::random(rng);
    const auto c = m.coefficients();
    CHECK(c[0] * c[3] - c[1] * c[2] == doctest::Approx(1.0).epsilon(1e-12));
    const HalfPlanePoint p(U(rng), 1.0 + std::abs(U(rng))), q(U(rng), 1.0 + std::abs(U(rng)));
    CHECK(geo::hyperbolic_distance(m.apply(p), m.apply(q)) ==
          doctest::Approx(geo::hyperbolic_distance(p, q)).epsilon(1e-10));
    CHECK(std::abs(geo::mobius_pushforward_factor(m, p)) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("pushforward factor of identity and translations") {
  const HalfPlanePoint p(0.3, 1.7);
  const auto a = geo::mobius_pushforward_factor(geo::MobiusMap::identity(), p);
  CHECK(a.real() == doctest::Approx(1.0));
  CHECK(a.imag() == doctest::Approx(0.0));
  const auto b = geo::mobius_pushforward_factor(geo::MobiusMap::translation(-2.5), p);
  CHECK(b.real() == doctest::Approx(1.0));
  CHECK(b.imag() == doctest::Approx(0.0));
}

TEST_CASE("geodesic polar points and ball area") {
  const HalfPlanePoint c(0.5, 2.0);
  for (double angle : {0.0, 1.0, 2.5, 4.0}) {
    const auto p = geo::geodesic_polar_point(c, 0.7, angle);
    CHECK(geo::hyperbolic_distance(c, p) == doctest::Approx(0.7).epsilon(1e-12));
  }
  CHECK(geo::hyperbolic_ball_area(1.0) == doctest::Approx(2.0 * M_PI * (std::cosh(1.0) - 1.0)));
}

TEST_CASE("disc domain") {
  const auto d = unit_disc();
  CHECK(d.boundary().size() == 256);
  CHECK(d.contains({0.0, 2.0}));
  CHECK_FALSE(d.contains({0.0, 3.5}));
  CHECK(d.delta() > 0.0);
  CHECK(d.centroid().imag() == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(d.min_s() == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("defining function") {
  const auto d = unit_disc();
  const auto rho = geo::build_defining_function(d);
  CHECK(std::abs(rho(d.boundary()[10])) < 1e-12);
  CHECK(rho({0.0, 2.0}) == doctest::Approx(1.0));
  CHECK(rho({0.0, 3.5}) < 0.0);

  // A flat boundary edge on the horocycle s = 1: the distance to it is ln s.
  std::vector<HalfPlanePoint> square;
  const int per_side = 20;
  for (int k = 0; k < per_side; ++k) square.emplace_back(-1.0 + 2.0 * k / per_side, 1.0);
  for (int k = 0; k < per_side; ++k) square.emplace_back(1.0, 1.0 + 2.0 * k / per_side);
  for (int k = 0; k < per_side; ++k) square.emplace_back(1.0 - 2.0 * k / per_side, 3.0);
  for (int k = 0; k < per_side; ++k) square.emplace_back(-1.0, 3.0 - 2.0 * k / per_side);
  const auto box = geo::DomainSpec::from_vertices(square, 0.0, 0.005);
  const geo::DefiningFunction rb(box);
  const double target = 0.1 * box.delta();
  CHECK(std::abs(rb({0.0, std::exp(target)}) - target) < 1e-6);
}

TEST_CASE("radial cut-off") {
  const HalfPlanePoint c(0.0, 2.0);
  const geo::RadialCutoff xi(c, 0.2, 0.4);
  CHECK(xi(c) == doctest::Approx(1.0));
  CHECK(xi(geo::geodesic_polar_point(c, 0.15, 1.0)) == doctest::Approx(1.0));
  CHECK(xi(geo::geodesic_polar_point(c, 0.41, 2.0)) == doctest::Approx(0.0));
  const double mid = xi(geo::geodesic_polar_point(c, 0.3, 0.0));
  CHECK(mid > 0.0);
  CHECK(mid < 1.0);
  const auto [x, z] = geo::cutoff_pair(c, 0.2, 0.4);
  CHECK(z.r_inner() == doctest::Approx(0.4));
  CHECK(z.r_outer() == doctest::Approx(0.6));
  CHECK(x.r_outer() == doctest::Approx(0.4));
}

TEST_CASE("ball cover") {
  const auto tiny = geo::DomainSpec::disc({0.0, 2.0}, 0.05, 0.0);
  CHECK(geo::ball_cover(tiny, 0.5, 1.0).size() == 1);

  const auto d = unit_disc();
  const double eps = 0.1, delta = 0.3;
  const auto centers = geo::ball_cover(d, eps, delta);
  REQUIRE(centers.size() > 5);
  double closest = 1e300;
  for (std::size_t i = 0; i < centers.size(); ++i)
    for (std::size_t j = i + 1; j < centers.size(); ++j)
      closest = std::min(closest, geo::hyperbolic_distance(centers[i], centers[j]));
  CHECK(closest >= eps);
  CHECK(geo::cover_multiplicity(centers, delta) <= geo::cover_multiplicity_bound(eps, delta));
}
