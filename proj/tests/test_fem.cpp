#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "kohn/fem.hpp"
#include "kohn/fields.hpp"
#include "kohn/mesh.hpp"

using namespace kohn;

namespace {

geo::DomainSpec disc() { return geo::DomainSpec::disc({0.0, 2.0}, 1.0, 0.0); }

double hermitian_defect(const fem::SparseMatrixC& a) {
  const fem::SparseMatrixC d = a - fem::SparseMatrixC(a.adjoint());
  return d.norm() / a.norm();
}

}  // namespace

TEST_CASE("quadrature") {
  for (int n : {2, 4, 6}) {
    const auto rule = fem::QuadratureRule::collapsed_gauss(n);
    double total = 0.0;
    for (double w : rule.weights) total += w;
    CHECK(total == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(rule.self_test() < 1e-13);
  }
  std::vector<double> x, w;
  fem::gauss_legendre01(5, x, w);
  double m4 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) m4 += w[i] * std::pow(x[i], 8);
  CHECK(m4 == doctest::Approx(1.0 / 9.0).epsilon(1e-14));
}

TEST_CASE("mesh refinement") {
  const auto coarse = fem::build_mesh(disc(), 0.1);
  const auto fine = fem::build_mesh(disc(), 0.05);
  CHECK(coarse.h <= 0.1 + 1e-12);
  CHECK(fine.h <= 0.05 + 1e-12);
  const double ratio = static_cast<double>(fine.num_nodes()) / coarse.num_nodes();
  CHECK(ratio > 2.0);
  CHECK(ratio < 8.0);
  CHECK(coarse.num_boundary() > 0);
  for (const auto& tri : coarse.triangles) {
    const auto& a = coarse.nodes[static_cast<std::size_t>(tri[0])];
    const auto& b = coarse.nodes[static_cast<std::size_t>(tri[1])];
    const auto& c = coarse.nodes[static_cast<std::size_t>(tri[2])];
    CHECK((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]) > 0.0);
  }
  CHECK_THROWS_AS(fem::build_mesh(disc(), 5.0), DomainError);
}

TEST_CASE("hyperbolic area of the disc") {
  // |w − 2i| < 1 is the hyperbolic disc of radius ln(3)/2.
  const double exact = geo::hyperbolic_ball_area(std::log(3.0) / 2.0);
  const auto space = fem::make_space(disc(), 0.05);
  const double area = space->integrate([](double, double) { return Complex(1.0); }).real();
  CHECK(std::abs(area - exact) / exact < 1e-2);
  const VectorXc one = VectorXc::Ones(space->num_dofs());
  CHECK(one.dot(space->mass() * one).real() == doctest::Approx(area).epsilon(1e-12));
}

TEST_CASE("assembled forms are Hermitian") {
  const auto space = fem::make_space(disc(), 0.1);
  CHECK(hermitian_defect(space->mass()) < 1e-12);
  CHECK(hermitian_defect(space->assemble(fem::Op1::W(), fem::Op1::W())) < 1e-12);
  CHECK(hermitian_defect(space->assemble(fem::Op1::Wbar().shifted(0.3), fem::Op1::Wbar().shifted(0.3))) < 1e-12);
}

TEST_CASE("mass solve inverts the load of a field") {
  const auto space = fem::make_space(disc(), 0.1);
  const auto u = fields::random_field(space, disc(), 3, false);
  const VectorXc back = space->mass_solve(space->mass() * u.values);
  CHECK((back - u.values).norm() / u.values.norm() < 1e-10);
}

TEST_CASE("interpolation and gradients of linear functions are exact") {
  const auto space = fem::make_space(disc(), 0.1);
  const auto f = fem::CoefficientField::interpolate(space, [](double t, double s) { return Complex(2.0 * t, s); });
  for (int e = 0; e < space->mesh().num_triangles(); e += 37) {
    const auto g = space->gradient(f.values, e);
    CHECK(std::abs(g[0] - 2.0) < 1e-10);
    CHECK(std::abs(g[1] - I) < 1e-10);
    const Complex v = space->value(f.values, e, 0);
    CHECK(std::abs(v - Complex(2.0 * space->qp_t(e, 0), space->qp_s(e, 0))) < 1e-12);
  }
}

TEST_CASE("fields") {
  const auto space = fem::make_space(disc(), 0.1);
  const auto a = fields::random_field(space, disc(), 9, true);
  const auto b = fields::random_field(space, disc(), 9, true);
  CHECK(a.values == b.values);
  CHECK(a.trace_max() == 0.0);
  CHECK(a.finite());
  CHECK(a.values.norm() > 0.0);
  const auto c = fields::random_field(space, disc(), 10, true);
  CHECK_FALSE(c.values == a.values);
  CHECK(fields::clear_trace(fields::random_field(space, disc(), 9, false)).trace_max() == 0.0);
  CHECK(fields::mix_seed(1, 2, 3) != fields::mix_seed(1, 3, 2));
  CHECK(fem::CoefficientField::zero(space).values.norm() == 0.0);
}
