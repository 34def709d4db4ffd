#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "kohn/fields.hpp"
#include "kohn/ops.hpp"

using namespace kohn;
using fem::Op1;
using spectrum::SigmaLabel;

namespace {

const geo::DomainSpec& disc() {
  static const auto d = geo::DomainSpec::disc({0.0, 2.0}, 1.0, 0.0);
  return d;
}

const fem::SpacePtr& space() {
  static const auto s = fem::make_space(disc(), 0.1);
  return s;
}

std::vector<geo::HalfPlanePoint> samples() {
  return {{0.0, 2.0}, {0.3, 1.6}, {-0.4, 2.5}, {0.5, 2.2}};
}

}  // namespace

TEST_CASE("W and Wbar on smooth closures") {
  const auto wlog = ops::apply_W([](double, double s) { return Complex(-std::log(s)); });
  const double a = 1.7;
  const auto pow_a = [a](double, double s) { return Complex(std::pow(s, a)); };
  const auto wpow = ops::apply_W(pow_a);
  const auto wbpow = ops::apply_Wbar(pow_a);
  for (const auto& p : samples()) {
    CHECK(std::abs(wlog(p.t(), p.s()) + 1.0) < 1e-9);
    CHECK(std::abs(wpow(p.t(), p.s()) - a * std::pow(p.s(), a)) < 1e-8);
    CHECK(std::abs(wbpow(p.t(), p.s()) - a * std::pow(p.s(), a)) < 1e-8);
  }
}

TEST_CASE("shifted Wbar annihilates the weighted holomorphic functions") {
  const auto sigma = SigmaLabel::make(1, 0.0, 1.0, 0.5, 4);
  const double beta = (sigma.lambda + sigma.nu) / 2.0;
  const fem::SmoothFn k = [beta](double t, double s) {
    const Complex w(t, s);
    return std::pow(s, beta) * (w * w + 2.0 * w);
  };
  const auto r = ops::apply_Wbar_sigma(sigma, k);
  for (const auto& p : samples()) CHECK(std::abs(r(p.t(), p.s())) < 1e-8);
}

TEST_CASE("log solution of the shifted W") {
  const double lambda = 1.0;
  const auto sigma = SigmaLabel::make(1, 1.0, lambda, 0.0, 4);
  const Complex z0(1.0, 2.0);
  const fem::SmoothFn u = [=](double t, double s) { return std::pow(s, lambda / 2.0) * std::log(z0 - Complex(t, s)); };
  const auto wu = ops::apply_W_sigma(sigma, u);
  for (const auto& p : samples()) {
    const Complex w = p.w();
    const Complex expected =
        lambda * u(p.t(), p.s()) + std::pow(p.s(), lambda / 2.0) * 2.0 * I * p.s() / (w - z0);
    CHECK(std::abs(wu(p.t(), p.s()) - expected) < 1e-7);
  }
}

TEST_CASE("shift operators") {
  const auto sigma = SigmaLabel::make(1, 1.0, 0.6, 0.2, 4);
  const auto u = fields::random_field(space(), disc(), 4, false);
  const VectorXc diff = ops::apply_W_sigma(sigma, u).values - ops::apply_W(u).values;
  CHECK((diff - (sigma.lambda - sigma.nu) / 2.0 * u.values).norm() < 1e-10 * u.values.norm());
  const VectorXc diffbar = ops::apply_Wbar_sigma(sigma, u).values - ops::apply_Wbar(u).values;
  CHECK((diffbar + (sigma.lambda + sigma.nu) / 2.0 * u.values).norm() < 1e-10 * u.values.norm());
}

TEST_CASE("discrete W of a linear function") {
  // W(t) = is exactly; the L² projection reproduces the linear field s.
  const auto u = fem::CoefficientField::interpolate(space(), [](double t, double) { return Complex(t); });
  const auto wu = ops::apply_W(u);
  const auto expected = fem::CoefficientField::interpolate(space(), [](double, double s) { return I * s; });
  CHECK((wu.values - expected.values).norm() / expected.values.norm() < 1e-10);
}

TEST_CASE("forms Q are Hermitian") {
  const auto u = fields::random_field(space(), disc(), 1, true);
  const auto v = fields::random_field(space(), disc(), 2, true);
  for (double a : {-1.5, 0.0, 0.7}) {
    const Complex q1 = ops::form_Q(a, v, u), q2 = ops::form_Q(a, u, v);
    CHECK(std::abs(q1 - std::conj(q2)) < 1e-12 * (1.0 + std::abs(q1)));
    const Complex b1 = ops::form_Qbar(a, v, u), b2 = ops::form_Qbar(a, u, v);
    CHECK(std::abs(b1 - std::conj(b2)) < 1e-12 * (1.0 + std::abs(b1)));
    CHECK(std::abs(ops::form_Q(a, u, u).imag()) < 1e-12 * ops::form_Q(a, u, u).real());
  }
}

TEST_CASE("fundamental identity") {
  const auto u = fields::random_field(space(), disc(), 5, true);
  const auto v = fields::random_field(space(), disc(), 6, true);
  CHECK(ops::fundamental_identity_residual(0.8, 0.0, u, u) < 1e-14);
  for (double c : {-2.0, 1.0, 2.5}) {
    CHECK(ops::fundamental_identity_residual(1.0, c, u, u) < 1e-12);
    CHECK(ops::fundamental_identity_residual(-0.3, c, v, u) < 1e-12);
  }
  // c = 1, α = 1 written out: Q_1(u,u) = Q̄_{−1}(u,u) + 2‖u‖².
  const double lhs = ops::form_Q(1.0, u, u).real();
  const double rhs = ops::form_Qbar(-1.0, u, u).real() + 2.0 * std::pow(ops::norm(u), 2);
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
}

TEST_CASE("adjoint identity") {
  const auto u = fields::random_field(space(), disc(), 7, true);
  const auto v = fields::random_field(space(), disc(), 8, true);
  CHECK(ops::adjoint_residual(u, v, 0.0) < 1e-10);
  CHECK(ops::adjoint_residual(u, v, 2.0) < 1e-7);
  const auto z = fem::CoefficientField::zero(space());
  CHECK(ops::adjoint_residual(z, z, 2.0) == 0.0);
  CHECK(ops::commutator_residual(u, v) < 1e-10);
  const auto sigma = SigmaLabel::make(1, 1.0, 1.5, 0.5, 4);
  CHECK(ops::wbar_sigma_adjoint_residual(sigma, *space()) < 1e-10);
}

TEST_CASE("smooth commutator") {
  const fem::SmoothFn f = [](double t, double s) { return Complex(std::sin(t) * s, t * t - s); };
  CHECK(ops::commutator_residual(f, samples()) < 1e-6);
}

TEST_CASE("weighted inner product") {
  const auto u = fields::random_field(space(), disc(), 12, false);
  CHECK(ops::WeightedL2(0.0).norm(u) == doctest::Approx(ops::norm(u)).epsilon(1e-12));
  const auto one = fem::CoefficientField::interpolate(space(), [](double, double) { return Complex(1.0); });
  const double s1 = std::pow(ops::WeightedL2(1.0).norm(one), 2);
  const double direct = space()->integrate([](double, double s) { return Complex(s); }).real();
  CHECK(s1 == doctest::Approx(direct).epsilon(1e-12));
}

TEST_CASE("sigma norms") {
  const auto sigma = SigmaLabel::make(1, 0.0, 0.0, 0.0, 4);
  const auto u = fields::random_field(space(), disc(), 13, true);
  CHECK(ops::sigma_norm(0, sigma, u) == doctest::Approx(ops::norm(u)).epsilon(1e-12));
  const double k1 = std::sqrt(ops::form_ip(Op1::identity(), u, Op1::identity(), u).real() +
                              ops::form_ip(Op1::W(), u, Op1::W(), u).real() +
                              ops::form_ip(Op1::Wbar(), u, Op1::Wbar(), u).real());
  CHECK(ops::sigma_norm(1, sigma, u) == doctest::Approx(k1).epsilon(1e-10));
  CHECK(ops::sigma_norm(2, sigma, u) >= ops::sigma_norm(1, sigma, u));
  CHECK_THROWS_AS(ops::sigma_norm(3, sigma, u), CapabilityError);
  const ops::RealFn one = [](double, double) { return 1.0; };
  CHECK(ops::rho_weighted_norm(0, 0, sigma, one, u) == doctest::Approx(ops::norm(u)).epsilon(1e-10));
}
