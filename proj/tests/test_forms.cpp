#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "kohn/fields.hpp"
#include "kohn/forms.hpp"

using namespace kohn;
using forms::FourierForm;

namespace {

const geo::DomainSpec& disc() {
  static const auto d = geo::DomainSpec::disc({0.0, 2.0}, 1.0, 0.0);
  return d;
}

const fem::SpacePtr& space() {
  static const auto s = fem::make_space(disc(), 0.1);
  return s;
}

forms::ContextPtr context(spectrum::SpectralComplex complex, int threads = 1) {
  return std::make_shared<const forms::Context>(std::make_shared<const spectrum::SpectralComplex>(std::move(complex)),
                                                disc(), space(), threads);
}

forms::ContextPtr synthetic() { return context(spectrum::synth_complex(4, {2, 3, 3, 2}, {-1.0, 0.0, 1.0}, 5)); }

}  // namespace

TEST_CASE("inner product over slots") {
  const auto ctx = synthetic();
  const auto labels = ctx->spectrum().labels(1);
  REQUIRE(labels.size() >= 2);
  const auto u = fields::random_field(space(), disc(), 1, false);
  const auto v = fields::random_field(space(), disc(), 2, false);
  FourierForm a = FourierForm::zero(ctx, 1), b = FourierForm::zero(ctx, 1), c = FourierForm::zero(ctx, 1);
  a.top.emplace(labels[0].key, u);
  b.top.emplace(labels[0].key, v);
  c.top.emplace(labels[1].key, v);
  const Complex expected = ops::inner(u, v);
  CHECK(std::abs(forms::inner_product(a, b) - expected) < 1e-12 * std::abs(expected));
  CHECK(forms::inner_product(a, c) == Complex(0.0));
  CHECK(a.norm() == doctest::Approx(ops::norm(u)).epsilon(1e-12));
}

TEST_CASE("axpy merges slots") {
  const auto ctx = synthetic();
  const auto x = FourierForm::random(ctx, 1, 3);
  FourierForm y = FourierForm::zero(ctx, 1);
  y.axpy(2.0, x);
  CHECK(y.norm() == doctest::Approx(2.0 * x.norm()).epsilon(1e-12));
  y.axpy(-2.0, x);
  CHECK(y.norm() < 1e-14);
  CHECK(FourierForm::zero(ctx, 1).empty());
}

TEST_CASE("complex identities") {
  const auto ctx = synthetic();
  const auto blocks = forms::TransferBlocks::from(ctx->spectrum());
  for (int q : {1, 2}) {
    const auto phi = FourierForm::random(ctx, q, 10 + q);
    phi.check();
    const auto d = forms::apply_dbar(phi, blocks);
    CHECK(d.q == q + 1);
    CHECK(forms::apply_dbar(d, blocks).norm() < 1e-10 * phi.norm());
    const auto psi = FourierForm::random(ctx, q + 1, 20 + q);
    const Complex lhs = forms::inner_product(d, psi);
    const Complex rhs = forms::inner_product(phi, forms::apply_dbar_star(psi, blocks));
    CHECK(std::abs(lhs - rhs) < 1e-10 * (1.0 + std::abs(lhs)));
  }
}

TEST_CASE("box rejects transverse slots with a trace") {
  const auto ctx = synthetic();
  const auto blocks = forms::TransferBlocks::from(ctx->spectrum());
  auto phi = FourierForm::random(ctx, 1, 4);
  REQUIRE_FALSE(phi.bot.empty());
  phi.bot.begin()->second = fields::random_field(space(), disc(), 5, false);
  CHECK_THROWS_AS(forms::apply_box(phi, blocks), DomainError);
}

TEST_CASE("box solve roundtrip") {
  const auto ctx = synthetic();
  const auto blocks = forms::TransferBlocks::from(ctx->spectrum());
  const auto phi = FourierForm::random(ctx, 1, 6);
  auto f = phi;
  f.axpy(1.0, forms::apply_box(phi, blocks));
  const auto sol = forms::solve_box(f, blocks);
  auto diff = sol.u;
  diff.axpy(-1.0, phi);
  CHECK(diff.norm() < 1e-8 * phi.norm());
  CHECK(sol.residual < 1e-10);
  CHECK(sol.constants.size() == f.top.size() + f.bot.size());

  const auto zero = forms::solve_box(FourierForm::zero(ctx, 1), blocks);
  CHECK(zero.u.norm() == 0.0);
}

TEST_CASE("kernel orthogonal box solve") {
  const auto ctx = synthetic();
  const auto blocks = forms::TransferBlocks::from(ctx->spectrum());
  const auto f = FourierForm::random(ctx, 1, 8);
  forms::BoxSolveOptions opt;
  opt.mode = forms::BoxMode::kernel_orthogonal;
  const auto sol = forms::solve_box(f, blocks, opt);
  CHECK(sol.residual < 1e-8);
  CHECK(forms::kernel_part(sol.u).norm() < 1e-8 * sol.u.norm());
  auto fr = f;
  fr.axpy(-1.0, sol.f_kernel);
  auto diff = forms::apply_box(sol.u, blocks);
  diff.axpy(-1.0, fr);
  CHECK(diff.norm() < 1e-8 * fr.norm());

  const auto low = FourierForm::zero(ctx, 0);
  CHECK_THROWS_AS(forms::solve_box(low, blocks, opt), ConfigError);
}

TEST_CASE("dbar solve") {
  const auto ctx = context(spectrum::synth_complex(4, {2, 3, 3, 2}, {0.0}, 11, 0.0, std::vector<int>{1, 1, 1}));
  const auto blocks = forms::TransferBlocks::from(ctx->spectrum());
  auto psi = FourierForm::random(ctx, 1, 9);
  psi.axpy(-1.0, forms::kernel_part(psi));
  const auto varsigma = forms::apply_dbar(psi, blocks);
  const auto sol = forms::solve_dbar(varsigma, blocks);
  CHECK(sol.residual < 1e-7);
  CHECK(sol.closedness < 1e-8);

  const auto zero = forms::solve_dbar(FourierForm::zero(ctx, 2), blocks);
  CHECK(zero.phi.norm() == 0.0);

  CHECK_THROWS_AS(forms::solve_dbar(FourierForm::random(ctx, 2, 10), blocks), RejectedInput);
}

TEST_CASE("dbar solve rejects kernel components") {
  // All differentials vanish, so every label is harmonic and closed.
  const auto ctx = context(spectrum::synth_complex(4, {1, 1, 1}, {0.0}, 2, 0.0, std::vector<int>{0, 0}));
  const auto blocks = forms::TransferBlocks::from(ctx->spectrum());
  const auto basis = forms::box_kernel_basis(ctx, 1, 0);
  REQUIRE(basis.size() == 1);
  CHECK(forms::apply_dbar(basis[0], blocks).norm() < 1e-10);
  CHECK_THROWS_AS(forms::solve_dbar(basis[0], blocks), RejectedInput);
}

TEST_CASE("box kernel basis") {
  const auto stub = spectrum::sphere_stub_spectrum(4, 2);
  CHECK(forms::box_kernel_basis(context(stub.complex), 1, 3).empty());

  const auto ctx = context(spectrum::synth_complex(4, {1, 1, 1}, {0.0}, 2, 0.0, std::vector<int>{0, 0}));
  const auto blocks = forms::TransferBlocks::from(ctx->spectrum());
  const auto basis = forms::box_kernel_basis(ctx, 1, 3);
  REQUIRE(basis.size() == 4);
  for (std::size_t i = 0; i < basis.size(); ++i) {
    CHECK(forms::apply_box(basis[i], blocks).norm() < 1e-10);
    for (std::size_t j = 0; j < basis.size(); ++j) {
      const double expected = i == j ? 1.0 : 0.0;
      CHECK(std::abs(forms::inner_product(basis[i], basis[j]) - expected) < 1e-10);
    }
  }
}

TEST_CASE("results do not depend on the thread count") {
  const auto complex = spectrum::synth_complex(4, {2, 3, 3, 2}, {-1.0, 0.0, 1.0}, 5);
  const auto one = context(complex, 1), three = context(complex, 3);
  const auto b1 = forms::TransferBlocks::from(one->spectrum());
  const auto b3 = forms::TransferBlocks::from(three->spectrum());
  const auto f1 = FourierForm::random(one, 1, 12), f3 = FourierForm::random(three, 1, 12);
  const auto u1 = forms::solve_box(f1, b1).u, u3 = forms::solve_box(f3, b3).u;
  REQUIRE(u1.top.size() == u3.top.size());
  for (const auto& [k, v] : u1.top) CHECK(v.values == u3.top.at(k).values);
  for (const auto& [k, v] : u1.bot) CHECK(v.values == u3.bot.at(k).values);
}

TEST_CASE("box modes") {
  CHECK(forms::box_mode_from_string("plus_one") == forms::BoxMode::plus_one);
  CHECK(forms::box_mode_from_string(forms::to_string(forms::BoxMode::kernel_orthogonal)) ==
        forms::BoxMode::kernel_orthogonal);
  CHECK_THROWS_AS(forms::box_mode_from_string("other"), ConfigError);
}
