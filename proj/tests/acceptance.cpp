// Acceptance suite: one pass/fail line per criterion, nonzero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "kohn/experiments.hpp"
#include "kohn/fields.hpp"
#include "kohn/forms.hpp"
#include "kohn/ops.hpp"
#include "kohn/solver.hpp"

using namespace kohn;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

// Verdict plus the failing checks of a report.
Outcome verdict_of(const experiments::ExperimentReport& r, std::string detail) {
  Outcome o{r.verdict == experiments::Verdict::reproduced, std::move(detail)};
  for (const auto& c : r.checks)
    if (!c.pass) o.detail += "; failed " + c.name + fmt(" = %.4g", c.value);
  return o;
}

double measured(const experiments::ExperimentReport& r, const std::string& name) {
  for (const auto& m : r.measurements)
    if (m.name == name) return m.value;
  return std::nan("");
}

double w1_norm_sq(const fem::CoefficientField& u) {
  using fem::Op1;
  return ops::form_ip(Op1::identity(), u, Op1::identity(), u).real() + ops::form_ip(Op1::W(), u, Op1::W(), u).real() +
         ops::form_ip(Op1::Wbar(), u, Op1::Wbar(), u).real();
}

const geo::DomainSpec& disc() {
  static const geo::DomainSpec d = experiments::default_disc();
  return d;
}

Outcome fundamental_identity() {
  const auto space = fem::make_space(disc(), 0.1);
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> U(-3.0, 3.0);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const double alpha = U(rng), c = U(rng);
    const auto u = fields::random_field(space, disc(), fields::mix_seed(11, i, 0), true);
    const auto v = fields::random_field(space, disc(), fields::mix_seed(11, i, 1), true);
    worst = std::max({worst, ops::fundamental_identity_residual(alpha, c, u, u),
                      ops::fundamental_identity_residual(alpha, c, v, u)});
  }
  return {worst < 1e-6, fmt("max relative residual %.2e over 100 (alpha, c) < 1e-6", worst)};
}

Outcome operator_algebra() {
  const auto space = fem::make_space(disc(), 0.1);
  double comm = 0.0, adj = 0.0;
  for (int i = 0; i < 10; ++i) {
    const auto u = fields::random_field(space, disc(), fields::mix_seed(21, i, 0), true);
    const auto v = fields::random_field(space, disc(), fields::mix_seed(21, i, 1), true);
    comm = std::max(comm, ops::commutator_residual(u, v));
    adj = std::max(adj, ops::adjoint_residual(u, v, 0.0));
  }
  double wbar = 0.0;
  for (double lambda : {-2.0, 0.0, 1.5})
    for (double nu : {0.0, 0.5})
      wbar = std::max(wbar, ops::wbar_sigma_adjoint_residual(spectrum::SigmaLabel::make(1, 1.0, lambda, nu, 4), *space));
  const bool ok = comm < 1e-7 && adj < 1e-7 && wbar < 1e-8;
  return {ok, fmt("commutator %.2e, W* = 1 - Wbar %.2e (< 1e-7); Wbar_sigma* vs -W_alpha %.2e (< 1e-8)", comm, adj, wbar)};
}

Outcome coercivity() {
  const auto space = fem::make_space(disc(), 0.1);
  double worst = 1e300;
  // (alpha, uses the (alpha + 1/2)^2 bound)
  const std::vector<std::pair<double, bool>> cases = {{0.5, false}, {1.0, false}, {3.0, false},
                                                      {-0.4, true}, {0.0, true},  {0.4, true}};
  for (const auto& [alpha, shifted] : cases) {
    for (int i = 0; i < 50; ++i) {
      const auto u = fields::random_field(space, disc(), fields::mix_seed(31, i, 0), true);
      const double q = ops::form_Q(alpha, u, u).real();
      const double l2 = ops::form_ip(fem::Op1::identity(), u, fem::Op1::identity(), u).real();
      const double bound = shifted ? (alpha + 0.5) * (alpha + 0.5) * l2 : 2.0 * alpha * l2;
      worst = std::min(worst, (q - bound) / w1_norm_sq(u));
    }
  }
  return {worst >= -1e-6, fmt("min (Q_alpha(u,u) - bound)/|u|^2_W1 = %.3e >= -1e-6 over 300 fields", worst)};
}

Outcome transverse_solver() {
  const auto conv = experiments::run_convergence();
  experiments::SweepOptions o;
  o.kind = solver::EstimateKind::transverse;
  o.sample = 25;
  const auto sweep = experiments::run_estimate_sweep(o);
  const double rate = measured(conv, "rate_transverse");
  Outcome a = verdict_of(conv, fmt("L2 rate %.3f in [1.8, 2.2]", rate));
  Outcome b = verdict_of(sweep, fmt("; transverse constant %.4f over 50 labels", measured(sweep, "max_ratio_2N")));
  for (const auto& c : sweep.checks)
    if (c.kind == experiments::Check::Kind::stability) b.detail += fmt(", change %.2e", c.value);
  return {a.pass && b.pass && rate >= 1.8 && rate <= 2.2, a.detail + b.detail + " (<= 10%)"};
}

Outcome tangential_solver() {
  const auto stub = spectrum::sphere_stub_spectrum(4, 8);
  const auto space = fem::make_space(disc(), 0.1);
  const double gamma0 = stub.meta.gamma0;
  double worst = -1e300;
  int count = 0;
  for (const auto& l : stub.labels) {
    if (l.q > stub.meta.n - 2 || l.gamma < gamma0 || count >= 20) continue;
    const auto f = fields::random_field(space, disc(), fields::mix_seed(41, count, 0), false);
    const auto sol = solver::solve_tangential(l, f, 4, disc());
    worst = std::max(worst, ops::norm(sol.u) - (ops::norm(f) / gamma0 + 1e-8));
    ++count;
  }
  experiments::SweepOptions o;
  o.kind = solver::EstimateKind::exact;
  const auto exact = experiments::run_estimate_sweep(o);
  o.kind = solver::EstimateKind::weighted;
  const auto weighted = experiments::run_estimate_sweep(o);
  Outcome e = verdict_of(exact, fmt("; exact ratio %.4f", measured(exact, "max_ratio_2N")));
  Outcome w = verdict_of(weighted, fmt(", weighted ratio %.4f", measured(weighted, "max_ratio_2N")));
  return {worst <= 0.0 && count > 0 && e.pass && w.pass,
          fmt("max |u| - (|f|/Gamma0 + 1e-8) = %.2e over %.0f labels", worst, count) + e.detail + w.detail +
              " (bounded, stable within 10%)"};
}

std::shared_ptr<const spectrum::SpectralComplex> synthetic(std::vector<double> lambdas, std::uint64_t seed,
                                                          std::optional<std::vector<int>> ranks = std::nullopt) {
  return std::make_shared<const spectrum::SpectralComplex>(
      spectrum::synth_complex(4, {2, 3, 3, 2}, lambdas, seed, 0.0, ranks));
}

forms::ContextPtr context(std::shared_ptr<const spectrum::SpectralComplex> s, double h) {
  return std::make_shared<const forms::Context>(s, disc(), fem::make_space(disc(), h));
}

Outcome assembler() {
  const auto ctx = context(synthetic({-1.0, 0.0, 1.0}, 5), 0.1);
  const auto blocks = forms::TransferBlocks::from(ctx->spectrum());
  double sq = 0.0, diag = 0.0, energy = 0.0;
  for (int i = 0; i < 20; ++i) {
    const auto phi = forms::FourierForm::random(ctx, 1 + i % 2, fields::mix_seed(61, i));
    const auto d = forms::apply_dbar(phi, blocks);
    const auto ds = forms::apply_dbar_star(phi, blocks);
    sq = std::max(sq, forms::apply_dbar(d, blocks).norm() / phi.norm());
    const auto box = forms::apply_box(phi, blocks);
    auto composed = forms::apply_dbar_star(d, blocks);
    composed.axpy(1.0, forms::apply_dbar(ds, blocks));
    auto diff = composed;
    diff.axpy(-1.0, box);
    diag = std::max(diag, diff.norm() / box.norm());
    const double lhs = forms::inner_product(box, phi).real();
    const double rhs = d.norm() * d.norm() + ds.norm() * ds.norm();
    energy = std::max(energy, std::abs(lhs - rhs) / std::abs(lhs));
  }
  return {sq < 1e-10 && diag < 1e-8 && energy < 1e-8,
          fmt("dbar^2 %.2e (< 1e-10), diagonal vs composed %.2e, energy identity %.2e (< 1e-8)", sq, diag, energy)};
}

Outcome dbar_roundtrip() {
  const auto spec = synthetic({0.0}, 11, std::vector<int>{1, 1, 1});
  double worst_res = 0.0;
  std::vector<double> stab;
  for (double h : {0.1, 0.05}) {
    const auto ctx = context(spec, h);
    const auto blocks = forms::TransferBlocks::from(ctx->spectrum());
    double s_max = 0.0;
    for (int i = 0; i < 10; ++i) {
      auto psi = forms::FourierForm::random(ctx, 1, fields::mix_seed(71, i));
      psi.axpy(-1.0, forms::kernel_part(psi));
      const auto varsigma = forms::apply_dbar(psi, blocks);
      const auto sol = forms::solve_dbar(varsigma, blocks);
      worst_res = std::max(worst_res, sol.residual);
      s_max = std::max(s_max, sol.stability);
    }
    stab.push_back(s_max);
  }
  const double change = std::abs(stab[1] - stab[0]) / stab[0];
  return {worst_res < 1e-7 && change <= 0.1,
          fmt("max residual %.2e (< 1e-7); stability %.4f -> %.4f", worst_res, stab[0], stab[1]) +
              fmt(", change %.2e (<= 10%%)", change)};
}

Outcome noncompact() {
  const auto r = experiments::run_noncompactness();
  return verdict_of(r, fmt("K = 20, min ball distance %.4f >= delta_min %.4f, eigen residual %.1e",
                           measured(r, "min_dist_ball"), measured(r, "delta_min"), measured(r, "max_eigen_residual")));
}

Outcome negreg() {
  const auto r = experiments::run_negregularity();
  return verdict_of(r, fmt("|Wbar_sigma u| %.1e, eigen residual %.1e, collar growth monotone",
                           measured(r, "norm_Wbar_sigma_u") / measured(r, "norm_u"), measured(r, "Ptop_eigen_residual")));
}

Outcome disc_nonsurjective() {
  const auto r = experiments::run_disc_nonsurjectivity();
  const auto* drop = r.find_check("ratio_drop_factor");
  return verdict_of(r, fmt("ratio drop x%.1f (>= 10), |f_j| >= %.3f", drop ? drop->value : 0.0,
                           measured(r, "norm_lower_bound")));
}

Outcome hypoelliptic() {
  const auto r = experiments::run_hypoellipticity();
  std::string dims;
  for (const auto& c : r.checks)
    if (c.name.find("_dim@cap=") != std::string::npos)
      dims += (dims.empty() ? "" : " ") + fmt("%.0f", c.value);
  return verdict_of(r, "kernel dims [" + dims + "] at caps 1, 2, 4, 8 (free spectrum first)");
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"fundamental identity", fundamental_identity},
      {"operator algebra", operator_algebra},
      {"coercivity", coercivity},
      {"transverse solver", transverse_solver},
      {"tangential solver", tangential_solver},
      {"assembler consistency", assembler},
      {"dbar roundtrip", dbar_roundtrip},
      {"non-compactness", noncompact},
      {"boundary regularity failure", negreg},
      {"disc non-surjectivity", disc_nonsurjective},
      {"hypoellipticity dichotomy", hypoelliptic},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("[%s] %2zu %-28s %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                o.detail.c_str(), sec);
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
