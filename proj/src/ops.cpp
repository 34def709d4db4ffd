#include "kohn/ops.hpp"

#include <algorithm>
#include <cmath>

namespace kohn::ops {

namespace {

double weight(double s, double power) { return power == -2.0 ? 1.0 / (s * s) : std::pow(s, power); }

const FESpace& space_of(const CoefficientField& u) {
  if (!u.space) throw UsageError("field has no mesh");
  return *u.space;
}

void check_same_space(const CoefficientField& u, const CoefficientField& v) {
  if (u.space != v.space) throw UsageError("fields live on different meshes");
}

CoefficientField scaled(const CoefficientField& u, Complex c) { return {u.space, c * u.values, u.degree}; }

CoefficientField multiplied(const CoefficientField& u, const RealFn& rho) {
  const auto& mesh = u.space->mesh();
  CoefficientField out = u;
  for (int i = 0; i < mesh.num_nodes(); ++i) {
    const auto& p = mesh.nodes[static_cast<std::size_t>(i)];
    out.values(i) *= rho(p[0], p[1]);
  }
  return out;
}

double norm1_direct(const SigmaLabel& sigma, const CoefficientField& u) {
  const Op1 g = Op1::identity().scaled(sigma.g);
  const double a = form_ip(g, u, g, u).real();
  const double b = form_ip(w_sigma_op(sigma), u, w_sigma_op(sigma), u).real();
  const double c = form_ip(wbar_sigma_op(sigma), u, wbar_sigma_op(sigma), u).real();
  return std::sqrt(std::max(0.0, a + b + c));
}

RealFn rho_callable(const geo::DefiningFunction& rho) {
  return [&rho](double t, double s) { return rho(geo::HalfPlanePoint(t, s)); };
}

}  // namespace

Op1 wbar_sigma_op(const SigmaLabel& sigma) { return Op1::Wbar().shifted(-(sigma.lambda + sigma.nu) / 2.0); }
Op1 w_sigma_op(const SigmaLabel& sigma) { return Op1::W().shifted((sigma.lambda - sigma.nu) / 2.0); }
Op1 w_alpha_op(double alpha) { return Op1::W().shifted(alpha); }

CoefficientField apply_op(const Op1& op, const CoefficientField& u) {
  const FESpace& space = space_of(u);
  const VectorXc rhs = space.assemble(op, Op1::identity()) * u.values;
  return {u.space, space.mass_solve(rhs), u.degree};
}

CoefficientField apply_W(const CoefficientField& u) { return apply_op(Op1::W(), u); }
CoefficientField apply_Wbar(const CoefficientField& u) { return apply_op(Op1::Wbar(), u); }
CoefficientField apply_W_sigma(const SigmaLabel& sigma, const CoefficientField& u) {
  return apply_op(w_sigma_op(sigma), u);
}
CoefficientField apply_Wbar_sigma(const SigmaLabel& sigma, const CoefficientField& u) {
  return apply_op(wbar_sigma_op(sigma), u);
}

Complex form_ip(const Op1& a, const CoefficientField& u, const Op1& b, const CoefficientField& v, double power) {
  check_same_space(u, v);
  const FESpace& space = space_of(u);
  Complex sum{0.0, 0.0};
  for (int e = 0; e < space.mesh().num_triangles(); ++e) {
    const auto gu = space.gradient(u.values, e);
    const auto gv = space.gradient(v.values, e);
    Complex local{0.0, 0.0};
    for (int k = 0; k < space.qp_per_element(); ++k) {
      const double s = space.qp_s(e, k);
      const Complex au = a.apply(space.value(u.values, e, k), gu[0], gu[1], s);
      const Complex bv = b.apply(space.value(v.values, e, k), gv[0], gv[1], s);
      local += au * std::conj(bv) * (space.qp_weight(e, k) * weight(s, power));
    }
    sum += local;
  }
  return sum;
}

Complex inner(const CoefficientField& u, const CoefficientField& v) {
  check_same_space(u, v);
  return v.values.dot(space_of(u).mass() * u.values);
}

double norm(const CoefficientField& u) { return std::sqrt(std::max(0.0, inner(u, u).real())); }

Complex WeightedL2::operator()(const CoefficientField& u, const CoefficientField& v) const {
  return form_ip(Op1::identity(), u, Op1::identity(), v, nu_ - 2.0);
}

Complex WeightedL2::operator()(const Op1& a, const CoefficientField& u, const Op1& b,
                               const CoefficientField& v) const {
  return form_ip(a, u, b, v, nu_ - 2.0);
}

double WeightedL2::norm(const CoefficientField& u) const { return std::sqrt(std::max(0.0, (*this)(u, u).real())); }

Complex form_Q(double alpha, const CoefficientField& v, const CoefficientField& u) {
  const Op1 op = Op1::W().shifted(alpha);
  return form_ip(op, v, op, u);
}

Complex form_Qbar(double beta, const CoefficientField& v, const CoefficientField& u) {
  const Op1 op = Op1::Wbar().shifted(beta);
  return form_ip(op, v, op, u);
}

double fundamental_identity_residual(double alpha, double c, const CoefficientField& v,
                                     const CoefficientField& u) {
  const Complex lhs = form_Q(alpha, v, u);
  const Complex rhs = (1.0 - c) * form_Q(alpha - c, v, u) + c * form_Qbar(c - 1.0 - alpha, v, u) +
                      (2.0 * c * alpha + c * (1.0 - c)) * form_ip(Op1::identity(), v, Op1::identity(), u);
  return std::abs(lhs - rhs) / (std::abs(lhs) + 1.0);
}

double adjoint_residual(const CoefficientField& u, const CoefficientField& v, double nu) {
  const WeightedL2 ip(nu);
  const double nu_ = ip.norm(u), nv = ip.norm(v);
  if (nu_ == 0.0 || nv == 0.0) return 0.0;
  const Complex lhs = ip(Op1::W(), u, Op1::identity(), v);
  const Op1 adj = Op1::Wbar().scaled(-1.0).shifted(1.0 - nu);
  const Complex rhs = ip(Op1::identity(), u, adj, v);
  return std::abs(lhs - rhs) / (nu_ * nv);
}

double commutator_residual(const CoefficientField& u, const CoefficientField& v) {
  const Op1 one_minus_wbar = Op1::Wbar().scaled(-1.0).shifted(1.0);
  const Op1 one_minus_w = Op1::W().scaled(-1.0).shifted(1.0);
  const Complex ww = form_ip(Op1::Wbar(), u, one_minus_wbar, v);  // ⟨W W̄ u, v⟩
  const Complex wbw = form_ip(Op1::W(), u, one_minus_w, v);       // ⟨W̄ W u, v⟩
  const Op1 diff{-2.0 * I, 0.0, 0.0};                               // W̄ − W
  const Complex rhs = form_ip(diff, u, Op1::identity(), v);
  auto w1 = [](const CoefficientField& f) {
    const double a = form_ip(Op1::identity(), f, Op1::identity(), f).real();
    const double b = form_ip(Op1::W(), f, Op1::W(), f).real();
    const double c = form_ip(Op1::Wbar(), f, Op1::Wbar(), f).real();
    return std::sqrt(a + b + c);
  };
  const double scale = w1(u) * w1(v);
  if (scale == 0.0) return 0.0;
  return std::abs(ww - wbw - rhs) / scale;
}

double wbar_sigma_adjoint_residual(const SigmaLabel& sigma, const FESpace& space) {
  const auto e = space.restrict_interior(space.assemble(wbar_sigma_op(sigma), Op1::identity()));
  const auto f = space.restrict_interior(space.assemble(Op1::identity(), w_alpha_op(sigma.alpha).scaled(-1.0)));
  const Eigen::MatrixXcd diff = Eigen::MatrixXcd(e - f);
  const double scale = Eigen::MatrixXcd(e).cwiseAbs().maxCoeff();
  return scale == 0.0 ? 0.0 : diff.cwiseAbs().maxCoeff() / scale;
}

double sigma_norm(int k, const SigmaLabel& sigma, const CoefficientField& u) {
  if (k < 0) throw UsageError("sigma_norm needs k >= 0");
  if (k > 2) throw CapabilityError("sigma_norm: degree-1 fields support k <= 2");
  if (k == 0) return norm(u);
  if (k == 1) return norm1_direct(sigma, u);
  const double a = sigma_norm(k - 1, sigma, scaled(u, sigma.g));
  const double b = sigma_norm(k - 1, sigma, apply_W_sigma(sigma, u));
  const double c = sigma_norm(k - 1, sigma, apply_Wbar_sigma(sigma, u));
  return std::sqrt(a * a + b * b + c * c);
}

double rho_weighted_norm(int k, int j, const SigmaLabel& sigma, const RealFn& rho, const CoefficientField& u) {
  if (k < 0 || j < 0) throw UsageError("rho_weighted_norm needs k, j >= 0");
  if (k + j > 2) throw CapabilityError("rho_weighted_norm: degree-1 fields support k + j <= 2");
  if (k == 0) return sigma_norm(j, sigma, u);
  if (k == 1 && j == 0) {
    const FESpace& space = space_of(u);
    const Op1 ws = w_sigma_op(sigma), wbs = wbar_sigma_op(sigma);
    double sum = 0.0;
    for (int e = 0; e < space.mesh().num_triangles(); ++e) {
      const auto g = space.gradient(u.values, e);
      for (int q = 0; q < space.qp_per_element(); ++q) {
        const double t = space.qp_t(e, q), s = space.qp_s(e, q);
        const Complex val = space.value(u.values, e, q);
        const double r = rho(t, s);
        const double w = space.qp_weight(e, q) / (s * s);
        sum += (std::norm(r * sigma.g * val) + std::norm(r * ws.apply(val, g[0], g[1], s)) +
                std::norm(wbs.apply(val, g[0], g[1], s))) *
               w;
      }
    }
    return std::sqrt(sum);
  }
  const double a = rho_weighted_norm(k - 1, j, sigma, rho, multiplied(scaled(u, sigma.g), rho));
  const double b = rho_weighted_norm(k - 1, j, sigma, rho, multiplied(apply_W_sigma(sigma, u), rho));
  const double c = rho_weighted_norm(k - 1, j, sigma, rho, apply_Wbar_sigma(sigma, u));
  return std::sqrt(a * a + b * b + c * c);
}

double rho_weighted_norm(int k, int j, const SigmaLabel& sigma, const geo::DefiningFunction& rho,
                         const CoefficientField& u) {
  return rho_weighted_norm(k, j, sigma, rho_callable(rho), u);
}

SmoothFn apply_fd(const Op1& op, SmoothFn f, double rel_step) {
  return [op, f = std::move(f), rel_step](double t, double s) -> Complex {
    const double h = rel_step * s;
    const Complex ft = (-f(t + 2 * h, s) + 8.0 * f(t + h, s) - 8.0 * f(t - h, s) + f(t - 2 * h, s)) / (12.0 * h);
    const Complex fs = (-f(t, s + 2 * h) + 8.0 * f(t, s + h) - 8.0 * f(t, s - h) + f(t, s - 2 * h)) / (12.0 * h);
    return op.apply(f(t, s), ft, fs, s);
  };
}

SmoothFn apply_W(SmoothFn f) { return apply_fd(Op1::W(), std::move(f)); }
SmoothFn apply_Wbar(SmoothFn f) { return apply_fd(Op1::Wbar(), std::move(f)); }
SmoothFn apply_W_sigma(const SigmaLabel& sigma, SmoothFn f) { return apply_fd(w_sigma_op(sigma), std::move(f)); }
SmoothFn apply_Wbar_sigma(const SigmaLabel& sigma, SmoothFn f) {
  return apply_fd(wbar_sigma_op(sigma), std::move(f));
}

double norm(const SmoothFn& f, const FESpace& space, double power) {
  const Complex v = space.integrate([&](double t, double s) { return Complex(std::norm(f(t, s)), 0.0); }, power);
  return std::sqrt(std::max(0.0, v.real()));
}

double sigma_norm(int k, const SigmaLabel& sigma, const SmoothFn& u, const FESpace& space) {
  if (k < 0) throw UsageError("sigma_norm needs k >= 0");
  if (k > 2) throw CapabilityError("sigma_norm: smooth evaluation supports k <= 2");
  if (k == 0) return norm(u, space);
  const double g = sigma.g;
  const double a = sigma_norm(k - 1, sigma, [u, g](double t, double s) { return g * u(t, s); }, space);
  const double b = sigma_norm(k - 1, sigma, apply_W_sigma(sigma, u), space);
  const double c = sigma_norm(k - 1, sigma, apply_Wbar_sigma(sigma, u), space);
  return std::sqrt(a * a + b * b + c * c);
}

double rho_weighted_norm(int k, int j, const SigmaLabel& sigma, const RealFn& rho, const SmoothFn& u,
                         const FESpace& space) {
  if (k < 0 || j < 0) throw UsageError("rho_weighted_norm needs k, j >= 0");
  if (k + j > 2) throw CapabilityError("rho_weighted_norm: smooth evaluation supports k + j <= 2");
  if (k == 0) return sigma_norm(j, sigma, u, space);
  const double g = sigma.g;
  const SmoothFn wu = apply_W_sigma(sigma, u);
  const double a =
      rho_weighted_norm(k - 1, j, sigma, rho, [u, g, rho](double t, double s) { return rho(t, s) * g * u(t, s); }, space);
  const double b =
      rho_weighted_norm(k - 1, j, sigma, rho, [wu, rho](double t, double s) { return rho(t, s) * wu(t, s); }, space);
  const double c = rho_weighted_norm(k - 1, j, sigma, rho, apply_Wbar_sigma(sigma, u), space);
  return std::sqrt(a * a + b * b + c * c);
}

double commutator_residual(const SmoothFn& f, const std::vector<geo::HalfPlanePoint>& points) {
  const SmoothFn wf = apply_W(f);
  const SmoothFn wbf = apply_Wbar(f);
  const SmoothFn w_wbf = apply_W(wbf);
  const SmoothFn wb_wf = apply_Wbar(wf);
  double worst = 0.0;
  for (const auto& p : points) {
    const double t = p.t(), s = p.s();
    const Complex lhs = w_wbf(t, s) - wb_wf(t, s);
    const Complex rhs = wbf(t, s) - wf(t, s);
    const double scale = std::max({std::abs(wf(t, s)), std::abs(wbf(t, s)), std::abs(f(t, s)), 1e-300});
    worst = std::max(worst, std::abs(lhs - rhs) / scale);
  }
  return worst;
}

}  // namespace kohn::ops
