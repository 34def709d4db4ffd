#pragma once

// W = is∂_t + s∂_s, W̄ = −is∂_t + s∂_s and their σ-shifts acting on discrete
// fields (element derivatives, L²-projected back to nodes) and on smooth
// closures (fourth-order central differences); Hermitian forms Q_α, Q̄_β;
// σ-Sobolev and ϱ-weighted norms; identity residuals.

#include <functional>

#include "kohn/fem.hpp"
#include "kohn/geometry.hpp"
#include "kohn/spectrum.hpp"

namespace kohn::ops {

using fem::CoefficientField;
using fem::FESpace;
using fem::Op1;
using fem::SmoothFn;
using spectrum::SigmaLabel;
using RealFn = std::function<double(double t, double s)>;

// W̄_σ = W̄ − (λ+ν)/2, W_σ = W + (λ−ν)/2, W_α = W + α.
Op1 wbar_sigma_op(const SigmaLabel& sigma);
Op1 w_sigma_op(const SigmaLabel& sigma);
Op1 w_alpha_op(double alpha);

// --- discrete fields ---------------------------------------------------------

CoefficientField apply_op(const Op1& op, const CoefficientField& u);
CoefficientField apply_W(const CoefficientField& u);
CoefficientField apply_Wbar(const CoefficientField& u);
CoefficientField apply_W_sigma(const SigmaLabel& sigma, const CoefficientField& u);
CoefficientField apply_Wbar_sigma(const SigmaLabel& sigma, const CoefficientField& u);

// ⟨Au, Bv⟩ = ∫ (Au) conj(Bv) s^p dt ds by element quadrature.
Complex form_ip(const Op1& a, const CoefficientField& u, const Op1& b, const CoefficientField& v,
                double power = fem::kHyperbolicPower);
Complex inner(const CoefficientField& u, const CoefficientField& v);
double norm(const CoefficientField& u);

// L²(D) with the weight s^ν: ⟨u, v⟩_ν = ∫ u conj(v) s^{ν−2} dt ds.
class WeightedL2 {
 public:
  explicit WeightedL2(double nu) : nu_(nu) {}
  double nu() const { return nu_; }
  Complex operator()(const CoefficientField& u, const CoefficientField& v) const;
  Complex operator()(const Op1& a, const CoefficientField& u, const Op1& b, const CoefficientField& v) const;
  double norm(const CoefficientField& u) const;

 private:
  double nu_;
};

// Q_α(v, u) = ⟨(α+W)v, (α+W)u⟩, Q̄_β(v, u) = ⟨(β+W̄)v, (β+W̄)u⟩.
Complex form_Q(double alpha, const CoefficientField& v, const CoefficientField& u);
Complex form_Qbar(double beta, const CoefficientField& v, const CoefficientField& u);

double fundamental_identity_residual(double alpha, double c, const CoefficientField& v, const CoefficientField& u);

// |⟨Wu, v⟩_ν − ⟨u, (1 − ν − W̄)v⟩_ν| / (‖u‖_ν ‖v‖_ν) for zero-trace fields.
double adjoint_residual(const CoefficientField& u, const CoefficientField& v, double nu);

// Weak form of [W, W̄]u − (W̄ − W)u tested against zero-trace v, relative to
// ‖u‖_{W¹} ‖v‖_{W¹}.
double commutator_residual(const CoefficientField& u, const CoefficientField& v);

// max |E − F| / max |E| with E_ij = ⟨W̄_σ φ_j, φ_i⟩, F_ij = ⟨φ_j, −W_α φ_i⟩
// over interior dofs.
double wbar_sigma_adjoint_residual(const SigmaLabel& sigma, const FESpace& space);

double sigma_norm(int k, const SigmaLabel& sigma, const CoefficientField& u);
double rho_weighted_norm(int k, int j, const SigmaLabel& sigma, const RealFn& rho, const CoefficientField& u);
double rho_weighted_norm(int k, int j, const SigmaLabel& sigma, const geo::DefiningFunction& rho,
                         const CoefficientField& u);

// --- smooth closures ---------------------------------------------------------

// Fourth-order central differences with step rel_step·s.
SmoothFn apply_fd(const Op1& op, SmoothFn f, double rel_step = 1e-3);
SmoothFn apply_W(SmoothFn f);
SmoothFn apply_Wbar(SmoothFn f);
SmoothFn apply_W_sigma(const SigmaLabel& sigma, SmoothFn f);
SmoothFn apply_Wbar_sigma(const SigmaLabel& sigma, SmoothFn f);

// ∫ |f|² s^p over the quadrature of `space`.
double norm(const SmoothFn& f, const FESpace& space, double power = fem::kHyperbolicPower);
double sigma_norm(int k, const SigmaLabel& sigma, const SmoothFn& u, const FESpace& space);
double rho_weighted_norm(int k, int j, const SigmaLabel& sigma, const RealFn& rho, const SmoothFn& u,
                         const FESpace& space);

// Pointwise |[W, W̄]f − (W̄ − W)f| / max(|Wf|, |W̄f|, |f|) maximized over points.
double commutator_residual(const SmoothFn& f, const std::vector<geo::HalfPlanePoint>& points);

}  // namespace kohn::ops
