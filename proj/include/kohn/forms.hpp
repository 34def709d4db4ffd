#pragma once

// Discretized (0,q)-forms on Ω = D × N through the partial Fourier
// decomposition: per-σ coefficient fields on D, the operators ∂̄, ∂̄*, □ and
// their solves. Transverse coefficients live in the zero-trace space V0 and
// W̄_σ is realized by the compatible operator A of kohn::solver.

#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "kohn/fem.hpp"
#include "kohn/geometry.hpp"
#include "kohn/solver.hpp"
#include "kohn/spectrum.hpp"

namespace kohn::forms {

using fem::CoefficientField;
using fem::SpacePtr;
using spectrum::SigmaKey;
using spectrum::SigmaLabel;
using spectrum::SpectralComplex;

// Shared discretization: spectrum, domain, FE space and the cached A per β.
class Context {
 public:
  Context(std::shared_ptr<const SpectralComplex> spectrum, geo::DomainSpec domain, SpacePtr space,
          int threads = 1);

  const SpectralComplex& spectrum() const { return *spectrum_; }
  const std::shared_ptr<const SpectralComplex>& spectrum_ptr() const { return spectrum_; }
  const geo::DomainSpec& domain() const { return domain_; }
  const SpacePtr& space() const { return space_; }
  int threads() const { return threads_; }
  const SigmaLabel& label(const SigmaKey& key) const { return spectrum_->label(key); }
  double beta(const SigmaKey& key) const;
  const solver::CompatibleOperator& compatible(double beta) const;

 private:
  std::shared_ptr<const SpectralComplex> spectrum_;
  geo::DomainSpec domain_;
  SpacePtr space_;
  int threads_;
  mutable std::mutex mutex_;
  mutable std::map<double, solver::CompatiblePtr> compatible_;
};

using ContextPtr = std::shared_ptr<const Context>;

// Per-block differentials in the σ eigenbases, T[b][q] = E_{q+1}^H D_q E_q.
struct TransferBlocks {
  std::vector<std::vector<MatrixXc>> T;

  static TransferBlocks from(const SpectralComplex& complex);
  bool covers(int block) const { return block >= 0 && block < static_cast<int>(T.size()); }
  // Empty matrix when level q has no outgoing differential.
  const MatrixXc& at(int block, int q) const;
};

struct FourierForm {
  int q = 0;
  ContextPtr context;
  std::map<SigmaKey, CoefficientField> top;  // tangential slots, key.q == q
  std::map<SigmaKey, CoefficientField> bot;  // transverse slots, key.q == q − 1

  static FourierForm zero(ContextPtr context, int q);
  // Every label at levels q and q − 1 populated with seeded smooth fields;
  // transverse fields are zero-trace.
  static FourierForm random(ContextPtr context, int q, std::uint64_t seed);

  // Throws UsageError if a slot has the wrong degree, block or space.
  void check() const;
  double norm() const;
  bool empty() const { return top.empty() && bot.empty(); }
  // this += c·other (slots are merged).
  FourierForm& axpy(Complex c, const FourierForm& other);
};

// Σ_σ ⟨φ^⊤_σ, ψ^⊤_σ⟩ + Σ_σ ⟨φ^⊥_σ, ψ^⊥_σ⟩ in L²(D).
Complex inner_product(const FourierForm& phi, const FourierForm& psi);

FourierForm apply_dbar(const FourierForm& phi, const TransferBlocks& blocks);
FourierForm apply_dbar_star(const FourierForm& phi, const TransferBlocks& blocks);
// Diagonal form: (Γ + A†A) on tangential slots, (Γ + AA†) on transverse slots.
// Transverse slots must be zero-trace (DomainError otherwise).
FourierForm apply_box(const FourierForm& phi, const TransferBlocks& blocks);

// Tangential Γ = 0 components in the discrete kernel of □.
FourierForm kernel_part(const FourierForm& phi);

enum class BoxMode { plus_one, kernel_orthogonal };
BoxMode box_mode_from_string(const std::string& name);
std::string to_string(BoxMode mode);

struct SlotConstant {
  std::string sigma_id;
  std::string part;  // "top" or "bot"
  double gamma = 0.0;
  double lambda = 0.0;
  double ratio = 0.0;  // ‖u_σ‖ / ‖f_σ‖
};

struct BoxSolveOptions {
  BoxMode mode = BoxMode::plus_one;
  solver::KernelMode kernel = solver::KernelMode::discrete;
  int degree_cap = 4;  // capped kernel mode only
};

struct BoxSolution {
  FourierForm u;
  FourierForm f_kernel;  // removed kernel component (kernel_orthogonal)
  std::vector<SlotConstant> constants;
  double residual = 0.0;  // ‖(c + □)u − f_r‖ / ‖f_r‖
};

// (1 + □)u = f, or □u = f − P_ker f with u ⊥ Ker □. Requires 1 ≤ q ≤ n − 2
// for kernel_orthogonal (ConfigError otherwise).
BoxSolution solve_box(const FourierForm& f, const TransferBlocks& blocks, const BoxSolveOptions& options = {});

struct DbarOptions {
  double precondition_tol = 1e-8;
  double residual_tol = 1e-7;
};

struct DbarSolution {
  FourierForm phi;
  double closedness = 0.0;        // ‖∂̄ς‖ / ‖ς‖
  double kernel_component = 0.0;  // ‖P_ker ς‖ / ‖ς‖
  double residual = 0.0;          // ‖∂̄φ − ς‖ / ‖ς‖
  double stability = 0.0;         // ‖φ‖ / ‖ς‖
};

// φ = ∂̄* □⁻¹ ς for closed, kernel-orthogonal ς; RejectedInput otherwise.
DbarSolution solve_dbar(const FourierForm& varsigma, const TransferBlocks& blocks, const DbarOptions& options = {});

// Discrete kernel members of □ at degree q from the capped analytic basis of
// every Γ = 0 label, projected onto Ker A and orthonormalized per slot.
std::vector<FourierForm> box_kernel_basis(const ContextPtr& context, int q, int degree_cap);

}  // namespace kohn::forms
