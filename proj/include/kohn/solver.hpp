#pragma once

// Galerkin solvers for the reduced problems on D:
//   transverse  P⊥ = Γ + (W_α)*(W_α)   with zero trace,
//   tangential  P⊤ = Γ + W̄_σ* W̄_σ     with natural boundary conditions,
// the holomorphic-type kernel of W̄_σ, and estimate-constant measurement.

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include "kohn/fem.hpp"
#include "kohn/geometry.hpp"
#include "kohn/ops.hpp"
#include "kohn/spectrum.hpp"

namespace kohn::solver {

using fem::CoefficientField;
using fem::FESpace;
using fem::SparseMatrixC;
using fem::SpacePtr;
using spectrum::SigmaLabel;

enum class Problem { transverse, tangential };

struct AssembledOperator {
  Problem which = Problem::transverse;
  SigmaLabel sigma;
  SpacePtr space;
  SparseMatrixC matrix;           // full N × N form matrix
  std::vector<int> constrained;   // interior dofs (transverse) or all dofs

  double hermitian_residual() const;
  // Smallest generalized eigenvalue of matrix vs mass on the free dofs
  // (inverse iteration).
  double smallest_eigenvalue(int iterations = 200) const;
};

AssembledOperator assemble_transverse(const SigmaLabel& sigma, const SpacePtr& space);
AssembledOperator assemble_tangential(const SigmaLabel& sigma, const SpacePtr& space);

struct SolverOptions {
  enum class Method { direct, cg } method = Method::direct;
  double tol = 1e-10;
  int max_iter = 10000;
  std::optional<VectorXc> initial_guess;  // full-length, cg only
};

struct SolveReport {
  int iterations = 0;
  double residual = 0.0;  // relative algebraic residual of the solved system
};

// Right-hand sides are load vectors b_i = ⟨f, φ_i⟩; use space.mass() * f for fields.
CoefficientField solve_transverse_load(const SigmaLabel& sigma, const SpacePtr& space, const VectorXc& load,
                                       const SolverOptions& options = {}, SolveReport* report = nullptr);
CoefficientField solve_transverse(const SigmaLabel& sigma, const CoefficientField& f,
                                  const SolverOptions& options = {}, SolveReport* report = nullptr);

// Complex-compatible discretization of W̄_σ: A = P_{V0} W̄_σ : V → V0 and its
// L² adjoint A† = M⁻¹E0^H, with E0_ij = ⟨W̄_σ φ_j, φ_i⟩ (i interior). Depends
// on σ only through β = (λ + ν)/2. Vectors are full-length; V0 members carry
// zero boundary values.
class CompatibleOperator {
 public:
  CompatibleOperator(SpacePtr space, double beta);

  const SpacePtr& space() const { return space_; }
  double beta() const { return beta_; }
  VectorXc apply_A(const VectorXc& u) const;
  VectorXc apply_Adag(const VectorXc& g) const;
  // (c + A†A) u = f on V, c > 0.
  VectorXc solve_tangential(double c, const VectorXc& f) const;
  // (c + AA†) g = P_{V0} f on V0, c ≥ 0.
  VectorXc solve_transverse(double c, const VectorXc& f) const;
  // Orthogonal projection onto Ker A (the discrete kernel of W̄_σ).
  VectorXc kernel_projection(const VectorXc& f) const;
  // u ⊥ Ker A with A†A u = f − P_ker f; the kernel part is returned separately.
  VectorXc tangential_pseudo_solve(const VectorXc& f, VectorXc* kernel_part) const;
  // M0⁻¹ r on interior dofs, returned full-length.
  VectorXc interior_mass_solve(const VectorXc& r0) const;
  int kernel_dimension() const { return space_->num_dofs() - space_->num_interior(); }

 private:
  using LU = Eigen::SparseLU<SparseMatrixC, Eigen::COLAMDOrdering<int>>;
  const LU& factor(bool tangential, double c) const;

  SpacePtr space_;
  double beta_;
  SparseMatrixC e0_;  // N0 × N
  SparseMatrixC m0_;  // N0 × N0
  Eigen::SimplicialLDLT<SparseMatrixC> m0_ldlt_;
  mutable std::mutex mutex_;
  mutable std::map<std::pair<bool, double>, std::unique_ptr<LU>> cache_;
};

using CompatiblePtr = std::shared_ptr<const CompatibleOperator>;

struct KernelBasis {
  SigmaLabel sigma;
  int degree_cap = 0;
  Complex center;
  // k_j(w) = s^{(λ+ν)/2} Σ_m coefficients(j, m) (w − center)^m.
  MatrixXc coefficients;
  std::vector<CoefficientField> fields;  // nodal interpolants

  int size() const { return static_cast<int>(fields.size()); }
  fem::SmoothFn member(int j) const;
  // Gram matrix of the analytic members under the mesh quadrature.
  MatrixXc gram(const FESpace& space) const;
};

// Orthonormal basis of span{s^{(λ+ν)/2}(w − w_c)^j : j ≤ cap} (modified
// Gram-Schmidt, two passes); empty when Γ > 0.
KernelBasis kernel_basis(const SigmaLabel& sigma, const geo::DomainSpec& domain, const SpacePtr& space,
                         int degree_cap);

enum class KernelMode {
  discrete,  // exact kernel of the compatible operator A
  capped     // span of the capped analytic basis, Galerkin on its complement
};

struct TangentialSolution {
  CoefficientField u;
  CoefficientField f_kernel_part;
};

TangentialSolution solve_tangential(const SigmaLabel& sigma, const CoefficientField& f, int degree_cap,
                                    const geo::DomainSpec& domain, KernelMode mode = KernelMode::discrete,
                                    const SolverOptions& options = {}, SolveReport* report = nullptr);
TangentialSolution solve_tangential_load(const SigmaLabel& sigma, const SpacePtr& space, const VectorXc& load,
                                         const SolverOptions& options = {}, SolveReport* report = nullptr);
// (1 + P⊤) u = f.
CoefficientField solve_tangential_plus_one(const SigmaLabel& sigma, const CoefficientField& f);

// Dual-norm residual of (c + P⊤) f = μ f for a smooth f, from the weak form
// (c + Γ)⟨f, v⟩ + ⟨W̄_σ f, W̄_σ v⟩ − μ⟨f, v⟩ over v ∈ V, relative to ‖f‖.
// W̄_σ f is taken by finite differences unless given.
double tangential_eigen_residual(const SigmaLabel& sigma, const fem::SmoothFn& f, double c, double mu,
                                 const FESpace& space);
double tangential_eigen_residual(const SigmaLabel& sigma, const fem::SmoothFn& f, const fem::SmoothFn& wbar_f,
                                 double c, double mu, const FESpace& space);

// C(δ) = 1/min{1 − 1/c², 1 + δ²(1 − c²)} at the c² maximizing the minimum.
double shift_constant(double delta);

enum class EstimateKind { basic, shift, exact, weighted, transverse };
EstimateKind estimate_kind_from_string(const std::string& name);
std::string to_string(EstimateKind kind);

struct ConstantsRow {
  std::string sigma_id;
  double gamma = 0.0;
  double lambda = 0.0;
  double ratio = 0.0;
};

struct ConstantsTable {
  EstimateKind kind = EstimateKind::basic;
  double h = 0.0;
  std::vector<ConstantsRow> rows;
  double max_ratio = 0.0;
};

struct EstimateOptions {
  std::uint64_t seed = 1;
  int test_fields = 3;
  double shift_delta = 1.0;
  int threads = 1;
};

// For each σ, the largest ratio of the selected estimate over a fixed set of
// seeded test fields shared by all σ;
// rows are reported in the order of `sample`.
ConstantsTable measure_estimate_constants(EstimateKind kind, const std::vector<SigmaLabel>& sample,
                                          const SpacePtr& space, const geo::DomainSpec& domain,
                                          const EstimateOptions& options = {});

}  // namespace kohn::solver
