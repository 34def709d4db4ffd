#pragma once

// Degree-1 Lagrange elements on a Mesh with complex nodal values, element
// quadrature, and assembly of sesquilinear forms of first-order operators
// c_t·s∂_t + c_s·s∂_s + c_0 under the measure s^p dt ds.

#include <functional>
#include <memory>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "kohn/common.hpp"
#include "kohn/mesh.hpp"

namespace kohn::fem {

using SparseMatrixC = Eigen::SparseMatrix<Complex>;
using SmoothFn = std::function<Complex(double t, double s)>;

// Reference-triangle rule on {(x, y): x, y ≥ 0, x + y ≤ 1}; weights sum to 1/2.
struct QuadratureRule {
  std::vector<std::array<double, 2>> points;
  std::vector<double> weights;
  int order = 0;  // exact for polynomials of total degree ≤ order

  // Collapsed tensor Gauss-Legendre rule with n points per direction.
  static QuadratureRule collapsed_gauss(int n);
  // Max error integrating x^a y^b, a + b ≤ order, against the exact value a! b!/(a+b+2)!.
  double self_test() const;
};

// Gauss-Legendre nodes/weights on [0, 1].
void gauss_legendre01(int n, std::vector<double>& x, std::vector<double>& w);

// First-order operator u ↦ ct·s·∂_t u + cs·s·∂_s u + c0·u.
struct Op1 {
  Complex ct{0.0, 0.0};
  Complex cs{0.0, 0.0};
  Complex c0{0.0, 0.0};

  static Op1 identity() { return {0.0, 0.0, 1.0}; }
  static Op1 W() { return {I, 1.0, 0.0}; }
  static Op1 Wbar() { return {-I, 1.0, 0.0}; }
  Op1 shifted(Complex c) const { return {ct, cs, c0 + c}; }
  Op1 scaled(Complex c) const { return {c * ct, c * cs, c * c0}; }
  Complex apply(Complex u, Complex ut, Complex us, double s) const { return ct * s * ut + cs * s * us + c0 * u; }
};

// Measure exponent of the coefficient space L²(D): s^-2 dt ds.
inline constexpr double kHyperbolicPower = -2.0;

class FESpace {
 public:
  FESpace(Mesh mesh, int quadrature_points = 6);

  const Mesh& mesh() const { return mesh_; }
  int num_dofs() const { return mesh_.num_nodes(); }
  int num_interior() const { return static_cast<int>(interior_.size()); }
  const std::vector<int>& interior() const { return interior_; }
  // Position of node i among interior dofs, or -1 on the boundary.
  int interior_index(int node) const { return interior_index_[static_cast<std::size_t>(node)]; }
  const QuadratureRule& rule() const { return rule_; }
  int qp_per_element() const { return static_cast<int>(rule_.points.size()); }

  // Quadrature data; index e * qp_per_element() + k.
  double qp_t(int e, int k) const { return qt_[idx(e, k)]; }
  double qp_s(int e, int k) const { return qs_[idx(e, k)]; }
  double qp_weight(int e, int k) const { return qw_[idx(e, k)]; }  // Euclidean
  double basis(int e, int k, int a) const { return phi_[idx(e, k) * 3 + static_cast<std::size_t>(a)]; }
  const std::array<double, 6>& gradients(int e) const { return grad_[static_cast<std::size_t>(e)]; }

  // K_ij = ∫ (A φ_j) conj(B φ_i) s^p dt ds, so ⟨Au, Bv⟩ = v^H K u.
  SparseMatrixC assemble(const Op1& a, const Op1& b, double power = kHyperbolicPower) const;
  const SparseMatrixC& mass() const { return mass_; }
  // Solves M x = b with the cached factorization of the hyperbolic mass matrix.
  VectorXc mass_solve(const VectorXc& b) const;

  // Restriction of a full matrix to interior rows/columns.
  SparseMatrixC restrict_interior(const SparseMatrixC& full) const;
  SparseMatrixC restrict_rows_interior(const SparseMatrixC& full) const;
  VectorXc to_interior(const VectorXc& full) const;
  VectorXc from_interior(const VectorXc& interior) const;

  VectorXc interpolate(const SmoothFn& f) const;
  // b_i = ∫ f φ_i s^p dt ds.
  VectorXc load(const SmoothFn& f, double power = kHyperbolicPower) const;
  // ∫ g(t, s) s^p dt ds over the mesh.
  Complex integrate(const std::function<Complex(double, double)>& g, double power = kHyperbolicPower) const;

  // Value and (∂_t, ∂_s) of a nodal field at a quadrature point.
  Complex value(const VectorXc& u, int e, int k) const;
  std::array<Complex, 2> gradient(const VectorXc& u, int e) const;

  // Deterministic parallelism over elements for read-only work.
  int threads() const { return threads_; }
  void set_threads(int t) { threads_ = std::max(1, t); }

 private:
  std::size_t idx(int e, int k) const {
    return static_cast<std::size_t>(e) * rule_.points.size() + static_cast<std::size_t>(k);
  }

  Mesh mesh_;
  QuadratureRule rule_;
  std::vector<int> interior_;
  std::vector<int> interior_index_;
  std::vector<double> qt_, qs_, qw_, phi_;
  std::vector<std::array<double, 6>> grad_;  // (∂_t φ_a, ∂_s φ_a) for a = 0..2
  SparseMatrixC mass_;
  Eigen::SimplicialLDLT<SparseMatrixC> mass_ldlt_;
  int threads_ = 1;
};

using SpacePtr = std::shared_ptr<const FESpace>;

SpacePtr make_space(const geo::DomainSpec& domain, double h, int quadrature_points = 6);

// Discrete complex-valued function on a mesh (nodal values of a degree-1 field).
struct CoefficientField {
  SpacePtr space;
  VectorXc values;
  int degree = 1;

  static CoefficientField zero(SpacePtr space);
  static CoefficientField interpolate(SpacePtr space, const SmoothFn& f);
  bool finite() const;
  // Max |value| over boundary nodes.
  double trace_max() const;
};

}  // namespace kohn::fem
