#include "kohn/solver.hpp"

#include <cmath>
#include <cstring>
#include <sstream>
#include <unordered_map>

#include <Eigen/Dense>
#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>

#include "kohn/fields.hpp"

namespace kohn::solver {

namespace {

using Triplets = std::vector<Eigen::Triplet<Complex>>;

void append(Triplets& trip, const SparseMatrixC& m, int row0, int col0, Complex scale = 1.0) {
  for (int c = 0; c < m.outerSize(); ++c)
    for (SparseMatrixC::InnerIterator it(m, c); it; ++it)
      trip.emplace_back(row0 + static_cast<int>(it.row()), col0 + static_cast<int>(it.col()), scale * it.value());
}

SparseMatrixC adjoint(const SparseMatrixC& m) { return SparseMatrixC(m.adjoint()); }

double relative_residual(const SparseMatrixC& a, const VectorXc& x, const VectorXc& b) {
  const double nb = b.norm();
  return nb == 0.0 ? (a * x).norm() : (a * x - b).norm() / nb;
}

// Power iterations for a rough condition estimate in failure reports.
double condition_estimate(const SparseMatrixC& a) {
  VectorXc x = VectorXc::Ones(a.rows());
  double lmax = 0.0;
  for (int i = 0; i < 50; ++i) {
    VectorXc y = a * x;
    lmax = y.norm() / x.norm();
    x = y / y.norm();
  }
  Eigen::SimplicialLDLT<SparseMatrixC> ldlt(a);
  if (ldlt.info() != Eigen::Success) return std::numeric_limits<double>::infinity();
  x = VectorXc::Ones(a.rows());
  double lmin_inv = 0.0;
  for (int i = 0; i < 50; ++i) {
    VectorXc y = ldlt.solve(x);
    lmin_inv = y.norm() / x.norm();
    x = y / y.norm();
  }
  return lmax * lmin_inv;
}

VectorXc hermitian_solve(const SparseMatrixC& a, const VectorXc& b, const SolverOptions& options,
                         const std::optional<VectorXc>& guess, SolveReport* report) {
  VectorXc x;
  int iterations = 0;
  if (options.method == SolverOptions::Method::direct) {
    Eigen::SimplicialLDLT<SparseMatrixC> ldlt(a);
    if (ldlt.info() != Eigen::Success) throw NumericalError("sparse LDLT factorization failed");
    x = ldlt.solve(b);
    iterations = 1;
  } else {
    Eigen::ConjugateGradient<SparseMatrixC, Eigen::Lower | Eigen::Upper> cg(a);
    cg.setTolerance(options.tol);
    cg.setMaxIterations(options.max_iter);
    if (guess)
      x = cg.solveWithGuess(b, *guess);
    else
      x = cg.solve(b);
    iterations = static_cast<int>(cg.iterations());
    if (cg.info() != Eigen::Success) {
      std::ostringstream msg;
      msg << "conjugate gradient did not reach tol " << options.tol << " in " << options.max_iter
          << " iterations (error " << cg.error() << ", condition estimate " << condition_estimate(a) << ")";
      throw NumericalError(msg.str());
    }
  }
  const double res = relative_residual(a, x, b);
  if (!x.allFinite()) throw NumericalError("linear solve produced non-finite values");
  if (report) {
    report->iterations = iterations;
    report->residual = res;
  }
  return x;
}

// ϱ tabulated at nodes and quadrature points, looked up by exact coordinates.
class RhoTable {
 public:
  RhoTable(const geo::DefiningFunction& rho, const FESpace& space) {
    auto add = [&](double t, double s) { table_.emplace(key(t, s), rho(geo::HalfPlanePoint(t, s))); };
    for (const auto& p : space.mesh().nodes) add(p[0], p[1]);
    for (int e = 0; e < space.mesh().num_triangles(); ++e)
      for (int k = 0; k < space.qp_per_element(); ++k) add(space.qp_t(e, k), space.qp_s(e, k));
    rho_ = &rho;
  }
  double operator()(double t, double s) const {
    const auto it = table_.find(key(t, s));
    return it != table_.end() ? it->second : (*rho_)(geo::HalfPlanePoint(t, s));
  }

 private:
  struct Key {
    std::uint64_t a, b;
    bool operator==(const Key&) const = default;
  };
  struct Hash {
    std::size_t operator()(const Key& k) const { return std::hash<std::uint64_t>()(k.a * 31 + k.b); }
  };
  static Key key(double t, double s) {
    Key k;
    std::memcpy(&k.a, &t, sizeof(double));
    std::memcpy(&k.b, &s, sizeof(double));
    return k;
  }
  std::unordered_map<Key, double, Hash> table_;
  const geo::DefiningFunction* rho_ = nullptr;
};

}  // namespace

// --- assembled operators -------------------------------------------------------

double AssembledOperator::hermitian_residual() const {
  const SparseMatrixC diff = matrix - SparseMatrixC(matrix.adjoint());
  double worst = 0.0, scale = 0.0;
  for (int c = 0; c < diff.outerSize(); ++c)
    for (SparseMatrixC::InnerIterator it(diff, c); it; ++it) worst = std::max(worst, std::abs(it.value()));
  for (int c = 0; c < matrix.outerSize(); ++c)
    for (SparseMatrixC::InnerIterator it(matrix, c); it; ++it) scale = std::max(scale, std::abs(it.value()));
  return scale == 0.0 ? 0.0 : worst / scale;
}

double AssembledOperator::smallest_eigenvalue(int iterations) const {
  const bool interior = which == Problem::transverse;
  const SparseMatrixC a = interior ? space->restrict_interior(matrix) : matrix;
  const SparseMatrixC m = interior ? space->restrict_interior(space->mass()) : space->mass();
  Eigen::SimplicialLDLT<SparseMatrixC> ldlt(a);
  if (ldlt.info() != Eigen::Success) return 0.0;
  VectorXc x = VectorXc::Ones(a.rows());
  double mu = 0.0;
  for (int i = 0; i < iterations; ++i) {
    VectorXc y = ldlt.solve(m * x);
    y /= std::sqrt(std::abs(y.dot(m * y)));
    const double next = y.dot(a * y).real();
    x = y;
    if (i > 0 && std::abs(next - mu) <= 1e-12 * std::abs(next)) {
      mu = next;
      break;
    }
    mu = next;
  }
  return mu;
}

AssembledOperator assemble_transverse(const SigmaLabel& sigma, const SpacePtr& space) {
  AssembledOperator op;
  op.which = Problem::transverse;
  op.sigma = sigma;
  op.space = space;
  const auto wa = ops::w_alpha_op(sigma.alpha);
  op.matrix = SparseMatrixC(sigma.gamma * space->mass() + space->assemble(wa, wa));
  op.constrained = space->interior();
  return op;
}

AssembledOperator assemble_tangential(const SigmaLabel& sigma, const SpacePtr& space) {
  AssembledOperator op;
  op.which = Problem::tangential;
  op.sigma = sigma;
  op.space = space;
  const auto wb = ops::wbar_sigma_op(sigma);
  op.matrix = SparseMatrixC(sigma.gamma * space->mass() + space->assemble(wb, wb));
  op.constrained.resize(static_cast<std::size_t>(space->num_dofs()));
  for (int i = 0; i < space->num_dofs(); ++i) op.constrained[static_cast<std::size_t>(i)] = i;
  return op;
}

CoefficientField solve_transverse_load(const SigmaLabel& sigma, const SpacePtr& space, const VectorXc& load,
                                       const SolverOptions& options, SolveReport* report) {
  const auto op = assemble_transverse(sigma, space);
  const SparseMatrixC a = space->restrict_interior(op.matrix);
  const VectorXc b = space->to_interior(load);
  std::optional<VectorXc> guess;
  if (options.initial_guess) guess = space->to_interior(*options.initial_guess);
  const VectorXc x = hermitian_solve(a, b, options, guess, report);
  return {space, space->from_interior(x), 1};
}

CoefficientField solve_transverse(const SigmaLabel& sigma, const CoefficientField& f, const SolverOptions& options,
                                  SolveReport* report) {
  return solve_transverse_load(sigma, f.space, f.space->mass() * f.values, options, report);
}

// --- compatible operator ------------------------------------------------------

CompatibleOperator::CompatibleOperator(SpacePtr space, double beta) : space_(std::move(space)), beta_(beta) {
  const fem::Op1 wb = fem::Op1::Wbar().shifted(-beta_);
  e0_ = space_->restrict_rows_interior(space_->assemble(wb, fem::Op1::identity()));
  m0_ = space_->restrict_interior(space_->mass());
  m0_ldlt_.compute(m0_);
  if (m0_ldlt_.info() != Eigen::Success) throw NumericalError("interior mass factorization failed");
}

const CompatibleOperator::LU& CompatibleOperator::factor(bool tangential, double c) const {
  std::lock_guard lock(mutex_);
  auto& slot = cache_[{tangential, c}];
  if (slot) return *slot;
  const int n = space_->num_dofs();
  const int n0 = space_->num_interior();
  Triplets trip;
  const SparseMatrixC e0h = adjoint(e0_);
  if (tangential) {
    append(trip, space_->mass(), 0, 0, c);
    append(trip, e0h, 0, n);
    append(trip, e0_, n, 0);
    append(trip, m0_, n, n, -1.0);
  } else {
    append(trip, space_->mass(), 0, 0, -1.0);
    append(trip, e0h, 0, n);
    append(trip, e0_, n, 0);
    if (c != 0.0) append(trip, m0_, n, n, c);
  }
  SparseMatrixC k(n + n0, n + n0);
  k.setFromTriplets(trip.begin(), trip.end());
  k.makeCompressed();
  auto lu = std::make_unique<LU>();
  lu->analyzePattern(k);
  lu->factorize(k);
  if (lu->info() != Eigen::Success) throw NumericalError("saddle-point factorization failed: " + lu->lastErrorMessage());
  slot = std::move(lu);
  return *slot;
}

VectorXc CompatibleOperator::apply_A(const VectorXc& u) const {
  return space_->from_interior(m0_ldlt_.solve(e0_ * u));
}

VectorXc CompatibleOperator::interior_mass_solve(const VectorXc& r0) const {
  return space_->from_interior(m0_ldlt_.solve(r0));
}

VectorXc CompatibleOperator::apply_Adag(const VectorXc& g) const {
  return space_->mass_solve(adjoint(e0_) * space_->to_interior(g));
}

VectorXc CompatibleOperator::solve_tangential(double c, const VectorXc& f) const {
  if (!(c > 0.0)) throw UsageError("tangential compatible solve needs c > 0");
  const int n = space_->num_dofs();
  VectorXc rhs = VectorXc::Zero(n + space_->num_interior());
  rhs.head(n) = space_->mass() * f;
  const VectorXc x = factor(true, c).solve(rhs);
  return x.head(n);
}

VectorXc CompatibleOperator::solve_transverse(double c, const VectorXc& f) const {
  if (c < 0.0) throw UsageError("transverse compatible solve needs c >= 0");
  const int n = space_->num_dofs();
  VectorXc rhs = VectorXc::Zero(n + space_->num_interior());
  rhs.tail(space_->num_interior()) = space_->to_interior(space_->mass() * f);
  const VectorXc x = factor(false, c).solve(rhs);
  return space_->from_interior(x.tail(space_->num_interior()));
}

VectorXc CompatibleOperator::kernel_projection(const VectorXc& f) const {
  return f - apply_Adag(solve_transverse(0.0, apply_A(f)));
}

VectorXc CompatibleOperator::tangential_pseudo_solve(const VectorXc& f, VectorXc* kernel_part) const {
  const VectorXc h = solve_transverse(0.0, apply_A(f));
  if (kernel_part) *kernel_part = f - apply_Adag(h);
  return apply_Adag(solve_transverse(0.0, h));
}

// --- kernel basis ---------------------------------------------------------------

fem::SmoothFn KernelBasis::member(int j) const {
  const double beta = (sigma.lambda + sigma.nu) / 2.0;
  const Eigen::VectorXcd row = coefficients.row(j).transpose();
  const Complex c = center;
  return [beta, row, c](double t, double s) -> Complex {
    const Complex z = Complex(t, s) - c;
    Complex acc{0.0, 0.0};
    for (int m = static_cast<int>(row.size()) - 1; m >= 0; --m) acc = acc * z + row(m);
    return std::pow(s, beta) * acc;
  };
}

MatrixXc KernelBasis::gram(const FESpace& space) const {
  const int m = size();
  std::vector<fem::SmoothFn> fns;
  for (int j = 0; j < m; ++j) fns.push_back(member(j));
  MatrixXc g = MatrixXc::Zero(m, m);
  for (int e = 0; e < space.mesh().num_triangles(); ++e)
    for (int k = 0; k < space.qp_per_element(); ++k) {
      const double t = space.qp_t(e, k), s = space.qp_s(e, k);
      const double w = space.qp_weight(e, k) / (s * s);
      Eigen::VectorXcd v(m);
      for (int j = 0; j < m; ++j) v(j) = fns[static_cast<std::size_t>(j)](t, s);
      g += w * v.conjugate() * v.transpose();
    }
  return g;
}

KernelBasis kernel_basis(const SigmaLabel& sigma, const geo::DomainSpec& domain, const SpacePtr& space,
                         int degree_cap) {
  if (degree_cap < 0) throw UsageError("degree_cap must be >= 0");
  KernelBasis basis;
  basis.sigma = sigma;
  basis.degree_cap = degree_cap;
  basis.center = domain.centroid();
  if (sigma.gamma > spectrum::kZeroGamma) {
    basis.coefficients = MatrixXc(0, degree_cap + 1);
    return basis;
  }
  const double beta = (sigma.lambda + sigma.nu) / 2.0;
  const int m = degree_cap + 1;
  double reach = 0.0;
  for (const auto& p : domain.boundary()) reach = std::max(reach, std::abs(p.w() - basis.center));

  // Scaled monomials ((w − c)/reach)^j s^β tabulated at quadrature points.
  const int nq = space->mesh().num_triangles() * space->qp_per_element();
  MatrixXc values(nq, m);
  Eigen::VectorXd weights(nq);
  int row = 0;
  for (int e = 0; e < space->mesh().num_triangles(); ++e)
    for (int k = 0; k < space->qp_per_element(); ++k, ++row) {
      const double t = space->qp_t(e, k), s = space->qp_s(e, k);
      weights(row) = space->qp_weight(e, k) / (s * s);
      const Complex z = (Complex(t, s) - basis.center) / reach;
      Complex p = std::pow(s, beta);
      for (int j = 0; j < m; ++j, p *= z) values(row, j) = p;
    }
  auto ip = [&](const Eigen::VectorXcd& a, const Eigen::VectorXcd& b) {
    return (weights.cast<Complex>().array() * a.array() * b.conjugate().array()).sum();
  };
  MatrixXc q(nq, m);
  MatrixXc coeff = MatrixXc::Zero(m, m);  // rows: members, columns: scaled monomials
  for (int j = 0; j < m; ++j) {
    Eigen::VectorXcd v = values.col(j);
    Eigen::VectorXcd c = Eigen::VectorXcd::Zero(m);
    c(j) = 1.0;
    for (int pass = 0; pass < 2; ++pass)
      for (int i = 0; i < j; ++i) {
        const Complex r = ip(v, q.col(i));
        v -= r * q.col(i);
        c -= r * coeff.row(i).transpose();
      }
    const double nv = std::sqrt(std::abs(ip(v, v)));
    if (nv == 0.0) throw NumericalError("kernel monomials are linearly dependent");
    q.col(j) = v / nv;
    coeff.row(j) = (c / nv).transpose();
  }
  for (int j = 0; j < m; ++j) coeff.col(j) /= std::pow(reach, j);
  basis.coefficients = coeff;
  for (int j = 0; j < m; ++j) basis.fields.push_back(CoefficientField::interpolate(space, basis.member(j)));
  return basis;
}

// --- tangential solves ------------------------------------------------------------

TangentialSolution solve_tangential_load(const SigmaLabel& sigma, const SpacePtr& space, const VectorXc& load,
                                         const SolverOptions& options, SolveReport* report) {
  if (sigma.gamma <= spectrum::kZeroGamma) throw UsageError("load-form tangential solve needs Gamma > 0");
  const auto op = assemble_tangential(sigma, space);
  const VectorXc x = hermitian_solve(op.matrix, load, options, options.initial_guess, report);
  return {{space, x, 1}, CoefficientField::zero(space)};
}

TangentialSolution solve_tangential(const SigmaLabel& sigma, const CoefficientField& f, int degree_cap,
                                    const geo::DomainSpec& domain, KernelMode mode, const SolverOptions& options,
                                    SolveReport* report) {
  const SpacePtr& space = f.space;
  if (sigma.gamma > spectrum::kZeroGamma) return solve_tangential_load(sigma, space, space->mass() * f.values, options, report);

  if (mode == KernelMode::discrete) {
    const CompatibleOperator a(space, (sigma.lambda + sigma.nu) / 2.0);
    VectorXc kernel;
    VectorXc u = a.tangential_pseudo_solve(f.values, &kernel);
    if (report) {
      const VectorXc fr = f.values - kernel;
      const VectorXc back = a.apply_Adag(a.apply_A(u));
      report->iterations = 1;
      report->residual = fr.norm() == 0.0 ? back.norm() : (back - fr).norm() / fr.norm();
    }
    return {{space, std::move(u), 1}, {space, std::move(kernel), 1}};
  }

  // Capped kernel: deflate the span Z of the analytic basis interpolants.
  const KernelBasis basis = kernel_basis(sigma, domain, space, degree_cap);
  const int m = basis.size();
  const int n = space->num_dofs();
  MatrixXc z(n, m);
  for (int j = 0; j < m; ++j) z.col(j) = basis.fields[static_cast<std::size_t>(j)].values;
  const MatrixXc mz = space->mass() * z;
  const MatrixXc gram = z.adjoint() * mz;
  const Eigen::LDLT<MatrixXc> gram_ldlt(gram);
  const VectorXc fk = z * gram_ldlt.solve(mz.adjoint() * f.values);
  const VectorXc fr = f.values - fk;
  const auto op = assemble_tangential(sigma, space);
  Eigen::SimplicialLDLT<SparseMatrixC> ldlt(op.matrix);
  if (ldlt.info() != Eigen::Success) throw NumericalError("tangential factorization failed");
  const VectorXc u0 = ldlt.solve(space->mass() * fr);
  const MatrixXc kmz = ldlt.solve(mz);
  const MatrixXc schur = mz.adjoint() * kmz;
  const VectorXc mu = schur.fullPivLu().solve(mz.adjoint() * u0);
  VectorXc u = u0 - kmz * mu;
  if (report) {
    report->iterations = 1;
    const VectorXc r = op.matrix * u + mz * mu - space->mass() * fr;
    const double nb = (space->mass() * fr).norm();
    report->residual = nb == 0.0 ? r.norm() : r.norm() / nb;
  }
  return {{space, std::move(u), 1}, {space, fk, 1}};
}

CoefficientField solve_tangential_plus_one(const SigmaLabel& sigma, const CoefficientField& f) {
  SigmaLabel shifted = sigma;
  shifted.gamma = sigma.gamma + 1.0;
  return solve_tangential_load(shifted, f.space, f.space->mass() * f.values).u;
}

double tangential_eigen_residual(const SigmaLabel& sigma, const fem::SmoothFn& f, double c, double mu,
                                 const FESpace& space) {
  return tangential_eigen_residual(sigma, f, ops::apply_Wbar_sigma(sigma, f), c, mu, space);
}

double tangential_eigen_residual(const SigmaLabel& sigma, const fem::SmoothFn& f, const fem::SmoothFn& wf,
                                 double c, double mu, const FESpace& space) {
  const fem::Op1 wb = ops::wbar_sigma_op(sigma);
  VectorXc r = VectorXc::Zero(space.num_dofs());
  double fnorm2 = 0.0;
  for (int e = 0; e < space.mesh().num_triangles(); ++e) {
    const auto& tri = space.mesh().triangles[static_cast<std::size_t>(e)];
    const auto& g = space.gradients(e);
    for (int k = 0; k < space.qp_per_element(); ++k) {
      const double t = space.qp_t(e, k), s = space.qp_s(e, k);
      const double w = space.qp_weight(e, k) / (s * s);
      const Complex fv = f(t, s);
      const Complex wfv = wf(t, s);
      fnorm2 += std::norm(fv) * w;
      for (int a = 0; a < 3; ++a) {
        const double phi = space.basis(e, k, a);
        const Complex wphi = wb.apply(phi, g[2 * a], g[2 * a + 1], s);
        r(tri[a]) += ((c + sigma.gamma - mu) * fv * phi + wfv * std::conj(wphi)) * w;
      }
    }
  }
  const double dual = std::sqrt(std::abs(r.dot(space.mass_solve(r))));
  return fnorm2 == 0.0 ? dual : dual / std::sqrt(fnorm2);
}

double shift_constant(double delta) {
  if (delta == 0.0) return 1.0;
  const double c2 = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 / (delta * delta)));
  const double m = std::min(1.0 - 1.0 / c2, 1.0 + delta * delta * (1.0 - c2));
  return 1.0 / m;
}

EstimateKind estimate_kind_from_string(const std::string& name) {
  if (name == "basic") return EstimateKind::basic;
  if (name == "shift") return EstimateKind::shift;
  if (name == "exact") return EstimateKind::exact;
  if (name == "weighted") return EstimateKind::weighted;
  if (name == "transverse" || name == "transverse-iso") return EstimateKind::transverse;
  throw ConfigError("unknown estimate kind '" + name + "'");
}

std::string to_string(EstimateKind kind) {
  switch (kind) {
    case EstimateKind::basic: return "basic";
    case EstimateKind::shift: return "shift";
    case EstimateKind::exact: return "exact";
    case EstimateKind::weighted: return "weighted";
    case EstimateKind::transverse: return "transverse-iso";
  }
  return "?";
}

ConstantsTable measure_estimate_constants(EstimateKind kind, const std::vector<SigmaLabel>& sample,
                                          const SpacePtr& space, const geo::DomainSpec& domain,
                                          const EstimateOptions& options) {
  ConstantsTable table;
  table.kind = kind;
  table.h = space->mesh().h;
  table.rows.resize(sample.size());

  std::map<double, CompatiblePtr> compatible;
  std::optional<geo::DefiningFunction> rho;
  std::unique_ptr<RhoTable> rho_table;
  if (kind == EstimateKind::exact || kind == EstimateKind::weighted) {
    for (const auto& s : sample)
      if (s.gamma <= spectrum::kZeroGamma) {
        const double beta = (s.lambda + s.nu) / 2.0;
        if (!compatible.count(beta)) compatible[beta] = std::make_shared<const CompatibleOperator>(space, beta);
      }
  }
  if (kind == EstimateKind::weighted) {
    rho.emplace(domain);
    rho_table = std::make_unique<RhoTable>(*rho, *space);
  }

  // One set of test fields shared by every σ, so the sample maximum tracks
  // the σ-dependence rather than the number of random draws.
  const bool zero_trace = kind == EstimateKind::basic || kind == EstimateKind::shift;
  std::vector<CoefficientField> tests;
  for (int f = 0; f < options.test_fields; ++f)
    tests.push_back(fields::random_field(space, domain, fields::mix_seed(options.seed, static_cast<std::uint64_t>(f)),
                                         zero_trace));

  parallel_for(sample.size(), options.threads, [&](std::size_t i) {
    const SigmaLabel& sigma = sample[i];
    double worst = 0.0;
    for (const CoefficientField& test : tests) {
      double ratio = 0.0;
      switch (kind) {
        case EstimateKind::basic: {
          const auto& u = test;
          const double lhs = std::pow(ops::sigma_norm(1, sigma, u), 2);
          const double rhs = ops::form_Q(sigma.alpha, u, u).real() + sigma.gamma * std::pow(ops::norm(u), 2);
          ratio = lhs / rhs;
          break;
        }
        case EstimateKind::shift: {
          const auto& u = test;
          const double n2 = std::pow(ops::norm(u), 2);
          ratio = (n2 + ops::form_Q(sigma.alpha, u, u).real()) /
                  (n2 + ops::form_Q(sigma.alpha + options.shift_delta, u, u).real());
          break;
        }
        case EstimateKind::transverse: {
          const auto& rhs = test;
          const auto u = solve_transverse(sigma, rhs);
          ratio = ops::sigma_norm(1, sigma, u) / ops::norm(rhs);
          break;
        }
        case EstimateKind::exact:
        case EstimateKind::weighted: {
          const auto& rhs = test;
          CoefficientField u = CoefficientField::zero(space);
          CoefficientField fr = rhs;
          if (sigma.gamma > spectrum::kZeroGamma) {
            u = solve_tangential_load(sigma, space, space->mass() * rhs.values).u;
          } else {
            const auto& a = compatible.at((sigma.lambda + sigma.nu) / 2.0);
            VectorXc kernel;
            u.values = a->tangential_pseudo_solve(rhs.values, &kernel);
            fr.values = rhs.values - kernel;
          }
          const double denom = ops::norm(fr);
          if (kind == EstimateKind::exact) {
            ratio = sigma.g * sigma.g * ops::norm(u) / denom;
          } else {
            const RhoTable& table_ref = *rho_table;
            ratio = ops::rho_weighted_norm(2, 0, sigma, [&table_ref](double t, double s) { return table_ref(t, s); }, u) /
                    denom;
          }
          break;
        }
      }
      worst = std::max(worst, ratio);
    }
    table.rows[i] = {sigma.id(), sigma.gamma, sigma.lambda, worst};
  });
  for (const auto& r : table.rows) table.max_ratio = std::max(table.max_ratio, r.ratio);
  return table;
}

}  // namespace kohn::solver
