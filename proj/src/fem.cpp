#include "kohn/fem.hpp"

#include <cmath>
#include <numbers>

namespace kohn::fem {

void gauss_legendre01(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(static_cast<std::size_t>(n), 0.0);
  w.assign(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = z;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0;
      dp = n * (z * p1 - p0) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    x[static_cast<std::size_t>(i)] = 0.5 * (1.0 - z);
    w[static_cast<std::size_t>(i)] = 1.0 / ((1.0 - z * z) * dp * dp);
  }
}

QuadratureRule QuadratureRule::collapsed_gauss(int n) {
  if (n < 1) throw UsageError("quadrature needs at least one point per direction");
  std::vector<double> x, w;
  gauss_legendre01(n, x, w);
  QuadratureRule rule;
  rule.order = 2 * n - 2;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double u = x[static_cast<std::size_t>(i)];
      const double v = x[static_cast<std::size_t>(j)];
      rule.points.push_back({u, v * (1.0 - u)});
      rule.weights.push_back(w[static_cast<std::size_t>(i)] * w[static_cast<std::size_t>(j)] * (1.0 - u));
    }
  return rule;
}

double QuadratureRule::self_test() const {
  double worst = 0.0;
  for (int a = 0; a <= order; ++a)
    for (int b = 0; a + b <= order; ++b) {
      double sum = 0.0;
      for (std::size_t k = 0; k < points.size(); ++k)
        sum += weights[k] * std::pow(points[k][0], a) * std::pow(points[k][1], b);
      const double exact = std::tgamma(a + 1.0) * std::tgamma(b + 1.0) / std::tgamma(a + b + 3.0);
      worst = std::max(worst, std::abs(sum - exact));
    }
  return worst;
}

FESpace::FESpace(Mesh mesh, int quadrature_points)
    : mesh_(std::move(mesh)), rule_(QuadratureRule::collapsed_gauss(quadrature_points)) {
  const int n = mesh_.num_nodes();
  interior_index_.assign(static_cast<std::size_t>(n), -1);
  for (int i = 0; i < n; ++i)
    if (!mesh_.boundary[static_cast<std::size_t>(i)]) {
      interior_index_[static_cast<std::size_t>(i)] = static_cast<int>(interior_.size());
      interior_.push_back(i);
    }
  const std::size_t nq = rule_.points.size();
  const std::size_t ne = mesh_.triangles.size();
  qt_.resize(ne * nq);
  qs_.resize(ne * nq);
  qw_.resize(ne * nq);
  phi_.resize(ne * nq * 3);
  grad_.resize(ne);
  for (std::size_t e = 0; e < ne; ++e) {
    const auto& tri = mesh_.triangles[e];
    const auto& p0 = mesh_.nodes[static_cast<std::size_t>(tri[0])];
    const auto& p1 = mesh_.nodes[static_cast<std::size_t>(tri[1])];
    const auto& p2 = mesh_.nodes[static_cast<std::size_t>(tri[2])];
    const double j00 = p1[0] - p0[0], j01 = p2[0] - p0[0];
    const double j10 = p1[1] - p0[1], j11 = p2[1] - p0[1];
    const double det = j00 * j11 - j01 * j10;
    if (!(det > 0.0)) throw DomainError("mesh element with non-positive orientation");
    // J^{-T} applied to reference gradients (−1,−1), (1,0), (0,1).
    auto phys = [&](double gx, double gy) -> std::array<double, 2> {
      return {(j11 * gx - j10 * gy) / det, (-j01 * gx + j00 * gy) / det};
    };
    const auto g0 = phys(-1.0, -1.0), g1 = phys(1.0, 0.0), g2 = phys(0.0, 1.0);
    grad_[e] = {g0[0], g0[1], g1[0], g1[1], g2[0], g2[1]};
    for (std::size_t k = 0; k < nq; ++k) {
      const double x = rule_.points[k][0], y = rule_.points[k][1];
      const std::size_t id = e * nq + k;
      qt_[id] = p0[0] + j00 * x + j01 * y;
      qs_[id] = p0[1] + j10 * x + j11 * y;
      qw_[id] = rule_.weights[k] * det;
      phi_[id * 3 + 0] = 1.0 - x - y;
      phi_[id * 3 + 1] = x;
      phi_[id * 3 + 2] = y;
    }
  }
  mass_ = assemble(Op1::identity(), Op1::identity());
  mass_ldlt_.compute(mass_);
  if (mass_ldlt_.info() != Eigen::Success) throw NumericalError("mass matrix factorization failed");
}

SparseMatrixC FESpace::assemble(const Op1& a, const Op1& b, double power) const {
  std::vector<Eigen::Triplet<Complex>> trip;
  const int nq = qp_per_element();
  trip.reserve(mesh_.triangles.size() * 9);
  for (int e = 0; e < mesh_.num_triangles(); ++e) {
    const auto& tri = mesh_.triangles[static_cast<std::size_t>(e)];
    const auto& g = grad_[static_cast<std::size_t>(e)];
    Complex local[3][3] = {};
    for (int k = 0; k < nq; ++k) {
      const double s = qp_s(e, k);
      const double w = qp_weight(e, k) * std::pow(s, power);
      Complex av[3], bv[3];
      for (int c = 0; c < 3; ++c) {
        const double phi = basis(e, k, c);
        av[c] = a.apply(phi, g[2 * c], g[2 * c + 1], s);
        bv[c] = b.apply(phi, g[2 * c], g[2 * c + 1], s);
      }
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) local[i][j] += av[j] * std::conj(bv[i]) * w;
    }
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) trip.emplace_back(tri[i], tri[j], local[i][j]);
  }
  SparseMatrixC k(num_dofs(), num_dofs());
  k.setFromTriplets(trip.begin(), trip.end());
  return k;
}

VectorXc FESpace::mass_solve(const VectorXc& b) const { return mass_ldlt_.solve(b); }

SparseMatrixC FESpace::restrict_interior(const SparseMatrixC& full) const {
  std::vector<Eigen::Triplet<Complex>> trip;
  for (int c = 0; c < full.outerSize(); ++c)
    for (SparseMatrixC::InnerIterator it(full, c); it; ++it) {
      const int r = interior_index(static_cast<int>(it.row()));
      const int cc = interior_index(static_cast<int>(it.col()));
      if (r >= 0 && cc >= 0) trip.emplace_back(r, cc, it.value());
    }
  SparseMatrixC out(num_interior(), num_interior());
  out.setFromTriplets(trip.begin(), trip.end());
  return out;
}

SparseMatrixC FESpace::restrict_rows_interior(const SparseMatrixC& full) const {
  std::vector<Eigen::Triplet<Complex>> trip;
  for (int c = 0; c < full.outerSize(); ++c)
    for (SparseMatrixC::InnerIterator it(full, c); it; ++it) {
      const int r = interior_index(static_cast<int>(it.row()));
      if (r >= 0) trip.emplace_back(r, static_cast<int>(it.col()), it.value());
    }
  SparseMatrixC out(num_interior(), full.cols());
  out.setFromTriplets(trip.begin(), trip.end());
  return out;
}

VectorXc FESpace::to_interior(const VectorXc& full) const {
  VectorXc out(num_interior());
  for (int i = 0; i < num_interior(); ++i) out(i) = full(interior_[static_cast<std::size_t>(i)]);
  return out;
}

VectorXc FESpace::from_interior(const VectorXc& interior) const {
  VectorXc out = VectorXc::Zero(num_dofs());
  for (int i = 0; i < num_interior(); ++i) out(interior_[static_cast<std::size_t>(i)]) = interior(i);
  return out;
}

VectorXc FESpace::interpolate(const SmoothFn& f) const {
  VectorXc out(num_dofs());
  for (int i = 0; i < num_dofs(); ++i) {
    const auto& p = mesh_.nodes[static_cast<std::size_t>(i)];
    out(i) = f(p[0], p[1]);
  }
  return out;
}

VectorXc FESpace::load(const SmoothFn& f, double power) const {
  VectorXc b = VectorXc::Zero(num_dofs());
  for (int e = 0; e < mesh_.num_triangles(); ++e) {
    const auto& tri = mesh_.triangles[static_cast<std::size_t>(e)];
    for (int k = 0; k < qp_per_element(); ++k) {
      const double s = qp_s(e, k);
      const Complex fv = f(qp_t(e, k), s) * (qp_weight(e, k) * std::pow(s, power));
      for (int a = 0; a < 3; ++a) b(tri[a]) += fv * basis(e, k, a);
    }
  }
  return b;
}

Complex FESpace::integrate(const std::function<Complex(double, double)>& g, double power) const {
  Complex sum{0.0, 0.0};
  for (int e = 0; e < mesh_.num_triangles(); ++e)
    for (int k = 0; k < qp_per_element(); ++k) {
      const double s = qp_s(e, k);
      sum += g(qp_t(e, k), s) * (qp_weight(e, k) * std::pow(s, power));
    }
  return sum;
}

Complex FESpace::value(const VectorXc& u, int e, int k) const {
  const auto& tri = mesh_.triangles[static_cast<std::size_t>(e)];
  return u(tri[0]) * basis(e, k, 0) + u(tri[1]) * basis(e, k, 1) + u(tri[2]) * basis(e, k, 2);
}

std::array<Complex, 2> FESpace::gradient(const VectorXc& u, int e) const {
  const auto& tri = mesh_.triangles[static_cast<std::size_t>(e)];
  const auto& g = grad_[static_cast<std::size_t>(e)];
  return {u(tri[0]) * g[0] + u(tri[1]) * g[2] + u(tri[2]) * g[4],
          u(tri[0]) * g[1] + u(tri[1]) * g[3] + u(tri[2]) * g[5]};
}

SpacePtr make_space(const geo::DomainSpec& domain, double h, int quadrature_points) {
  return std::make_shared<const FESpace>(build_mesh(domain, h), quadrature_points);
}

CoefficientField CoefficientField::zero(SpacePtr space) {
  const int n = space->num_dofs();
  return {std::move(space), VectorXc::Zero(n), 1};
}

CoefficientField CoefficientField::interpolate(SpacePtr space, const SmoothFn& f) {
  VectorXc v = space->interpolate(f);
  return {std::move(space), std::move(v), 1};
}

bool CoefficientField::finite() const { return values.allFinite(); }

double CoefficientField::trace_max() const {
  double m = 0.0;
  for (int i = 0; i < space->num_dofs(); ++i)
    if (space->mesh().boundary[static_cast<std::size_t>(i)]) m = std::max(m, std::abs(values(i)));
  return m;
}

}  // namespace kohn::fem
