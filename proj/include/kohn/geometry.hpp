#pragma once

// Geometry of the upper half-plane H² = {t + is : s > 0}: points, real
// Möbius maps, precompact polygonal domains, the collar defining function,
// radial cut-offs and uniformly locally finite ball covers.

#include <array>
#include <optional>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "kohn/common.hpp"

namespace kohn::geo {

class HalfPlanePoint {
 public:
  HalfPlanePoint(double t, double s);
  static HalfPlanePoint from_complex(Complex w) { return {w.real(), w.imag()}; }

  double t() const { return t_; }
  double s() const { return s_; }
  Complex w() const { return {t_, s_}; }

 private:
  double t_;
  double s_;
};

// w ↦ (aw + b)/(cw + d) with real coefficients and ad − bc = 1.
class MobiusMap {
 public:
  MobiusMap(double a, double b, double c, double d);
  static MobiusMap identity() { return {1.0, 0.0, 0.0, 1.0}; }
  static MobiusMap translation(double b) { return {1.0, b, 0.0, 1.0}; }
  // Uniformly random-ish element: random scale/translation composed with a rotation about i.
  static MobiusMap random(std::mt19937_64& rng);

  HalfPlanePoint apply(const HalfPlanePoint& p) const;
  Complex derivative(Complex w) const;
  MobiusMap compose(const MobiusMap& inner) const;
  std::array<double, 4> coefficients() const { return {a_, b_, c_, d_}; }

 private:
  double a_, b_, c_, d_;
};

double hyperbolic_distance(const HalfPlanePoint& p, const HalfPlanePoint& q);

// Unit complex a with m_*(W)|_{m(p)} = a · W, where W = 2is ∂/∂w.
Complex mobius_pushforward_factor(const MobiusMap& m, const HalfPlanePoint& p);

// Point at hyperbolic distance r from `center` leaving in direction `angle`
// (angle 0 points along +t at the center).
HalfPlanePoint geodesic_polar_point(const HalfPlanePoint& center, double r, double angle);

// Area of a hyperbolic disc of radius r (curvature −1).
double hyperbolic_ball_area(double r);

class DomainSpec {
 public:
  // Builds a domain from a closed boundary polyline (last vertex is not
  // repeated). Fewer than 64 vertices are resampled through a periodic
  // Catmull-Rom spline. `delta` defaults to a quarter of the minimal
  // boundary curvature radius (hyperbolically scaled).
  static DomainSpec from_vertices(std::vector<HalfPlanePoint> vertices, double nu,
                                  std::optional<double> delta = std::nullopt);

  // Euclidean circle |w − center| < radius sampled at `segments` vertices.
  static DomainSpec disc(Complex center, double radius, double nu, int segments = 256,
                         std::optional<double> delta = std::nullopt);

  std::span<const HalfPlanePoint> boundary() const { return boundary_; }
  double nu() const { return nu_; }
  double delta() const { return delta_; }
  double min_curvature_radius() const { return min_curvature_radius_; }

  bool contains(const HalfPlanePoint& p) const;
  // Hyperbolic distance from p to the boundary polyline.
  double boundary_distance(const HalfPlanePoint& p) const;
  // Polygon centroid (area-weighted, Euclidean).
  Complex centroid() const;
  double min_s() const;
  double max_abs_w() const;
  std::array<double, 4> bounding_box() const;  // tmin, tmax, smin, smax

  // Boundary point hit by the ray from `origin` in direction `angle`
  // (Euclidean). Throws DomainError if the ray crosses ∂D more than once.
  Complex ray_exit(Complex origin, double angle) const;

 private:
  DomainSpec() = default;
  std::vector<HalfPlanePoint> boundary_;
  double nu_ = 0.0;
  double delta_ = 0.0;
  double min_curvature_radius_ = 0.0;
};

// ϱ: hyperbolic distance to ∂D on the 3δ collar, 1 beyond 4δ, quintic
// blend in between, negative outside D.
class DefiningFunction {
 public:
  explicit DefiningFunction(const DomainSpec& domain);

  double operator()(const HalfPlanePoint& p) const;
  // Central-difference gradient (∂_t ϱ, ∂_s ϱ).
  std::array<double, 2> gradient(const HalfPlanePoint& p) const;
  Complex apply_W(const HalfPlanePoint& p) const;
  Complex apply_Wbar(const HalfPlanePoint& p) const;

  double delta() const { return delta_; }
  // inf of min(|Wϱ|, |W̄ϱ|) over sampled collar points.
  double b1() const { return b1_; }
  // Bm[m] = sup over sampled points of max_{j+k<=m} |W^j W̄^k ϱ|, m = 0, 1, 2.
  const std::array<double, 3>& Bm() const { return bm_; }

  const DomainSpec& domain() const { return domain_; }

 private:
  DomainSpec domain_;
  double delta_;
  double b1_ = 0.0;
  std::array<double, 3> bm_{};
};

DefiningFunction build_defining_function(const DomainSpec& domain);

// ξ(p) = χ((d² − r_in²)/(r_out² − r_in²)) with d the hyperbolic distance to
// the center and χ a fixed C^∞ step from 1 to 0.
class RadialCutoff {
 public:
  RadialCutoff(HalfPlanePoint center, double r_inner, double r_outer);

  double operator()(const HalfPlanePoint& p) const;
  Complex apply_W(const HalfPlanePoint& p) const;
  Complex apply_Wbar(const HalfPlanePoint& p) const { return std::conj(apply_W(p)); }

  const HalfPlanePoint& center() const { return center_; }
  double r_inner() const { return r_inner_; }
  double r_outer() const { return r_outer_; }

 private:
  HalfPlanePoint center_;
  double r_inner_;
  double r_outer_;
};

// ξ = 1 on B(center, r_inner), supported in B(center, r_outer); ζ = 1 on
// B(center, r_outer), supported in B(center, 2 r_outer − r_inner).
std::pair<RadialCutoff, RadialCutoff> cutoff_pair(const HalfPlanePoint& center, double r_inner,
                                                  double r_outer);

// Maximal ε-separated set of centers in D (so ε/2-balls are disjoint and
// ε-balls cover the candidate set). `extra_points` are offered as additional
// candidates after the sampling grid.
std::vector<HalfPlanePoint> ball_cover(const DomainSpec& domain, double eps, double delta,
                                       std::span<const HalfPlanePoint> extra_points = {});

// Largest number of other centers whose δ-ball meets a given center's δ-ball.
int cover_multiplicity(std::span<const HalfPlanePoint> centers, double delta);

// vol(B(2δ + ε)) / vol(B(ε/2)).
double cover_multiplicity_bound(double eps, double delta);

}  // namespace kohn::geo
