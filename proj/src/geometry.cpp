#include "kohn/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace kohn::geo {

namespace {

constexpr double kPi = std::numbers::pi;

// Minimum over τ ∈ [0,1] of |p − (A + τD)|² / Im(A + τD) for the segment A→B.
double segment_distance_ratio(Complex p, Complex a, Complex b) {
  const Complex dvec = b - a;
  const Complex e = a - p;
  const double qa = std::norm(dvec);
  const double qb = 2.0 * (e * std::conj(dvec)).real();
  const double qc = std::norm(e);
  const double sa = a.imag();
  const double ds = dvec.imag();
  auto ratio = [&](double tau) { return (qa * tau * tau + qb * tau + qc) / (sa + ds * tau); };

  double best = std::min(ratio(0.0), ratio(1.0));
  // Stationary points: qa·ds τ² + 2 qa·sa τ + (qb·sa − ds·qc) = 0.
  const double c2 = qa * ds;
  const double c1 = 2.0 * qa * sa;
  const double c0 = qb * sa - ds * qc;
  auto consider = [&](double tau) {
    if (tau > 0.0 && tau < 1.0) best = std::min(best, ratio(tau));
  };
  if (std::abs(c2) < 1e-14 * std::abs(c1)) {
    if (c1 != 0.0) consider(-c0 / c1);
  } else {
    const double disc = c1 * c1 - 4.0 * c2 * c0;
    if (disc >= 0.0) {
      const double r = std::sqrt(disc);
      consider((-c1 + r) / (2.0 * c2));
      consider((-c1 - r) / (2.0 * c2));
    }
  }
  return std::max(best, 0.0);
}

bool segments_cross(Complex p1, Complex p2, Complex q1, Complex q2) {
  auto orient = [](Complex a, Complex b, Complex c) {
    return (b.real() - a.real()) * (c.imag() - a.imag()) - (b.imag() - a.imag()) * (c.real() - a.real());
  };
  const double o1 = orient(p1, p2, q1);
  const double o2 = orient(p1, p2, q2);
  const double o3 = orient(q1, q2, p1);
  const double o4 = orient(q1, q2, p2);
  return (o1 * o2 < 0.0) && (o3 * o4 < 0.0);
}

std::vector<HalfPlanePoint> catmull_rom_resample(const std::vector<HalfPlanePoint>& v, int target) {
  const int n = static_cast<int>(v.size());
  const int per_segment = (target + n - 1) / n;
  std::vector<HalfPlanePoint> out;
  out.reserve(static_cast<std::size_t>(n * per_segment));
  for (int i = 0; i < n; ++i) {
    const Complex p0 = v[static_cast<std::size_t>((i - 1 + n) % n)].w();
    const Complex p1 = v[static_cast<std::size_t>(i)].w();
    const Complex p2 = v[static_cast<std::size_t>((i + 1) % n)].w();
    const Complex p3 = v[static_cast<std::size_t>((i + 2) % n)].w();
    for (int k = 0; k < per_segment; ++k) {
      const double u = static_cast<double>(k) / per_segment;
      const double u2 = u * u;
      const double u3 = u2 * u;
      const Complex w = 0.5 * ((2.0 * p1) + (-p0 + p2) * u + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * u2 +
                               (-p0 + 3.0 * p1 - 3.0 * p2 + p3) * u3);
      out.push_back(HalfPlanePoint::from_complex(w));
    }
  }
  return out;
}

double quintic_step(double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  return x * x * x * (10.0 + x * (-15.0 + 6.0 * x));
}

double smooth_g(double y) { return y <= 0.0 ? 0.0 : std::exp(-1.0 / y); }

double smooth_step_down(double x) {
  if (x <= 0.0) return 1.0;
  if (x >= 1.0) return 0.0;
  const double a = smooth_g(1.0 - x);
  const double b = smooth_g(x);
  return a / (a + b);
}

double smooth_step_down_derivative(double x) {
  if (x <= 0.0 || x >= 1.0) return 0.0;
  const double a = smooth_g(1.0 - x);
  const double b = smooth_g(x);
  const double da = -a / ((1.0 - x) * (1.0 - x));
  const double db = b / (x * x);
  return (da * b - a * db) / ((a + b) * (a + b));
}

}  // namespace

HalfPlanePoint::HalfPlanePoint(double t, double s) : t_(t), s_(s) {
  if (!(s > 0.0) || !std::isfinite(t) || !std::isfinite(s)) {
    std::ostringstream msg;
    msg << "HalfPlanePoint requires s > 0 (got t=" << t << ", s=" << s << ")";
    throw UsageError(msg.str());
  }
}

MobiusMap::MobiusMap(double a, double b, double c, double d) : a_(a), b_(b), c_(c), d_(d) {
  if (std::abs(a * d - b * c - 1.0) > 1e-12) throw UsageError("MobiusMap requires ad - bc = 1");
}

MobiusMap MobiusMap::random(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> scale(-1.0, 1.0);
  std::uniform_real_distribution<double> shift(-2.0, 2.0);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * kPi);
  const double x = scale(rng);
  const MobiusMap dilation(std::exp(x / 2.0), 0.0, 0.0, std::exp(-x / 2.0));
  const double th = angle(rng);
  const double c = std::cos(th), s = std::sin(th);
  const MobiusMap rotation(c, s, -s, c);
  return translation(shift(rng)).compose(dilation).compose(rotation);
}

HalfPlanePoint MobiusMap::apply(const HalfPlanePoint& p) const {
  const Complex w = p.w();
  return HalfPlanePoint::from_complex((a_ * w + b_) / (c_ * w + d_));
}

Complex MobiusMap::derivative(Complex w) const {
  const Complex den = c_ * w + d_;
  return 1.0 / (den * den);
}

MobiusMap MobiusMap::compose(const MobiusMap& inner) const {
  return {a_ * inner.a_ + b_ * inner.c_, a_ * inner.b_ + b_ * inner.d_, c_ * inner.a_ + d_ * inner.c_,
          c_ * inner.b_ + d_ * inner.d_};
}

double hyperbolic_distance(const HalfPlanePoint& p, const HalfPlanePoint& q) {
  // cosh d = 1 + |p − q|²/(2 s_p s_q), written via sinh(d/2) for accuracy at small d.
  return 2.0 * std::asinh(std::abs(p.w() - q.w()) / (2.0 * std::sqrt(p.s() * q.s())));
}

Complex mobius_pushforward_factor(const MobiusMap& m, const HalfPlanePoint& p) {
  const auto [a, b, c, d] = m.coefficients();
  (void)a;
  (void)b;
  const Complex den = c * p.w() + d;
  return std::conj(den) / den;
}

HalfPlanePoint geodesic_polar_point(const HalfPlanePoint& center, double r, double angle) {
  const Complex z = std::tanh(r / 2.0) * std::polar(1.0, angle - kPi / 2.0);
  const Complex w = I * (1.0 + z) / (1.0 - z);
  return HalfPlanePoint::from_complex(center.s() * w + center.t());
}

double hyperbolic_ball_area(double r) {
  const double sh = std::sinh(r / 2.0);
  return 4.0 * kPi * sh * sh;
}

// --- DomainSpec -------------------------------------------------------------

DomainSpec DomainSpec::from_vertices(std::vector<HalfPlanePoint> vertices, double nu,
                                     std::optional<double> delta) {
  if (vertices.size() < 3) throw DomainError("domain boundary needs at least 3 vertices");
  if (nu < 0.0) throw DomainError("weight exponent nu must be >= 0");
  if (vertices.size() < 64) vertices = catmull_rom_resample(vertices, 64);

  // Counter-clockwise orientation.
  double area2 = 0.0;
  const std::size_t n = vertices.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Complex a = vertices[i].w();
    const Complex b = vertices[(i + 1) % n].w();
    area2 += a.real() * b.imag() - b.real() * a.imag();
  }
  if (std::abs(area2) < 1e-14) throw DomainError("domain boundary encloses no area");
  if (area2 < 0.0) std::reverse(vertices.begin(), vertices.end());

  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 2; j < n; ++j) {
      if (i == 0 && j == n - 1) continue;
      if (segments_cross(vertices[i].w(), vertices[(i + 1) % n].w(), vertices[j].w(),
                         vertices[(j + 1) % n].w())) {
        std::ostringstream msg;
        msg << "domain boundary self-intersects (segments " << i << " and " << j << ")";
        throw DomainError(msg.str());
      }
    }
  }

  DomainSpec out;
  out.boundary_ = std::move(vertices);
  out.nu_ = nu;

  // Discrete curvature radius at each vertex from the circumcircle of its
  // neighbours, scaled by 1/s to hyperbolic units.
  double min_radius = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const Complex a = out.boundary_[(i + n - 1) % n].w();
    const Complex b = out.boundary_[i].w();
    const Complex c = out.boundary_[(i + 1) % n].w();
    const double la = std::abs(b - c), lb = std::abs(a - c), lc = std::abs(a - b);
    const double cross = std::abs((b - a).real() * (c - a).imag() - (b - a).imag() * (c - a).real());
    if (cross < 1e-15) continue;
    const double radius = la * lb * lc / (2.0 * cross);
    min_radius = std::min(min_radius, radius / b.imag());
  }
  if (!std::isfinite(min_radius)) {
    // Polygon with straight runs only; fall back to the hyperbolic inradius scale.
    min_radius = out.max_abs_w();
  }
  out.min_curvature_radius_ = min_radius;
  const double max_delta = 0.25 * min_radius;
  if (delta) {
    if (!(*delta > 0.0)) throw DomainError("collar constant delta must be positive");
    if (*delta > max_delta * (1.0 + 1e-9)) {
      std::ostringstream msg;
      msg << "delta = " << *delta << " exceeds the injectivity collar of the boundary; use delta <= "
          << max_delta;
      throw DomainError(msg.str());
    }
    out.delta_ = *delta;
  } else {
    out.delta_ = max_delta;
  }
  return out;
}

DomainSpec DomainSpec::disc(Complex center, double radius, double nu, int segments,
                            std::optional<double> delta) {
  if (center.imag() - radius <= 0.0) throw DomainError("disc must lie in the open upper half-plane");
  std::vector<HalfPlanePoint> v;
  v.reserve(static_cast<std::size_t>(segments));
  for (int k = 0; k < segments; ++k) {
    const double th = 2.0 * kPi * k / segments;
    v.push_back(HalfPlanePoint::from_complex(center + std::polar(radius, th)));
  }
  return from_vertices(std::move(v), nu, delta);
}

bool DomainSpec::contains(const HalfPlanePoint& p) const {
  bool inside = false;
  const std::size_t n = boundary_.size();
  const double x = p.t(), y = p.s();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const double xi = boundary_[i].t(), yi = boundary_[i].s();
    const double xj = boundary_[j].t(), yj = boundary_[j].s();
    if (((yi > y) != (yj > y)) && (x < (xj - xi) * (y - yi) / (yj - yi) + xi)) inside = !inside;
  }
  return inside;
}

double DomainSpec::boundary_distance(const HalfPlanePoint& p) const {
  double best = std::numeric_limits<double>::infinity();
  const std::size_t n = boundary_.size();
  const Complex w = p.w();
  for (std::size_t i = 0; i < n; ++i)
    best = std::min(best, segment_distance_ratio(w, boundary_[i].w(), boundary_[(i + 1) % n].w()));
  // cosh d − 1 = F/(2 s_p) = 2 sinh²(d/2).
  return 2.0 * std::asinh(std::sqrt(best / (4.0 * p.s())));
}

Complex DomainSpec::centroid() const {
  double a = 0.0;
  Complex c{0.0, 0.0};
  const std::size_t n = boundary_.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Complex p = boundary_[i].w();
    const Complex q = boundary_[(i + 1) % n].w();
    const double cross = p.real() * q.imag() - q.real() * p.imag();
    a += cross;
    c += (p + q) * cross;
  }
  return c / (3.0 * a);
}

double DomainSpec::min_s() const {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& p : boundary_) m = std::min(m, p.s());
  return m;
}

double DomainSpec::max_abs_w() const {
  double m = 0.0;
  for (const auto& p : boundary_) m = std::max(m, std::abs(p.w()));
  return m;
}

std::array<double, 4> DomainSpec::bounding_box() const {
  std::array<double, 4> bb{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
                           std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (const auto& p : boundary_) {
    bb[0] = std::min(bb[0], p.t());
    bb[1] = std::max(bb[1], p.t());
    bb[2] = std::min(bb[2], p.s());
    bb[3] = std::max(bb[3], p.s());
  }
  return bb;
}

Complex DomainSpec::ray_exit(Complex origin, double angle) const {
  const Complex dir = std::polar(1.0, angle);
  const std::size_t n = boundary_.size();
  int hits = 0;
  double best_r = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Complex a = boundary_[i].w();
    const Complex b = boundary_[(i + 1) % n].w();
    // origin + r·dir = a + τ(b − a)
    const Complex e = b - a;
    const double det = dir.real() * (-e.imag()) - dir.imag() * (-e.real());
    if (std::abs(det) < 1e-15) continue;
    const Complex rhs = a - origin;
    const double r = (rhs.real() * (-e.imag()) - rhs.imag() * (-e.real())) / det;
    const double tau = (dir.real() * rhs.imag() - dir.imag() * rhs.real()) / det;
    if (r > 0.0 && tau >= 0.0 && tau < 1.0) {
      ++hits;
      best_r = r;
    }
  }
  if (hits != 1) throw DomainError("domain is not star-shaped about its centroid; cannot mesh");
  return origin + best_r * dir;
}

// --- DefiningFunction -------------------------------------------------------

DefiningFunction::DefiningFunction(const DomainSpec& domain) : domain_(domain), delta_(domain.delta()) {
  // Sample the collar along inward normals and the interior on a grid to
  // record the R4/R5 constants.
  const auto bnd = domain_.boundary();
  const std::size_t n = bnd.size();
  b1_ = std::numeric_limits<double>::infinity();
  bm_.fill(0.0);
  const Complex c = domain_.centroid();
  const std::size_t stride = std::max<std::size_t>(1, n / 64);
  for (std::size_t i = 0; i < n; i += stride) {
    const Complex b = bnd[i].w();
    const Complex inward = (c - b) / std::abs(c - b);
    for (double frac : {0.25, 0.5, 1.0, 2.0, 2.75}) {
      // Step so that the hyperbolic depth is about frac·δ.
      const Complex w = b + inward * (frac * delta_ * b.imag());
      const HalfPlanePoint p = HalfPlanePoint::from_complex(w);
      if (!domain_.contains(p)) continue;
      if (domain_.boundary_distance(p) >= 3.0 * delta_) continue;
      const Complex wr = apply_W(p);
      b1_ = std::min(b1_, std::abs(wr));
    }
  }
  const auto bb = domain_.bounding_box();
  const int grid = 24;
  for (int i = 0; i <= grid; ++i) {
    for (int j = 0; j <= grid; ++j) {
      const double t = bb[0] + (bb[1] - bb[0]) * i / grid;
      const double sv = bb[2] + (bb[3] - bb[2]) * j / grid;
      const HalfPlanePoint p(t, std::max(sv, 1e-9));
      if (!domain_.contains(p)) continue;
      bm_[0] = std::max(bm_[0], std::abs((*this)(p)));
      const Complex wr = apply_W(p);
      bm_[1] = std::max({bm_[1], bm_[0], std::abs(wr)});
      // Second derivatives by nested central differences.
      const double h = 1e-4 * p.s();
      auto w_at = [&](double dt, double ds) { return apply_W(HalfPlanePoint(p.t() + dt, p.s() + ds)); };
      auto wb_at = [&](double dt, double ds) { return apply_Wbar(HalfPlanePoint(p.t() + dt, p.s() + ds)); };
      const Complex dwt = (w_at(h, 0) - w_at(-h, 0)) / (2 * h);
      const Complex dws = (w_at(0, h) - w_at(0, -h)) / (2 * h);
      const Complex dwbt = (wb_at(h, 0) - wb_at(-h, 0)) / (2 * h);
      const Complex dwbs = (wb_at(0, h) - wb_at(0, -h)) / (2 * h);
      const double s = p.s();
      const Complex ww = I * s * dwt + s * dws;
      const Complex wbw = -I * s * dwt + s * dws;
      const Complex wwb = I * s * dwbt + s * dwbs;
      const Complex wbwb = -I * s * dwbt + s * dwbs;
      bm_[2] = std::max({bm_[2], bm_[1], std::abs(ww), std::abs(wbw), std::abs(wwb), std::abs(wbwb)});
    }
  }
  if (!std::isfinite(b1_)) b1_ = 0.0;
}

double DefiningFunction::operator()(const HalfPlanePoint& p) const {
  const double d = domain_.boundary_distance(p);
  if (!domain_.contains(p)) return -d;
  if (d <= 3.0 * delta_) return d;
  if (d >= 4.0 * delta_) return 1.0;
  const double b = quintic_step((d - 3.0 * delta_) / delta_);
  return (1.0 - b) * d + b;
}

std::array<double, 2> DefiningFunction::gradient(const HalfPlanePoint& p) const {
  const double h = 1e-6 * p.s();
  const double dt = ((*this)(HalfPlanePoint(p.t() + h, p.s())) - (*this)(HalfPlanePoint(p.t() - h, p.s()))) / (2 * h);
  const double ds = ((*this)(HalfPlanePoint(p.t(), p.s() + h)) - (*this)(HalfPlanePoint(p.t(), p.s() - h))) / (2 * h);
  return {dt, ds};
}

Complex DefiningFunction::apply_W(const HalfPlanePoint& p) const {
  const auto g = gradient(p);
  return I * p.s() * g[0] + p.s() * g[1];
}

Complex DefiningFunction::apply_Wbar(const HalfPlanePoint& p) const {
  const auto g = gradient(p);
  return -I * p.s() * g[0] + p.s() * g[1];
}

DefiningFunction build_defining_function(const DomainSpec& domain) { return DefiningFunction(domain); }

// --- cut-offs ---------------------------------------------------------------

RadialCutoff::RadialCutoff(HalfPlanePoint center, double r_inner, double r_outer)
    : center_(center), r_inner_(r_inner), r_outer_(r_outer) {
  if (!(r_inner > 0.0 && r_inner < r_outer)) throw UsageError("cut-off radii need 0 < r_inner < r_outer");
}

double RadialCutoff::operator()(const HalfPlanePoint& p) const {
  const double d = hyperbolic_distance(p, center_);
  const double x = (d * d - r_inner_ * r_inner_) / (r_outer_ * r_outer_ - r_inner_ * r_inner_);
  return smooth_step_down(x);
}

Complex RadialCutoff::apply_W(const HalfPlanePoint& p) const {
  const double d = hyperbolic_distance(p, center_);
  const double x = (d * d - r_inner_ * r_inner_) / (r_outer_ * r_outer_ - r_inner_ * r_inner_);
  const double chi_prime = smooth_step_down_derivative(x);
  if (chi_prime == 0.0) return {0.0, 0.0};
  // A = cosh d = 1 + |w − c|²/(2 s s_c); W(d²) = 2 d/sinh(d) · W A.
  const double dt = p.t() - center_.t();
  const double ds = p.s() - center_.s();
  const double s = p.s(), sc = center_.s();
  const double a_t = dt / (s * sc);
  const double a_s = ds / (s * sc) - (dt * dt + ds * ds) / (2.0 * s * s * sc);
  const Complex wa = I * s * a_t + s * a_s;
  const double ratio = d < 1e-8 ? 1.0 : d / std::sinh(d);
  const Complex wd2 = 2.0 * ratio * wa;
  return chi_prime * wd2 / (r_outer_ * r_outer_ - r_inner_ * r_inner_);
}

std::pair<RadialCutoff, RadialCutoff> cutoff_pair(const HalfPlanePoint& center, double r_inner,
                                                  double r_outer) {
  return {RadialCutoff(center, r_inner, r_outer), RadialCutoff(center, r_outer, 2.0 * r_outer - r_inner)};
}

// --- covers -----------------------------------------------------------------

std::vector<HalfPlanePoint> ball_cover(const DomainSpec& domain, double eps, double delta,
                                       std::span<const HalfPlanePoint> extra_points) {
  if (!(eps > 0.0 && eps < delta)) throw UsageError("ball_cover needs 0 < eps < delta");
  std::vector<HalfPlanePoint> candidates;
  const auto bb = domain.bounding_box();
  // Euclidean spacing giving at most ~eps/8 hyperbolic spacing at the lowest height.
  const double step = eps * bb[2] / 8.0;
  const int nt = static_cast<int>(std::ceil((bb[1] - bb[0]) / step));
  const int ns = static_cast<int>(std::ceil((bb[3] - bb[2]) / step));
  for (int j = 0; j <= ns; ++j) {
    for (int i = 0; i <= nt; ++i) {
      const HalfPlanePoint p(bb[0] + i * step, bb[2] + j * step);
      if (domain.contains(p)) candidates.push_back(p);
    }
  }
  for (const auto& b : domain.boundary()) candidates.push_back(b);
  candidates.insert(candidates.end(), extra_points.begin(), extra_points.end());

  std::vector<HalfPlanePoint> centers;
  for (const auto& p : candidates) {
    bool far = true;
    for (const auto& c : centers) {
      if (hyperbolic_distance(p, c) < eps) {
        far = false;
        break;
      }
    }
    if (far) centers.push_back(p);
  }
  return centers;
}

int cover_multiplicity(std::span<const HalfPlanePoint> centers, double delta) {
  int worst = 0;
  for (std::size_t i = 0; i < centers.size(); ++i) {
    int count = 0;
    for (std::size_t j = 0; j < centers.size(); ++j)
      if (j != i && hyperbolic_distance(centers[i], centers[j]) < 2.0 * delta) ++count;
    worst = std::max(worst, count);
  }
  return worst;
}

double cover_multiplicity_bound(double eps, double delta) {
  return hyperbolic_ball_area(2.0 * delta + eps) / hyperbolic_ball_area(eps / 2.0);
}

}  // namespace kohn::geo
