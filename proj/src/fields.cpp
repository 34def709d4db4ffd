#include "kohn/fields.hpp"

#include <cmath>
#include <random>

namespace kohn::fields {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  // splitmix64 finalizer over the combined words
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(seed) ^ a) ^ b);
}

fem::SmoothFn random_smooth(const geo::DomainSpec& domain, std::uint64_t seed, bool zero_trace, int terms) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto bb = domain.bounding_box();
  const double width = std::max(bb[1] - bb[0], bb[3] - bb[2]);

  struct Bump {
    Complex center;
    double radius;
    Complex weight;
  };
  std::vector<Bump> bumps;
  int guard = 0;
  while (static_cast<int>(bumps.size()) < terms && guard++ < 10000) {
    const geo::HalfPlanePoint p(bb[0] + unit(rng) * (bb[1] - bb[0]), bb[2] + unit(rng) * (bb[3] - bb[2]));
    if (!domain.contains(p)) continue;
    const double d = domain.boundary_distance(p);
    double radius;
    if (zero_trace) {
      // Euclidean disc of radius s(1 − e^{−d}) lies inside the hyperbolic ball of radius d.
      radius = 0.9 * p.s() * (1.0 - std::exp(-d));
      if (radius < 0.15 * width) continue;
      radius = std::min(radius, 0.45 * width);
    } else {
      radius = (0.2 + 0.3 * unit(rng)) * width;
    }
    bumps.push_back({p.w(), radius, Complex(normal(rng), normal(rng))});
  }
  if (bumps.empty()) throw DomainError("could not place test bumps inside the domain");
  const Complex affine0(normal(rng), normal(rng));
  const Complex affine_t(normal(rng), normal(rng));
  const Complex affine_s(normal(rng), normal(rng));
  const Complex c = domain.centroid();
  return [bumps, zero_trace, affine0, affine_t, affine_s, c, width](double t, double s) -> Complex {
    Complex sum{0.0, 0.0};
    const Complex w(t, s);
    for (const auto& b : bumps) {
      const double r2 = std::norm(w - b.center) / (b.radius * b.radius);
      if (zero_trace) {
        if (r2 < 1.0) {
          const double x = 1.0 - r2;
          sum += b.weight * x * x * x;
        }
      } else {
        sum += b.weight * std::exp(-r2);
      }
    }
    if (!zero_trace)
      sum += 0.3 * (affine0 + affine_t * (t - c.real()) / width + affine_s * (s - c.imag()) / width);
    return sum;
  };
}

fem::CoefficientField clear_trace(fem::CoefficientField u) {
  const auto& mesh = u.space->mesh();
  for (int i = 0; i < mesh.num_nodes(); ++i)
    if (mesh.boundary[static_cast<std::size_t>(i)]) u.values(i) = 0.0;
  return u;
}

fem::CoefficientField random_field(const fem::SpacePtr& space, const geo::DomainSpec& domain, std::uint64_t seed,
                                   bool zero_trace, int terms) {
  auto u = fem::CoefficientField::interpolate(space, random_smooth(domain, seed, zero_trace, terms));
  return zero_trace ? clear_trace(std::move(u)) : u;
}

}  // namespace kohn::fields
