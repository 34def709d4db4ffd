#include "kohn/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace kohn::fem {

namespace {

struct BoundaryParam {
  std::vector<Complex> points;
  std::vector<double> arclength;  // cumulative, normalized to [0, 1]

  Complex at(double tau) const {
    tau -= std::floor(tau);
    const auto it = std::upper_bound(arclength.begin(), arclength.end(), tau);
    const std::size_t i = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, it - arclength.begin() - 1));
    const std::size_t j = (i + 1) % points.size();
    const double a = arclength[i];
    const double b = i + 1 < arclength.size() ? arclength[i + 1] : 1.0;
    const double f = b > a ? (tau - a) / (b - a) : 0.0;
    return points[i] + f * (points[j] - points[i]);
  }
};

double signed_area(const std::array<double, 2>& a, const std::array<double, 2>& b, const std::array<double, 2>& c) {
  return 0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]));
}

Mesh build_rings(const BoundaryParam& param, Complex center, int rings, int outer_count) {
  Mesh mesh;
  std::vector<int> ring_start;
  std::vector<int> ring_count;
  mesh.nodes.push_back({center.real(), center.imag()});
  mesh.boundary.push_back(0);
  ring_start.push_back(0);
  ring_count.push_back(1);
  for (int k = 1; k <= rings; ++k) {
    const int count = std::max(6, static_cast<int>(std::ceil(static_cast<double>(outer_count) * k / rings)));
    ring_start.push_back(mesh.num_nodes());
    ring_count.push_back(count);
    const double frac = static_cast<double>(k) / rings;
    for (int i = 0; i < count; ++i) {
      const Complex b = param.at(static_cast<double>(i) / count);
      const Complex p = center + frac * (b - center);
      mesh.nodes.push_back({p.real(), p.imag()});
      mesh.boundary.push_back(k == rings ? 1 : 0);
    }
  }
  auto add = [&](int a, int b, int c) {
    if (signed_area(mesh.nodes[a], mesh.nodes[b], mesh.nodes[c]) < 0.0) std::swap(b, c);
    mesh.triangles.push_back({a, b, c});
  };
  for (int i = 0; i < ring_count[1]; ++i) add(0, ring_start[1] + i, ring_start[1] + (i + 1) % ring_count[1]);
  for (int k = 2; k <= rings; ++k) {
    const int na = ring_count[k - 1], nb = ring_count[k];
    const int sa = ring_start[k - 1], sb = ring_start[k];
    int i = 0, j = 0;
    while (i < na || j < nb) {
      const double ta = static_cast<double>(i + 1) / na;
      const double tb = static_cast<double>(j + 1) / nb;
      if (j < nb && (i >= na || tb < ta)) {
        add(sa + i % na, sb + j % nb, sb + (j + 1) % nb);
        ++j;
      } else {
        add(sa + i % na, sb + j % nb, sa + (i + 1) % na);
        ++i;
      }
    }
  }
  double h = 0.0;
  for (const auto& t : mesh.triangles) {
    for (int e = 0; e < 3; ++e) {
      const auto& p = mesh.nodes[t[e]];
      const auto& q = mesh.nodes[t[(e + 1) % 3]];
      h = std::max(h, std::hypot(p[0] - q[0], p[1] - q[1]));
    }
    if (signed_area(mesh.nodes[t[0]], mesh.nodes[t[1]], mesh.nodes[t[2]]) <= 0.0)
      throw DomainError("ring triangulation produced a degenerate element; domain is not star-shaped enough");
  }
  mesh.h = h;
  return mesh;
}

}  // namespace

int Mesh::num_boundary() const {
  return static_cast<int>(std::count(boundary.begin(), boundary.end(), 1));
}

double Mesh::min_s() const {
  double m = nodes.empty() ? 0.0 : nodes[0][1];
  for (const auto& p : nodes) m = std::min(m, p[1]);
  return m;
}

Mesh build_mesh(const geo::DomainSpec& domain, double h) {
  if (!(h > 0.0)) throw DomainError("mesh size h must be positive");
  const Complex center = domain.centroid();
  // Star-shapedness about the centroid.
  for (int k = 0; k < 720; ++k) (void)domain.ray_exit(center, 2.0 * std::numbers::pi * (k + 0.5) / 720.0);

  BoundaryParam param;
  double total = 0.0;
  double reach = 0.0;
  const auto bnd = domain.boundary();
  for (std::size_t i = 0; i < bnd.size(); ++i) {
    param.points.push_back(bnd[i].w());
    param.arclength.push_back(total);
    total += std::abs(bnd[(i + 1) % bnd.size()].w() - bnd[i].w());
    reach = std::max(reach, std::abs(bnd[i].w() - center));
  }
  for (double& a : param.arclength) a /= total;

  double factor = 0.7;
  for (int attempt = 0; attempt < 8; ++attempt) {
    const int rings = static_cast<int>(std::ceil(reach / (factor * h)));
    const int outer = static_cast<int>(std::ceil(total / (factor * h)));
    if (rings < 2 || outer < 12) throw DomainError("mesh size h is too large for the domain");
    Mesh mesh = build_rings(param, center, rings, outer);
    if (mesh.h <= h) return mesh;
    factor *= 0.85;
  }
  throw DomainError("could not reach the requested mesh size");
}

}  // namespace kohn::fem
