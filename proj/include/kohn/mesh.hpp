#pragma once

#include <array>
#include <memory>
#include <vector>

#include "kohn/geometry.hpp"

namespace kohn::fem {

struct Mesh {
  std::vector<std::array<double, 2>> nodes;  // (t, s)
  std::vector<std::array<int, 3>> triangles;  // counter-clockwise
  std::vector<char> boundary;                 // 1 on ∂D
  double h = 0.0;                             // max edge length

  int num_nodes() const { return static_cast<int>(nodes.size()); }
  int num_triangles() const { return static_cast<int>(triangles.size()); }
  int num_boundary() const;
  double min_s() const;
};

// Ring triangulation of a domain that is star-shaped about its centroid:
// K concentric copies of the boundary polyline scaled toward the centroid,
// with node counts growing linearly in the ring index and neighbouring rings
// stitched by merging their angular parameters. Boundary nodes lie on the
// polyline. Throws DomainError when h is too coarse or the domain is not
// star-shaped.
Mesh build_mesh(const geo::DomainSpec& domain, double h);

}  // namespace kohn::fem
