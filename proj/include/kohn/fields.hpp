#pragma once

// Seeded smooth test functions on a domain.

#include <cstdint>

#include "kohn/fem.hpp"
#include "kohn/geometry.hpp"

namespace kohn::fields {

// Sum of `terms` random complex-weighted bumps. With zero_trace the bumps are
// compactly supported (C² profile (1 − r²/R²)³) in Euclidean discs kept away
// from ∂D; otherwise they are Gaussians plus a random affine part.
fem::SmoothFn random_smooth(const geo::DomainSpec& domain, std::uint64_t seed, bool zero_trace, int terms = 4);

// Interpolates f and, for zero_trace, clears the boundary nodes.
fem::CoefficientField random_field(const fem::SpacePtr& space, const geo::DomainSpec& domain, std::uint64_t seed,
                                   bool zero_trace, int terms = 4);

// Copy of u with boundary nodal values set to zero.
fem::CoefficientField clear_trace(fem::CoefficientField u);

// Seed mixing so per-item streams are independent of iteration order.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

}  // namespace kohn::fields
