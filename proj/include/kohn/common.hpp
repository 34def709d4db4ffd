#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace kohn {

using Complex = std::complex<double>;
using VectorXc = Eigen::VectorXcd;
using MatrixXc = Eigen::MatrixXcd;

inline constexpr Complex I{0.0, 1.0};

// Error hierarchy. Every public failure is one of these; the C API maps
// them onto stable integer codes (see include/kohn/kohnlab.h).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller passed inconsistent arguments (mismatched spectra, missing blocks).
class UsageError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration or hypothesis violation (e.g. q outside [1, n-2]).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Geometry construction failed (self-intersecting boundary, bad collar, meshing).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Request exceeds what the discretization can represent.
class CapabilityError : public Error {
 public:
  using Error::Error;
};

// Linear solve diverged or stagnated.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// Input data failed a precondition check (solve_dbar closedness/orthogonality).
class RejectedInput : public Error {
 public:
  using Error::Error;
};

// Synthetic spectrum could not satisfy its constraints in bounded retries.
class GenerationError : public Error {
 public:
  using Error::Error;
};

// Runs fn(i) for i in [0, n) on up to `threads` workers. Each index is
// processed exactly once; callers write results into slot i so the outcome
// does not depend on scheduling.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

// Thread count from KOHNLAB_THREADS, or `fallback` when unset/invalid.
int threads_from_env(int fallback);

}  // namespace kohn
