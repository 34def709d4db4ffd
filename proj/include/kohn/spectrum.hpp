#pragma once

// Spectral data of a compact normal CR manifold N of dimension 2n − 1:
// eigen-labels σ with (Γ, λ), per-λ cochain complexes carrying the
// tangential ∂̄ blocks, and validation of the structural constraints.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "kohn/common.hpp"

namespace kohn::spectrum {

// Position of a label inside a SpectralComplex: λ-block, level q, column of
// the level's eigenbasis. Labels supplied without a complex use block = -1.
struct SigmaKey {
  int block = -1;
  int q = 0;
  int index = 0;

  auto operator<=>(const SigmaKey&) const = default;
};

struct SigmaLabel {
  SigmaKey key;
  int q = 0;
  double gamma = 0.0;
  double lambda = 0.0;
  std::optional<double> gamma_bar;  // q = 0 only
  double nu = 0.0;
  double g = 1.0;
  double alpha = -1.0;

  // Fills gamma_bar (q = 0), g and alpha from the primary data.
  static SigmaLabel make(int q, double gamma, double lambda, double nu, int n, SigmaKey key = {});

  // Stable text id used in tables, e.g. "b2q1i0".
  std::string id() const;
};

struct SpectrumMeta {
  int n = 4;
  double gamma0 = 1.0;
  double c_growth = 1.0;
  double min_separation = 1e-6;
};

struct Violation {
  std::string constraint;  // "positivity", "c", "d", "f", "h", "G", "alpha", "gamma_bar"
  std::string label;
  std::string detail;
};

struct ValidationReport {
  bool pass = true;
  std::vector<Violation> violations;
};

ValidationReport validate_spectrum(const std::vector<SigmaLabel>& labels, const SpectrumMeta& meta);

// One λ-eigenspace of Λ: cochain spaces V^0 … V^{L-1} with differentials
// D[q]: V^q → V^{q+1} and the Hodge eigen-decomposition at each level.
struct LambdaBlock {
  double lambda = 0.0;
  std::vector<int> dims;
  std::vector<MatrixXc> D;                // D[q] is dims[q+1] × dims[q]
  std::vector<MatrixXc> eigenvectors;     // columns orthonormal, ascending eigenvalues
  std::vector<Eigen::VectorXd> eigenvalues;

  // D[q] in the eigenbases: E_{q+1}^H D_q E_q.
  MatrixXc transfer(int q) const;
  MatrixXc hodge_laplacian(int q) const;
};

class SpectralComplex {
 public:
  SpectralComplex(int n, double nu, std::vector<LambdaBlock> blocks);

  int n() const { return n_; }
  double nu() const { return nu_; }
  int levels() const;
  const std::vector<LambdaBlock>& blocks() const { return blocks_; }

  // All labels at level q, ordered by block then eigen-index.
  std::vector<SigmaLabel> labels(int q) const;
  std::vector<SigmaLabel> all_labels() const;
  const SigmaLabel& label(const SigmaKey& key) const;
  // Minimal metadata consistent with the complex (Γ₀ = smallest nonzero Γ
  // capped at 1, C = 1 + max|λ|).
  SpectrumMeta meta() const;

  // Max-abs entry of D_{q+1} D_q over all blocks and q.
  double complex_residual() const;

 private:
  void rebuild_labels();

  int n_;
  double nu_;
  std::vector<LambdaBlock> blocks_;
  std::vector<std::vector<SigmaLabel>> labels_;  // per level
};

// Hodge eigenvalues below this count as zero.
inline constexpr double kZeroGamma = 1e-9;

// Fills eigenvectors/eigenvalues of a block from its differentials.
void decompose_block(LambdaBlock& block);

// Random complex with D² = 0. `ranks`, if given, fixes rank D_q per level
// (size dims.size() − 1) for every block. Nonzero Hodge eigenvalues are
// scaled so constraints (c) and (d) hold with Γ₀ = 1.
SpectralComplex synth_complex(int n, const std::vector<int>& dims, const std::vector<double>& lambda_values,
                              std::uint64_t seed, double nu = 0.0,
                              std::optional<std::vector<int>> ranks = std::nullopt);

int kohn_rossi_dim(const SpectralComplex& complex, int q);

struct StubSpectrum {
  std::vector<SigmaLabel> labels;
  SpectrumMeta meta;
  SpectralComplex complex;
};

// Illustrative U(1)-weighted stub of sphere-like data: integer λ in
// [−cap, cap], one exact/coexact pair per level, harmonic forms only at
// q = 0 with λ ≥ 0. Not the true sphere spectrum.
StubSpectrum sphere_stub_spectrum(int n, int lambda_cap, double nu = 0.0);

// Sort key used for σ-samples: (|λ|, Γ, key).
void sort_canonical(std::vector<SigmaLabel>& labels);

}  // namespace kohn::spectrum
