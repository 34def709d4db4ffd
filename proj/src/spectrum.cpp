#include "kohn/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

namespace kohn::spectrum {

namespace {

MatrixXc random_gaussian(int rows, int cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  MatrixXc m(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) {
      const double re = normal(rng);
      const double im = normal(rng);
      m(i, j) = Complex(re, im) / std::sqrt(2.0);
    }
  return m;
}

MatrixXc random_unitary(int d, std::mt19937_64& rng) {
  if (d == 0) return MatrixXc(0, 0);
  Eigen::HouseholderQR<MatrixXc> qr(random_gaussian(d, d, rng));
  return qr.householderQ() * MatrixXc::Identity(d, d);
}

// Smallest admissible nonzero Γ at level q for eigenvalue λ: gap Γ₀ = 1 and
// Γ ≥ −(n−q−1)λ.
double gamma_floor(int n, int q, double lambda) {
  double lb = 1.0;
  if (q <= n - 2 && lambda < 0.0) lb = std::max(lb, -(n - q - 1) * lambda);
  return lb;
}

bool ranks_feasible(const std::vector<int>& dims, const std::vector<int>& ranks) {
  int prev = 0;
  for (std::size_t q = 0; q + 1 < dims.size(); ++q) {
    if (ranks[q] < 0 || ranks[q] > dims[q + 1] || prev + ranks[q] > dims[q]) return false;
    prev = ranks[q];
  }
  return true;
}

int harmonic_dim(const std::vector<int>& dims, const std::vector<int>& ranks, std::size_t q) {
  const int in = q == 0 ? 0 : ranks[q - 1];
  const int out = q + 1 < dims.size() ? ranks[q] : 0;
  return dims[q] - in - out;
}

// Harmonic forms with λ < 0 at q ≤ n − 2 would have Γ = 0 < −(n−q−1)λ.
bool ranks_admissible(int n, double lambda, const std::vector<int>& dims, const std::vector<int>& ranks) {
  if (!ranks_feasible(dims, ranks)) return false;
  if (lambda >= 0.0) return true;
  for (std::size_t q = 0; q < dims.size(); ++q)
    if (static_cast<int>(q) <= n - 2 && harmonic_dim(dims, ranks, q) > 0) return false;
  return true;
}

LambdaBlock build_block(int n, double lambda, const std::vector<int>& dims, const std::vector<int>& ranks,
                        std::mt19937_64& rng) {
  LambdaBlock block;
  block.lambda = lambda;
  block.dims = dims;
  const std::size_t levels = dims.size();
  std::vector<MatrixXc> u(levels);
  for (std::size_t q = 0; q < levels; ++q) u[q] = random_unitary(dims[q], rng);

  // Columns of U_q: [exact (rank D_{q-1}) | coexact (rank D_q) | harmonic].
  for (std::size_t q = 0; q + 1 < levels; ++q) {
    const int r = ranks[q];
    const int offset = q == 0 ? 0 : ranks[q - 1];
    MatrixXc d = MatrixXc::Zero(dims[q + 1], dims[q]);
    if (r > 0) {
      MatrixXc core = random_gaussian(r, r, rng);
      Eigen::JacobiSVD<MatrixXc> svd(core);
      const double smin = svd.singularValues().minCoeff();
      const double floor = gamma_floor(n, static_cast<int>(q), lambda) * (1.0 + 1e-6);
      // Affine rescaling so the smallest nonzero Hodge eigenvalue meets the floor.
      core *= std::sqrt(floor) / std::max(smin, 1e-3);
      d = u[q + 1].leftCols(r) * core * u[q].middleCols(offset, r).adjoint();
    }
    block.D.push_back(std::move(d));
  }
  decompose_block(block);
  return block;
}

}  // namespace

SigmaLabel SigmaLabel::make(int q, double gamma, double lambda, double nu, int n, SigmaKey key) {
  SigmaLabel s;
  s.key = key;
  s.key.q = q;
  s.q = q;
  s.gamma = gamma;
  s.lambda = lambda;
  s.nu = nu;
  s.alpha = (nu + lambda) / 2.0 - 1.0;
  if (q == 0) {
    s.gamma_bar = gamma + (n - 1) * lambda;
    s.g = std::sqrt(std::max(0.0, 1.0 + gamma + *s.gamma_bar));
  } else {
    s.g = std::sqrt(1.0 + gamma);
  }
  return s;
}

std::string SigmaLabel::id() const {
  std::ostringstream os;
  os << 'b' << key.block << 'q' << q << 'i' << key.index;
  return os.str();
}

ValidationReport validate_spectrum(const std::vector<SigmaLabel>& labels, const SpectrumMeta& meta) {
  ValidationReport report;
  auto fail = [&](const std::string& c, const SigmaLabel& s, const std::string& detail) {
    report.pass = false;
    report.violations.push_back({c, s.id(), detail});
  };
  const int n = meta.n;
  if (n < 3) {
    report.pass = false;
    report.violations.push_back({"n", "", "n must be >= 3"});
  }
  for (const auto& s : labels) {
    std::ostringstream d;
    if (s.q < 0 || s.q > n - 1) {
      d << "q = " << s.q << " outside [0, " << n - 1 << "]";
      fail("q", s, d.str());
      continue;
    }
    if (!(s.gamma >= 0.0)) {
      d << "gamma = " << s.gamma << " < 0";
      fail("positivity", s, d.str());
    }
    const double tol = 1e-12 * (1.0 + std::abs(s.gamma) + std::abs(s.lambda));
    if (s.q <= n - 2) {
      const double bound = -(n - s.q - 1) * s.lambda;
      if (s.gamma < bound - tol) {
        std::ostringstream m;
        m << "gamma = " << s.gamma << " < -(n-q-1)*lambda = " << bound;
        fail("c", s, m.str());
      }
      if (s.gamma > kZeroGamma && s.gamma < meta.gamma0 * (1.0 - 1e-12)) {
        std::ostringstream m;
        m << "gamma = " << s.gamma << " in the gap (0, " << meta.gamma0 << ")";
        fail("d", s, m.str());
      }
      if (s.q >= 1 && std::abs(s.lambda) > meta.c_growth * (1.0 + s.gamma) + tol) {
        std::ostringstream m;
        m << "|lambda| = " << std::abs(s.lambda) << " > C(1+gamma) = " << meta.c_growth * (1.0 + s.gamma);
        fail("h", s, m.str());
      }
    }
    if (std::abs(s.alpha - ((s.nu + s.lambda) / 2.0 - 1.0)) > 1e-14 * (1.0 + std::abs(s.alpha))) {
      fail("alpha", s, "alpha != (nu+lambda)/2 - 1");
    }
    double expected_g = std::sqrt(1.0 + s.gamma);
    if (s.q == 0) {
      const double gb = s.gamma + (n - 1) * s.lambda;
      if (!s.gamma_bar || std::abs(*s.gamma_bar - gb) > tol * (1.0 + n)) {
        fail("gamma_bar", s, "gamma_bar != gamma + (n-1)*lambda");
      }
      const double arg = 1.0 + s.gamma + (s.gamma_bar ? *s.gamma_bar : gb);
      if (arg < 0.0) {
        fail("G", s, "1 + gamma + gamma_bar < 0");
        continue;
      }
      expected_g = std::sqrt(arg);
    }
    if (std::abs(s.g - expected_g) > 1e-12 * (1.0 + expected_g)) {
      std::ostringstream m;
      m << "G = " << s.g << ", expected " << expected_g;
      fail("G", s, m.str());
    }
  }
  // Discreteness: distinct (Γ, λ) points at the same degree must be separated.
  const double same = 1e-14;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    for (std::size_t j = i + 1; j < labels.size(); ++j) {
      if (labels[i].q != labels[j].q) continue;
      const double dist = std::hypot(labels[i].gamma - labels[j].gamma, labels[i].lambda - labels[j].lambda);
      if (dist > same * (1.0 + std::abs(labels[i].gamma)) && dist < meta.min_separation) {
        std::ostringstream m;
        m << "(gamma, lambda) within " << dist << " of " << labels[j].id();
        fail("f", labels[i], m.str());
      }
    }
  }
  return report;
}

MatrixXc LambdaBlock::transfer(int q) const {
  return eigenvectors[static_cast<std::size_t>(q + 1)].adjoint() * D[static_cast<std::size_t>(q)] *
         eigenvectors[static_cast<std::size_t>(q)];
}

MatrixXc LambdaBlock::hodge_laplacian(int q) const {
  const auto uq = static_cast<std::size_t>(q);
  MatrixXc l = MatrixXc::Zero(dims[uq], dims[uq]);
  if (uq < D.size()) l += D[uq].adjoint() * D[uq];
  if (q > 0) l += D[uq - 1] * D[uq - 1].adjoint();
  return l;
}

void decompose_block(LambdaBlock& block) {
  const std::size_t levels = block.dims.size();
  if (block.D.size() + 1 != levels && !(levels == 0 && block.D.empty()))
    throw UsageError("block needs one differential per consecutive level pair");
  for (std::size_t q = 0; q + 1 < levels; ++q) {
    if (block.D[q].rows() != block.dims[q + 1] || block.D[q].cols() != block.dims[q])
      throw UsageError("differential shape does not match level dimensions");
  }
  block.eigenvectors.assign(levels, MatrixXc());
  block.eigenvalues.assign(levels, Eigen::VectorXd());
  for (std::size_t q = 0; q < levels; ++q) {
    const int d = block.dims[q];
    if (d == 0) {
      block.eigenvectors[q] = MatrixXc(0, 0);
      block.eigenvalues[q] = Eigen::VectorXd(0);
      continue;
    }
    MatrixXc l = block.hodge_laplacian(static_cast<int>(q));
    l = 0.5 * (l + l.adjoint()).eval();
    Eigen::SelfAdjointEigenSolver<MatrixXc> eig(l);
    if (eig.info() != Eigen::Success) throw NumericalError("Hodge eigen-decomposition failed");
    Eigen::VectorXd values = eig.eigenvalues();
    for (int i = 0; i < d; ++i)
      if (std::abs(values(i)) < kZeroGamma) values(i) = 0.0;
    block.eigenvalues[q] = values;
    block.eigenvectors[q] = eig.eigenvectors();
  }
}

SpectralComplex::SpectralComplex(int n, double nu, std::vector<LambdaBlock> blocks)
    : n_(n), nu_(nu), blocks_(std::move(blocks)) {
  if (n < 3) throw ConfigError("spectral complex needs n >= 3");
  if (nu < 0.0) throw ConfigError("weight exponent nu must be >= 0");
  for (std::size_t b = 1; b < blocks_.size(); ++b)
    if (blocks_[b].dims.size() != blocks_[0].dims.size())
      throw UsageError("all lambda blocks need the same number of levels");
  for (auto& b : blocks_)
    if (b.eigenvectors.size() != b.dims.size()) decompose_block(b);
  rebuild_labels();
}

int SpectralComplex::levels() const { return blocks_.empty() ? 0 : static_cast<int>(blocks_[0].dims.size()); }

void SpectralComplex::rebuild_labels() {
  labels_.assign(static_cast<std::size_t>(levels()), {});
  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    const auto& blk = blocks_[b];
    for (std::size_t q = 0; q < blk.dims.size(); ++q)
      for (int i = 0; i < blk.dims[q]; ++i)
        labels_[q].push_back(SigmaLabel::make(static_cast<int>(q), blk.eigenvalues[q](i), blk.lambda, nu_, n_,
                                              {static_cast<int>(b), static_cast<int>(q), i}));
  }
}

std::vector<SigmaLabel> SpectralComplex::labels(int q) const {
  if (q < 0 || q >= levels()) return {};
  return labels_[static_cast<std::size_t>(q)];
}

std::vector<SigmaLabel> SpectralComplex::all_labels() const {
  std::vector<SigmaLabel> out;
  for (const auto& l : labels_) out.insert(out.end(), l.begin(), l.end());
  return out;
}

const SigmaLabel& SpectralComplex::label(const SigmaKey& key) const {
  if (key.q < 0 || key.q >= levels()) throw UsageError("sigma key level out of range");
  for (const auto& s : labels_[static_cast<std::size_t>(key.q)])
    if (s.key == key) return s;
  throw UsageError("sigma key not present in spectrum");
}

SpectrumMeta SpectralComplex::meta() const {
  SpectrumMeta m;
  m.n = n_;
  double min_nonzero = 1.0;
  double max_lambda = 0.0;
  for (const auto& l : labels_)
    for (const auto& s : l) {
      if (s.q <= n_ - 2 && s.gamma > 0.0) min_nonzero = std::min(min_nonzero, s.gamma);
      max_lambda = std::max(max_lambda, std::abs(s.lambda));
    }
  m.gamma0 = min_nonzero;
  m.c_growth = 1.0 + max_lambda;
  return m;
}

double SpectralComplex::complex_residual() const {
  double worst = 0.0;
  for (const auto& b : blocks_)
    for (std::size_t q = 0; q + 1 < b.D.size(); ++q) {
      if (b.D[q].size() == 0 || b.D[q + 1].size() == 0) continue;
      worst = std::max(worst, (b.D[q + 1] * b.D[q]).cwiseAbs().maxCoeff());
    }
  return worst;
}

SpectralComplex synth_complex(int n, const std::vector<int>& dims, const std::vector<double>& lambda_values,
                              std::uint64_t seed, double nu, std::optional<std::vector<int>> ranks) {
  if (n < 3) throw ConfigError("synth_complex needs n >= 3");
  if (dims.empty()) throw ConfigError("synth_complex needs at least one level");
  if (lambda_values.empty()) throw ConfigError("synth_complex needs at least one lambda value");
  for (int d : dims)
    if (d < 0) throw ConfigError("level dimensions must be >= 0");
  if (ranks && ranks->size() + 1 != dims.size())
    throw ConfigError("ranks needs one entry per consecutive level pair");

  std::mt19937_64 rng(seed);
  constexpr int kRetries = 200;
  for (int attempt = 0; attempt < kRetries; ++attempt) {
    std::vector<LambdaBlock> blocks;
    bool ok = true;
    for (double lambda : lambda_values) {
      std::vector<int> r;
      if (ranks) {
        r = *ranks;
        if (!ranks_admissible(n, lambda, dims, r)) {
          std::ostringstream msg;
          msg << "fixed ranks leave harmonic forms in the lambda = " << lambda << " block, violating Gamma >= -(n-q-1)lambda";
          throw GenerationError(msg.str());
        }
      } else {
        bool found = false;
        for (int t = 0; t < kRetries && !found; ++t) {
          r.assign(dims.size() - 1, 0);
          int prev = 0;
          for (std::size_t q = 0; q + 1 < dims.size(); ++q) {
            const int hi = std::min(dims[q] - prev, dims[q + 1]);
            std::uniform_int_distribution<int> pick(0, std::max(0, hi));
            r[q] = hi <= 0 ? 0 : pick(rng);
            prev = r[q];
          }
          found = ranks_admissible(n, lambda, dims, r);
        }
        if (!found) {
          ok = false;
          break;
        }
      }
      blocks.push_back(build_block(n, lambda, dims, r, rng));
    }
    if (!ok) continue;
    SpectralComplex complex(n, nu, std::move(blocks));
    SpectrumMeta meta = complex.meta();
    meta.gamma0 = 1.0;
    if (validate_spectrum(complex.all_labels(), meta).pass) return complex;
  }
  throw GenerationError("no constraint-satisfying synthetic complex found within the retry budget");
}

int kohn_rossi_dim(const SpectralComplex& complex, int q) {
  if (q < 0 || q >= complex.levels()) throw UsageError("kohn_rossi_dim: q out of range");
  int count = 0;
  for (const auto& s : complex.labels(q))
    if (s.gamma <= kZeroGamma) ++count;
  return count;
}

StubSpectrum sphere_stub_spectrum(int n, int lambda_cap, double nu) {
  if (n < 3) throw ConfigError("sphere stub needs n >= 3");
  if (lambda_cap < 0) throw ConfigError("lambda_cap must be >= 0");
  std::vector<LambdaBlock> blocks;
  for (int l = -lambda_cap; l <= lambda_cap; ++l) {
    LambdaBlock b;
    b.lambda = l;
    const int harmonic0 = l >= 0 ? 1 : 0;
    b.dims.assign(static_cast<std::size_t>(n), 2);
    b.dims[0] = 1 + harmonic0;
    b.dims[static_cast<std::size_t>(n - 1)] = 1;
    // Level basis: [exact (q >= 1) | coexact (q <= n-2) | harmonic (q = 0, λ >= 0)].
    for (int q = 0; q + 1 < n; ++q) {
      MatrixXc d = MatrixXc::Zero(b.dims[static_cast<std::size_t>(q + 1)], b.dims[static_cast<std::size_t>(q)]);
      const double mu = 1.0 + q + n * std::abs(static_cast<double>(l));
      const int coexact = q == 0 ? 0 : 1;
      d(0, coexact) = std::sqrt(mu);
      b.D.push_back(std::move(d));
    }
    decompose_block(b);
    blocks.push_back(std::move(b));
  }
  SpectralComplex complex(n, nu, std::move(blocks));
  SpectrumMeta meta;
  meta.n = n;
  meta.gamma0 = 1.0;
  meta.c_growth = 1.0;
  return {complex.all_labels(), meta, std::move(complex)};
}

void sort_canonical(std::vector<SigmaLabel>& labels) {
  std::stable_sort(labels.begin(), labels.end(), [](const SigmaLabel& a, const SigmaLabel& b) {
    const double la = std::abs(a.lambda), lb = std::abs(b.lambda);
    if (la != lb) return la < lb;
    if (a.gamma != b.gamma) return a.gamma < b.gamma;
    return a.key < b.key;
  });
}

}  // namespace kohn::spectrum
