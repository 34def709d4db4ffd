#pragma once

// Scripted reproductions of the counterexamples and estimate claims, each
// producing a report with tables, threshold checks and a verdict.

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "kohn/geometry.hpp"
#include "kohn/solver.hpp"
#include "kohn/spectrum.hpp"

namespace kohn::experiments {

using nlohmann::json;
using spectrum::SigmaLabel;

enum class Verdict { reproduced, violated, inconclusive };
std::string to_string(Verdict v);

// Plot hint for the generated Vega-Lite spec.
struct PlotSpec {
  std::string x;
  std::vector<std::string> y;  // several columns are folded into one series each
  std::string color;           // nominal column for a single y
  std::string mark = "line";
  bool log_x = false;
  bool log_y = false;
};

struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<json>> rows;  // numbers or strings
  std::optional<PlotSpec> plot;
};

struct Measurement {
  std::string name;
  double value = 0.0;
  double h = 0.0;  // mesh level; 0 for mesh-free quadrature
};

struct Check {
  enum class Kind { property, stability };
  std::string name;
  double value = 0.0;
  std::string relation;  // "<", "<=", ">=", ">", "=="
  double threshold = 0.0;
  Kind kind = Kind::property;
  bool pass = false;
};

struct ExperimentReport {
  std::string id;
  json parameters = json::object();
  std::vector<Measurement> measurements;
  std::vector<Table> tables;
  std::vector<Check> checks;
  std::vector<std::string> notes;
  Verdict verdict = Verdict::inconclusive;

  const Check& add_check(std::string name, double value, std::string relation, double threshold,
                         Check::Kind kind = Check::Kind::property);
  void measure(std::string name, double value, double h = 0.0);
  // violated if a property check fails, inconclusive if only stability
  // checks fail, reproduced otherwise. `forced` overrides.
  void decide(std::optional<Verdict> forced = std::nullopt);
  const Check* find_check(const std::string& name) const;
};

// The disc |w − 2i| < 1 used by default throughout.
geo::DomainSpec default_disc(double nu = 0.0);

// Strictly increasing with the final increment at least `fraction` of the
// previous one.
bool diverging(const std::vector<double>& values, double fraction = 0.5);

// Least-squares slope of log(err) against log(h).
double convergence_rate(const std::vector<double>& h, const std::vector<double>& err);

struct NoncompactOptions {
  std::optional<geo::DomainSpec> domain;
  SigmaLabel sigma = SigmaLabel::make(1, 1.0, 0.0, 0.0, 4);
  int K = 20;
  Complex w0{0.0, 2.5};
  double eps = 0.4;
  std::vector<double> h_levels{0.05, 0.025};
  double eigen_tol = 1e-6;
  double stability_tol = 0.05;
};
ExperimentReport run_noncompactness(const NoncompactOptions& options = {});

struct NegRegOptions {
  SigmaLabel sigma = SigmaLabel::make(1, 1.0, 1.0, 0.0, 4);
  Complex center{0.0, 2.0};
  double radius = 1.0;
  Complex z0{1.0, 2.0};
  std::vector<double> eps_list{1e-2, 1e-3, 1e-4, 1e-5};
  double h = 0.05;
  double wbar_tol = 1e-8;
  double eigen_tol = 1e-6;
  double growth_fraction = 0.5;
};
ExperimentReport run_negregularity(const NegRegOptions& options = {});

struct DiscOptions {
  double alpha = 0.0;
  int J = 8;
  double eps = 0.05;  // cut-off: 0 below eps, 1 above 2·eps
  double min_drop = 10.0;
};
ExperimentReport run_disc_nonsurjectivity(const DiscOptions& options = {});

struct HypoOptions {
  int q = 1;
  std::shared_ptr<const spectrum::SpectralComplex> with_cohomology;  // default: synthetic, one Γ=0 label per level
  std::shared_ptr<const spectrum::SpectralComplex> without;          // default: sphere stub
  std::vector<int> caps{1, 2, 4, 8};
  double h = 0.1;
  std::vector<double> log_levels{0.2, 0.1, 0.05, 0.025};
  std::optional<geo::DomainSpec> domain;
  double kernel_tol = 1e-8;
  int threads = 1;
};
ExperimentReport run_hypoellipticity(const HypoOptions& options = {});

struct SweepOptions {
  solver::EstimateKind kind = solver::EstimateKind::basic;
  std::vector<SigmaLabel> labels;  // pool; default: sphere stub labels with q ≤ n − 2
  int sample = 25;                 // compared against 2·sample
  std::vector<double> h_levels{0.1, 0.05};
  std::optional<geo::DomainSpec> domain;
  solver::EstimateOptions estimate;
  double tol = 0.1;
};
ExperimentReport run_estimate_sweep(const SweepOptions& options = {});

struct ConvergeOptions {
  SigmaLabel sigma = SigmaLabel::make(1, 2.0, 0.7, 0.0, 4);
  Complex center{0.0, 2.0};
  double radius = 1.0;
  std::vector<double> h_levels{0.1, 0.05, 0.025};
  double rate_lo = 1.8;
  double rate_hi = 2.2;
};
ExperimentReport run_convergence(const ConvergeOptions& options = {});

// Names accepted by the CLI: noncompact, negreg, disc, hypo, sweep, converge.
const std::vector<std::string>& experiment_names();

}  // namespace kohn::experiments
