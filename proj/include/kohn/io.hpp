#pragma once

// File formats: JSON for configs, domains, spectra, form manifests and
// reports; CSV for meshes, fields, constants and report tables; Vega-Lite
// specs next to every table. Schemas are listed in docs/schemas.md.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "kohn/experiments.hpp"
#include "kohn/forms.hpp"
#include "kohn/solver.hpp"
#include "kohn/spectrum.hpp"

namespace kohn::io {

namespace fs = std::filesystem;
using nlohmann::json;

inline constexpr const char* kConfigSchema = "kohnlab.config/1";
inline constexpr const char* kDomainSchema = "kohnlab.domain/1";
inline constexpr const char* kSpectrumSchema = "kohnlab.spectrum/1";
inline constexpr const char* kLabelsSchema = "kohnlab.labels/1";
inline constexpr const char* kFormSchema = "kohnlab.form/1";
inline constexpr const char* kReportSchema = "kohnlab.report/1";

// Shortest decimal text that reads back to the same double.
std::string format_double(double x);

std::string read_text(const fs::path& path);
// Writes to a sibling temporary file, then renames over `path`.
void write_text_atomic(const fs::path& path, const std::string& text);
json read_json(const fs::path& path);
void write_json(const fs::path& path, const json& value);

// 64-bit FNV-1a of `text` as 16 hex digits.
std::string content_hash(const std::string& text);

// Domains: {"vertices": [[t, s], ...]} or {"disc": {"center": [t, s], "radius": r}},
// plus "nu" and optional "delta".
geo::DomainSpec domain_from_json(const json& j);
json domain_to_json(const geo::DomainSpec& domain);

// Spectra: full complexes with blocks of differentials.
json spectrum_to_json(const spectrum::SpectralComplex& complex);
spectrum::SpectralComplex spectrum_from_json(const json& j);
std::string spectrum_id(const spectrum::SpectralComplex& complex);

// Bare label lists for validation.
struct LabelSet {
  std::vector<spectrum::SigmaLabel> labels;
  spectrum::SpectrumMeta meta;
};
LabelSet labels_from_json(const json& j);
json labels_to_json(const std::vector<spectrum::SigmaLabel>& labels, const spectrum::SpectrumMeta& meta);
json validation_to_json(const spectrum::ValidationReport& report);

// Spectrum source inside a config: a file path, {"stub": {...}}, {"synth": {...}}
// or an inline complex. Relative paths resolve against `base`.
std::shared_ptr<const spectrum::SpectralComplex> spectrum_from_source(const json& source, const fs::path& base);

// Mesh: nodes.csv (id, t, s, boundary) and triangles.csv (id, a, b, c).
void write_mesh(const fem::Mesh& mesh, const fs::path& dir);
std::string mesh_id(const fem::Mesh& mesh);

// Field CSV: node, t, s, re, im.
std::string field_csv(const fem::CoefficientField& field);
fem::CoefficientField field_from_csv(const std::string& text, const fem::SpacePtr& space);

// Constants CSV: sigma_id, gamma, lambda, ratio.
std::string constants_csv(const solver::ConstantsTable& table);
experiments::Table slot_constants_table(const std::vector<forms::SlotConstant>& constants);

// Forms: manifest.json (spectrum id, mesh id, slot list) plus one field CSV per slot.
void write_form(const forms::FourierForm& form, const fs::path& dir);
// ConfigError when the manifest ids differ from the context's spectrum or mesh.
forms::FourierForm read_form(const forms::ContextPtr& context, const fs::path& dir);

// Tables and reports.
std::string table_csv(const experiments::Table& table);
json vega_lite(const experiments::Table& table, const std::string& csv_name);
json report_to_json(const experiments::ExperimentReport& report);
// Builds the directory under a temporary name and renames it into place.
void write_report(const experiments::ExperimentReport& report, const fs::path& dir);

struct RunConfig {
  fs::path base_dir;  // directory of the config file
  geo::DomainSpec domain = experiments::default_disc();
  bool domain_given = false;
  std::shared_ptr<const spectrum::SpectralComplex> spectrum;
  bool spectrum_given = false;
  double h = 0.1;
  std::vector<double> h_levels;
  int q = 1;
  int n = 4;
  double nu = 0.0;
  solver::SolverOptions solver;
  forms::BoxSolveOptions box;
  double box_residual_tol = 1e-8;
  forms::DbarOptions dbar;
  json experiments = json::object();  // per-name option overrides
  std::vector<std::string> run;       // experiment selection
  fs::path input;
  fs::path output = "out";
  std::uint64_t seed = 1;
  int threads = 1;  // KOHNLAB_THREADS overrides
  json raw = json::object();
};

// Validates 1 ≤ q ≤ n − 2 and n ≥ 3 (ConfigError).
RunConfig config_from_json(const json& j, const fs::path& base_dir = ".");
RunConfig load_config(const fs::path& path);
// Spectrum, domain and a mesh at config.h.
forms::ContextPtr make_context(const RunConfig& config);

solver::KernelMode kernel_mode_from_string(const std::string& name);
std::string to_string(solver::KernelMode mode);

// Experiment options from config["experiments"][name] over the defaults.
experiments::NoncompactOptions noncompact_options(const RunConfig& config);
experiments::NegRegOptions negreg_options(const RunConfig& config);
experiments::DiscOptions disc_options(const RunConfig& config);
experiments::HypoOptions hypo_options(const RunConfig& config);
experiments::SweepOptions sweep_options(const RunConfig& config);
experiments::ConvergeOptions converge_options(const RunConfig& config);
// Unknown names raise ConfigError.
experiments::ExperimentReport run_experiment(const std::string& name, const RunConfig& config);

}  // namespace kohn::io
