// Command-line front end. Links only the C interface of libkohnlab.

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "kohn/kohnlab.h"

namespace {

enum Exit { kOk = 0, kConfig = 2, kNumerical = 3, kRejected = 4, kViolated = 5, kInconclusive = 6 };

int exit_code(kl_status s) {
  switch (s) {
    case KL_OK: return kOk;
    case KL_ERR_NUMERICAL:
    case KL_ERR_INTERNAL: return kNumerical;
    case KL_ERR_REJECTED: return kRejected;
    default: return kConfig;
  }
}

int fail(kl_status s) {
  std::fprintf(stderr, "kohnlab: %s error: %s\n", kl_status_name(s), kl_last_error());
  return exit_code(s);
}

// Owns a handle and releases it with its kl_*_free.
template <class T, void (*Free)(T*)>
struct Handle {
  T* p = nullptr;
  Handle() = default;
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  ~Handle() {
    if (p) Free(p);
  }
  T** out() { return &p; }
};

using Config = Handle<kl_config, kl_config_free>;
using Context = Handle<kl_context, kl_context_free>;
using Form = Handle<kl_form, kl_form_free>;
using Report = Handle<kl_report, kl_report_free>;
using Spectrum = Handle<kl_spectrum, kl_spectrum_free>;
using Domain = Handle<kl_domain, kl_domain_free>;
using Mesh = Handle<kl_mesh, kl_mesh_free>;

kl_status load_config(const std::string& path, Config& config) {
  if (path.empty()) return kl_config_parse("{}", ".", config.out());
  return kl_config_load(path.c_str(), config.out());
}

std::string pick(const std::string& flag, const char* from_config, const char* what) {
  std::string v = flag.empty() ? std::string(from_config) : flag;
  if (v.empty()) std::fprintf(stderr, "kohnlab: config error: no %s given\n", what);
  return v;
}

int cmd_solve_box(const std::string& config_path, const std::string& input, const std::string& output) {
  Config config;
  if (auto s = load_config(config_path, config)) return fail(s);
  const std::string in = pick(input, kl_config_input(config.p), "input form");
  const std::string out = pick(output, kl_config_output(config.p), "output directory");
  if (in.empty() || out.empty()) return kConfig;
  double residual = 0.0;
  const kl_status s = kl_solve_box_files(config.p, in.c_str(), out.c_str(), &residual);
  if (s != KL_OK) return fail(s);
  std::printf("solve-box: residual %.3e, written to %s\n", residual, out.c_str());
  return kOk;
}

int cmd_solve_dbar(const std::string& config_path, const std::string& input, const std::string& output) {
  Config config;
  if (auto s = load_config(config_path, config)) return fail(s);
  const std::string in = pick(input, kl_config_input(config.p), "input form");
  const std::string out = pick(output, kl_config_output(config.p), "output directory");
  if (in.empty() || out.empty()) return kConfig;
  kl_dbar_diagnostics d{};
  const kl_status s = kl_solve_dbar_files(config.p, in.c_str(), out.c_str(), &d);
  if (s == KL_ERR_REJECTED)
    std::fprintf(stderr, "solve-dbar: closedness %.3e, kernel component %.3e\n", d.closedness, d.kernel_component);
  if (s != KL_OK) return fail(s);
  std::printf("solve-dbar: residual %.3e, stability %.4f, closedness %.3e, kernel component %.3e\n", d.residual,
              d.stability, d.closedness, d.kernel_component);
  return kOk;
}

int run_one(const kl_config* config, const std::string& name, const std::string& output) {
  Report report;
  if (auto s = kl_experiment_run(config, name.c_str(), report.out())) return fail(s);
  const std::string dir = output + "/" + name;
  if (auto s = kl_report_write(report.p, dir.c_str())) return fail(s);
  for (size_t i = 0; i < kl_report_check_count(report.p); ++i) {
    kl_check c{};
    kl_report_check(report.p, i, &c);
    std::printf("  [%s] %-40s %.6g %s %.6g%s\n", c.pass ? "pass" : "FAIL", c.name, c.value, c.relation, c.threshold,
                c.is_property ? "" : " (stability)");
  }
  const kl_verdict v = kl_report_verdict(report.p);
  std::printf("%s: %s (report in %s)\n", name.c_str(), kl_verdict_name(v), dir.c_str());
  return v == KL_REPRODUCED ? kOk : v == KL_VIOLATED ? kViolated : kInconclusive;
}

int cmd_experiment(const std::string& config_path, const std::string& name, const std::string& output) {
  Config config;
  if (auto s = load_config(config_path, config)) return fail(s);
  const std::string out = pick(output, kl_config_output(config.p), "output directory");
  if (out.empty()) return kConfig;
  if (name != "all") return run_one(config.p, name, out);
  int worst = kOk;
  for (size_t i = 0; i < kl_experiment_count(); ++i) {
    const int code = run_one(config.p, kl_experiment_name(i), out);
    if (code == kConfig || code == kNumerical) return code;
    worst = std::max(worst, code);
  }
  return worst;
}

int cmd_spectrum_synth(int n, const std::vector<int>& dims, const std::vector<double>& lambdas,
                       const std::vector<int>& ranks, uint64_t seed, double nu, int stub_cap,
                       const std::string& output) {
  Spectrum spectrum;
  kl_status s;
  if (stub_cap >= 0)
    s = kl_spectrum_stub(n, stub_cap, nu, spectrum.out());
  else
    s = kl_spectrum_synth(n, dims.data(), dims.size(), lambdas.data(), lambdas.size(), seed, nu,
                          ranks.empty() ? nullptr : ranks.data(), ranks.size(), spectrum.out());
  if (s != KL_OK) return fail(s);
  if (auto e = kl_spectrum_save(spectrum.p, output.c_str())) return fail(e);
  std::printf("spectrum: n = %d, labels per level", kl_spectrum_n(spectrum.p));
  for (int q = 0; q < kl_spectrum_n(spectrum.p); ++q)
    std::printf(" %zu", kl_spectrum_label_count(spectrum.p, q));
  std::printf(", written to %s\n", output.c_str());
  return kOk;
}

int cmd_spectrum_validate(const std::string& path) {
  int pass = 0;
  char* json = nullptr;
  if (auto s = kl_labels_validate_file(path.c_str(), &pass, &json)) return fail(s);
  std::printf("%s\n", json);
  kl_string_free(json);
  return pass ? kOk : kRejected;
}

int cmd_mesh_build(const std::string& domain_path, const std::vector<double>& disc, double h,
                   const std::string& output) {
  Domain domain;
  kl_status s = domain_path.empty() ? kl_domain_disc(disc[0], disc[1], disc[2], 0.0, domain.out())
                                    : kl_domain_load(domain_path.c_str(), domain.out());
  if (s != KL_OK) return fail(s);
  Mesh mesh;
  if (auto e = kl_mesh_build(domain.p, h, mesh.out())) return fail(e);
  if (auto e = kl_mesh_write(mesh.p, output.c_str())) return fail(e);
  std::printf("mesh: %d nodes, %d triangles, h = %.4f, written to %s\n", kl_mesh_num_nodes(mesh.p),
              kl_mesh_num_triangles(mesh.p), kl_mesh_h(mesh.p), output.c_str());
  return kOk;
}

int cmd_form_random(const std::string& config_path, int degree, uint64_t seed, bool zero, const std::string& output) {
  Config config;
  if (auto s = load_config(config_path, config)) return fail(s);
  Context ctx;
  if (auto s = kl_config_context(config.p, ctx.out())) return fail(s);
  Form form;
  const int q = degree >= 0 ? degree : kl_config_degree(config.p);
  if (auto s = zero ? kl_form_zero(ctx.p, q, form.out()) : kl_form_random(ctx.p, q, seed, form.out())) return fail(s);
  if (auto s = kl_form_save(form.p, output.c_str())) return fail(s);
  double norm = 0.0;
  kl_form_norm(form.p, &norm);
  std::printf("form: degree %d, norm %.6g, written to %s\n", kl_form_degree(form.p), norm, output.c_str());
  return kOk;
}

// Applies dbar, box or 1 + box to a stored form.
int cmd_form_apply(const std::string& config_path, const std::string& op, const std::string& input,
                   const std::string& output) {
  Config config;
  if (auto s = load_config(config_path, config)) return fail(s);
  Context ctx;
  if (auto s = kl_config_context(config.p, ctx.out())) return fail(s);
  Form in, out;
  if (auto s = kl_form_load(ctx.p, input.c_str(), in.out())) return fail(s);
  kl_status s = KL_OK;
  if (op == "dbar") {
    s = kl_form_dbar(in.p, out.out());
  } else if (op == "box" || op == "box-plus-one") {
    s = kl_form_box(in.p, out.out());
    if (s == KL_OK && op == "box-plus-one") s = kl_form_axpy(out.p, 1.0, 0.0, in.p);
  } else {
    std::fprintf(stderr, "kohnlab: config error: unknown operator '%s' (dbar | box | box-plus-one)\n", op.c_str());
    return kConfig;
  }
  if (s != KL_OK) return fail(s);
  if (auto e = kl_form_save(out.p, output.c_str())) return fail(e);
  std::printf("form: %s applied, degree %d, written to %s\n", op.c_str(), kl_form_degree(out.p), output.c_str());
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kohnlab: reduced dbar-Neumann solvers and verification experiments"};
  app.require_subcommand(1);
  int code = kOk;

  std::string config, input, output;

  auto* box = app.add_subcommand("solve-box", "Solve (1 + box) u = f or the kernel-orthogonal box problem");
  box->add_option("-c,--config", config, "run config (JSON)")->required()->check(CLI::ExistingFile);
  box->add_option("-i,--input", input, "input form directory (overrides config)");
  box->add_option("-o,--output", output, "output directory (overrides config)");
  box->callback([&] { code = cmd_solve_box(config, input, output); });

  auto* dbar = app.add_subcommand("solve-dbar", "Solve dbar phi = s for closed, kernel-orthogonal s");
  dbar->add_option("-c,--config", config, "run config (JSON)")->required()->check(CLI::ExistingFile);
  dbar->add_option("-i,--input", input, "input form directory (overrides config)");
  dbar->add_option("-o,--output", output, "output directory (overrides config)");
  dbar->callback([&] { code = cmd_solve_dbar(config, input, output); });

  std::string name;
  auto* exp = app.add_subcommand("experiment", "Run a verification experiment and write its report");
  exp->add_option("name", name, "noncompact | negreg | disc | hypo | sweep | converge | all")->required();
  exp->add_option("-c,--config", config, "run config (JSON); defaults apply without one")->check(CLI::ExistingFile);
  exp->add_option("-o,--output", output, "report root directory (overrides config)");
  exp->callback([&] { code = cmd_experiment(config, name, output); });

  auto* spec = app.add_subcommand("spectrum", "Synthesize or validate spectral data");
  spec->require_subcommand(1);
  int n = 4, stub_cap = -1;
  std::vector<int> dims{2, 3, 3, 2}, ranks;
  std::vector<double> lambdas{0.0};
  uint64_t seed = 1;
  double nu = 0.0;
  auto* synth = spec->add_subcommand("synth", "Random cochain complex, or the sphere stub with --stub-cap");
  synth->add_option("-n", n, "CR dimension parameter (manifold dimension 2n - 1)");
  synth->add_option("--dims", dims, "cochain dimensions per level")->delimiter(',');
  synth->add_option("--lambdas", lambdas, "lambda values, one block each")->delimiter(',');
  synth->add_option("--ranks", ranks, "rank of each differential")->delimiter(',');
  synth->add_option("--seed", seed, "random seed");
  synth->add_option("--nu", nu, "weight exponent");
  synth->add_option("--stub-cap", stub_cap, "emit the sphere stub with |lambda| <= cap instead");
  synth->add_option("-o,--output", output, "spectrum file (JSON)")->required();
  synth->callback([&] { code = cmd_spectrum_synth(n, dims, lambdas, ranks, seed, nu, stub_cap, output); });
  std::string file;
  auto* validate = spec->add_subcommand("validate", "Check the structural constraints of a spectrum or label file");
  validate->add_option("file", file, "spectrum or label file (JSON)")->required()->check(CLI::ExistingFile);
  validate->callback([&] { code = cmd_spectrum_validate(file); });

  auto* mesh = app.add_subcommand("mesh", "Mesh operations");
  mesh->require_subcommand(1);
  std::string domain;
  std::vector<double> disc{0.0, 2.0, 1.0};
  double h = 0.1;
  auto* build = mesh->add_subcommand("build", "Triangulate a domain and write nodes/triangles CSV");
  build->add_option("-d,--domain", domain, "domain file (JSON)")->check(CLI::ExistingFile);
  build->add_option("--disc", disc, "disc center t, center s, radius when no domain file is given")
      ->delimiter(',')
      ->expected(3);
  build->add_option("--size", h, "target mesh size h");
  build->add_option("-o,--output", output, "output directory")->required();
  build->callback([&] { code = cmd_mesh_build(domain, disc, h, output); });

  auto* form = app.add_subcommand("form", "Form fixtures");
  form->require_subcommand(1);
  auto* rnd = form->add_subcommand("random", "Seeded random form of the configured degree");
  rnd->add_option("-c,--config", config, "run config (JSON)")->required()->check(CLI::ExistingFile);
  int degree = -1;
  rnd->add_option("--degree", degree, "form degree (defaults to the config's q)");
  rnd->add_option("--seed", seed, "random seed");
  bool zero = false;
  rnd->add_flag("--zero", zero, "write the zero form instead");
  rnd->add_option("-o,--output", output, "output form directory")->required();
  rnd->callback([&] { code = cmd_form_random(config, degree, seed, zero, output); });
  std::string op;
  auto* apply = form->add_subcommand("apply", "Apply dbar, box or box-plus-one to a stored form");
  apply->add_option("-c,--config", config, "run config (JSON)")->required()->check(CLI::ExistingFile);
  apply->add_option("--op", op, "dbar | box | box-plus-one")->required();
  apply->add_option("-i,--input", input, "input form directory")->required();
  apply->add_option("-o,--output", output, "output form directory")->required();
  apply->callback([&] { code = cmd_form_apply(config, op, input, output); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }
  return code;
}
