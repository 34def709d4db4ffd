#include "kohn/kohnlab.h"

#include <cstring>
#include <filesystem>
#include <new>
#include <string>

#include "kohn/forms.hpp"
#include "kohn/io.hpp"

using namespace kohn;
namespace fs = std::filesystem;

struct kl_config {
  io::RunConfig c;
  std::string input;
  std::string output;
};
struct kl_domain {
  geo::DomainSpec d;
};
struct kl_spectrum {
  std::shared_ptr<const spectrum::SpectralComplex> s;
};
struct kl_mesh {
  fem::SpacePtr space;
};
struct kl_context {
  forms::ContextPtr ctx;
  std::shared_ptr<const forms::TransferBlocks> blocks;
};
struct kl_form {
  forms::FourierForm f;
  std::shared_ptr<const forms::TransferBlocks> blocks;
};
struct kl_report {
  experiments::ExperimentReport r;
};

namespace {

thread_local std::string last_error;

template <class Fn>
kl_status guard(Fn&& fn) {
  try {
    fn();
    last_error.clear();
    return KL_OK;
  } catch (const UsageError& e) {
    last_error = e.what();
    return KL_ERR_USAGE;
  } catch (const ConfigError& e) {
    last_error = e.what();
    return KL_ERR_CONFIG;
  } catch (const NumericalError& e) {
    last_error = e.what();
    return KL_ERR_NUMERICAL;
  } catch (const RejectedInput& e) {
    last_error = e.what();
    return KL_ERR_REJECTED;
  } catch (const DomainError& e) {
    last_error = e.what();
    return KL_ERR_DOMAIN;
  } catch (const CapabilityError& e) {
    last_error = e.what();
    return KL_ERR_CAPABILITY;
  } catch (const GenerationError& e) {
    last_error = e.what();
    return KL_ERR_GENERATION;
  } catch (const fs::filesystem_error& e) {
    last_error = e.what();
    return KL_ERR_IO;
  } catch (const nlohmann::json::exception& e) {
    last_error = e.what();
    return KL_ERR_CONFIG;
  } catch (const std::exception& e) {
    last_error = e.what();
    return KL_ERR_INTERNAL;
  } catch (...) {
    last_error = "unknown error";
    return KL_ERR_INTERNAL;
  }
}

kl_status null_arg(const char* what) {
  last_error = std::string("null argument: ") + what;
  return KL_ERR_USAGE;
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

forms::BoxSolveOptions to_box(const kl_box_options* o) {
  forms::BoxSolveOptions b;
  if (!o) return b;
  b.mode = o->mode == KL_BOX_KERNEL_ORTHOGONAL ? forms::BoxMode::kernel_orthogonal : forms::BoxMode::plus_one;
  b.kernel = o->kernel == KL_KERNEL_CAPPED ? solver::KernelMode::capped : solver::KernelMode::discrete;
  b.degree_cap = o->degree_cap;
  return b;
}

forms::DbarOptions to_dbar(const kl_dbar_options* o) {
  forms::DbarOptions d;
  if (!o) return d;
  d.precondition_tol = o->precondition_tol;
  d.residual_tol = o->residual_tol;
  return d;
}

kl_context* wrap(forms::ContextPtr ctx) {
  auto blocks = std::make_shared<const forms::TransferBlocks>(forms::TransferBlocks::from(ctx->spectrum()));
  return new kl_context{std::move(ctx), std::move(blocks)};
}

// Rejection diagnostics are recomputed so callers see the numbers.
void fill_precondition(const forms::FourierForm& s, const forms::TransferBlocks& blocks, kl_dbar_diagnostics* d) {
  const double sn = s.norm();
  if (!d || sn == 0.0) return;
  d->closedness = forms::apply_dbar(s, blocks).norm() / sn;
  d->kernel_component = forms::kernel_part(s).norm() / sn;
}

}  // namespace

extern "C" {

const char* kl_version(void) { return "1.0.0"; }
const char* kl_last_error(void) { return last_error.c_str(); }

const char* kl_status_name(kl_status status) {
  switch (status) {
    case KL_OK: return "ok";
    case KL_ERR_USAGE: return "usage";
    case KL_ERR_CONFIG: return "config";
    case KL_ERR_NUMERICAL: return "numerical";
    case KL_ERR_REJECTED: return "rejected";
    case KL_ERR_DOMAIN: return "domain";
    case KL_ERR_CAPABILITY: return "capability";
    case KL_ERR_GENERATION: return "generation";
    case KL_ERR_IO: return "io";
    case KL_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

void kl_string_free(char* s) { std::free(s); }

void kl_box_options_default(kl_box_options* options) {
  if (options) *options = {KL_BOX_PLUS_ONE, KL_KERNEL_DISCRETE, forms::BoxSolveOptions{}.degree_cap};
}

void kl_dbar_options_default(kl_dbar_options* options) {
  const forms::DbarOptions d;
  if (options) *options = {d.precondition_tol, d.residual_tol};
}

// ---------------------------------------------------------------- config

kl_status kl_config_load(const char* path, kl_config** out) {
  if (!path || !out) return null_arg("path/out");
  return guard([&] {
    auto c = io::load_config(path);
    *out = new kl_config{c, c.input.string(), c.output.string()};
  });
}

kl_status kl_config_parse(const char* json_text, const char* base_dir, kl_config** out) {
  if (!json_text || !out) return null_arg("json_text/out");
  return guard([&] {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
      throw ConfigError(std::string("config: ") + e.what());
    }
    auto c = io::config_from_json(j, base_dir ? base_dir : ".");
    *out = new kl_config{c, c.input.string(), c.output.string()};
  });
}

void kl_config_free(kl_config* config) { delete config; }
int kl_config_degree(const kl_config* config) { return config ? config->c.q : 0; }
int kl_config_threads(const kl_config* config) { return config ? config->c.threads : 1; }
uint64_t kl_config_seed(const kl_config* config) { return config ? config->c.seed : 0; }
const char* kl_config_input(const kl_config* config) { return config ? config->input.c_str() : ""; }
const char* kl_config_output(const kl_config* config) { return config ? config->output.c_str() : ""; }

void kl_config_box_options(const kl_config* config, kl_box_options* out) {
  if (!config || !out) return;
  const auto& b = config->c.box;
  *out = {b.mode == forms::BoxMode::kernel_orthogonal ? KL_BOX_KERNEL_ORTHOGONAL : KL_BOX_PLUS_ONE,
          b.kernel == solver::KernelMode::capped ? KL_KERNEL_CAPPED : KL_KERNEL_DISCRETE, b.degree_cap};
}

void kl_config_dbar_options(const kl_config* config, kl_dbar_options* out) {
  if (config && out) *out = {config->c.dbar.precondition_tol, config->c.dbar.residual_tol};
}

kl_status kl_config_context(const kl_config* config, kl_context** out) {
  if (!config || !out) return null_arg("config/out");
  return guard([&] { *out = wrap(io::make_context(config->c)); });
}

// ---------------------------------------------------------------- file commands

kl_status kl_solve_box_files(const kl_config* config, const char* input_dir, const char* output_dir, double* residual) {
  if (!config || !input_dir || !output_dir) return null_arg("config/input_dir/output_dir");
  return guard([&] {
    const auto& c = config->c;
    auto ctx = io::make_context(c);
    const auto blocks = forms::TransferBlocks::from(ctx->spectrum());
    const auto f = io::read_form(ctx, input_dir);
    if (f.q != c.q)
      throw ConfigError("input form has degree " + std::to_string(f.q) + " but the config sets q = " + std::to_string(c.q));
    const auto sol = forms::solve_box(f, blocks, c.box);
    const fs::path out = output_dir;
    io::write_form(sol.u, out / "solution");
    const auto table = io::slot_constants_table(sol.constants);
    io::write_text_atomic(out / "constants.csv", io::table_csv(table));
    io::write_json(out / "constants.vl.json", io::vega_lite(table, "constants.csv"));
    nlohmann::json res = {{"mode", forms::to_string(c.box.mode)},
                          {"kernel", io::to_string(c.box.kernel)},
                          {"residual", sol.residual},
                          {"residual_tol", c.box_residual_tol},
                          {"norm_f", f.norm()},
                          {"norm_u", sol.u.norm()},
                          {"norm_f_kernel", sol.f_kernel.norm()}};
    io::write_json(out / "residuals.json", res);
    if (residual) *residual = sol.residual;
    if (!(sol.residual <= c.box_residual_tol))
      throw NumericalError("box solve residual " + io::format_double(sol.residual) + " exceeds " +
                           io::format_double(c.box_residual_tol));
  });
}

kl_status kl_solve_dbar_files(const kl_config* config, const char* input_dir, const char* output_dir,
                              kl_dbar_diagnostics* diagnostics) {
  if (!config || !input_dir || !output_dir) return null_arg("config/input_dir/output_dir");
  if (diagnostics) *diagnostics = {};
  const forms::FourierForm* input = nullptr;
  std::shared_ptr<forms::TransferBlocks> blocks;
  forms::FourierForm varsigma;
  kl_status status = guard([&] {
    const auto& c = config->c;
    auto ctx = io::make_context(c);
    blocks = std::make_shared<forms::TransferBlocks>(forms::TransferBlocks::from(ctx->spectrum()));
    varsigma = io::read_form(ctx, input_dir);
    input = &varsigma;
    if (varsigma.q != c.q)
      throw ConfigError("input form has degree " + std::to_string(varsigma.q) + " but the config sets q = " +
                        std::to_string(c.q));
    const auto sol = forms::solve_dbar(varsigma, *blocks, c.dbar);
    const fs::path out = output_dir;
    io::write_form(sol.phi, out / "solution");
    nlohmann::json res = {{"closedness", sol.closedness},
                          {"kernel_component", sol.kernel_component},
                          {"residual", sol.residual},
                          {"stability", sol.stability},
                          {"precondition_tol", c.dbar.precondition_tol},
                          {"residual_tol", c.dbar.residual_tol}};
    io::write_json(out / "residuals.json", res);
    if (diagnostics) *diagnostics = {sol.closedness, sol.kernel_component, sol.residual, sol.stability};
  });
  if (status == KL_ERR_REJECTED && input) {
    const std::string message = last_error;
    guard([&] { fill_precondition(*input, *blocks, diagnostics); });
    last_error = message;
  }
  return status;
}

// ---------------------------------------------------------------- experiments

size_t kl_experiment_count(void) { return experiments::experiment_names().size(); }

const char* kl_experiment_name(size_t index) {
  const auto& names = experiments::experiment_names();
  return index < names.size() ? names[index].c_str() : nullptr;
}

kl_status kl_experiment_run(const kl_config* config, const char* name, kl_report** out) {
  if (!config || !name || !out) return null_arg("config/name/out");
  return guard([&] { *out = new kl_report{io::run_experiment(name, config->c)}; });
}

kl_verdict kl_report_verdict(const kl_report* report) {
  if (!report) return KL_INCONCLUSIVE;
  switch (report->r.verdict) {
    case experiments::Verdict::reproduced: return KL_REPRODUCED;
    case experiments::Verdict::violated: return KL_VIOLATED;
    case experiments::Verdict::inconclusive: return KL_INCONCLUSIVE;
  }
  return KL_INCONCLUSIVE;
}

const char* kl_verdict_name(kl_verdict verdict) {
  switch (verdict) {
    case KL_REPRODUCED: return "reproduced";
    case KL_VIOLATED: return "violated";
    case KL_INCONCLUSIVE: return "inconclusive";
  }
  return "unknown";
}

size_t kl_report_check_count(const kl_report* report) { return report ? report->r.checks.size() : 0; }

kl_status kl_report_check(const kl_report* report, size_t index, kl_check* out) {
  if (!report || !out) return null_arg("report/out");
  if (index >= report->r.checks.size()) {
    last_error = "check index out of range";
    return KL_ERR_USAGE;
  }
  const auto& c = report->r.checks[index];
  *out = {c.name.c_str(), c.value, c.relation.c_str(), c.threshold, c.kind == experiments::Check::Kind::property,
          c.pass};
  return KL_OK;
}

kl_status kl_report_json(const kl_report* report, char** out) {
  if (!report || !out) return null_arg("report/out");
  return guard([&] { *out = dup_string(io::report_to_json(report->r).dump(2)); });
}

kl_status kl_report_write(const kl_report* report, const char* dir) {
  if (!report || !dir) return null_arg("report/dir");
  return guard([&] { io::write_report(report->r, dir); });
}

void kl_report_free(kl_report* report) { delete report; }

// ---------------------------------------------------------------- domains, spectra, meshes

kl_status kl_domain_load(const char* path, kl_domain** out) {
  if (!path || !out) return null_arg("path/out");
  return guard([&] { *out = new kl_domain{io::domain_from_json(io::read_json(path))}; });
}

kl_status kl_domain_disc(double center_t, double center_s, double radius, double nu, kl_domain** out) {
  if (!out) return null_arg("out");
  return guard([&] { *out = new kl_domain{geo::DomainSpec::disc({center_t, center_s}, radius, nu)}; });
}

void kl_domain_free(kl_domain* domain) { delete domain; }

kl_status kl_spectrum_synth(int n, const int* dims, size_t num_dims, const double* lambdas, size_t num_lambdas,
                            uint64_t seed, double nu, const int* ranks, size_t num_ranks, kl_spectrum** out) {
  if (!dims || !lambdas || !out) return null_arg("dims/lambdas/out");
  return guard([&] {
    std::optional<std::vector<int>> r;
    if (ranks) r = std::vector<int>(ranks, ranks + num_ranks);
    *out = new kl_spectrum{std::make_shared<const spectrum::SpectralComplex>(spectrum::synth_complex(
        n, std::vector<int>(dims, dims + num_dims), std::vector<double>(lambdas, lambdas + num_lambdas), seed, nu, r))};
  });
}

kl_status kl_spectrum_stub(int n, int lambda_cap, double nu, kl_spectrum** out) {
  if (!out) return null_arg("out");
  return guard([&] {
    *out = new kl_spectrum{
        std::make_shared<const spectrum::SpectralComplex>(spectrum::sphere_stub_spectrum(n, lambda_cap, nu).complex)};
  });
}

kl_status kl_spectrum_load(const char* path, kl_spectrum** out) {
  if (!path || !out) return null_arg("path/out");
  return guard([&] {
    *out = new kl_spectrum{
        std::make_shared<const spectrum::SpectralComplex>(io::spectrum_from_json(io::read_json(path)))};
  });
}

kl_status kl_spectrum_save(const kl_spectrum* spectrum, const char* path) {
  if (!spectrum || !path) return null_arg("spectrum/path");
  return guard([&] {
    auto j = io::spectrum_to_json(*spectrum->s);
    j["labels"] = io::labels_to_json(spectrum->s->all_labels(), spectrum->s->meta())["labels"];
    io::write_json(path, j);
  });
}

int kl_spectrum_n(const kl_spectrum* spectrum) { return spectrum ? spectrum->s->n() : 0; }

size_t kl_spectrum_label_count(const kl_spectrum* spectrum, int q) {
  if (!spectrum || q < 0 || q >= spectrum->s->levels()) return 0;
  return spectrum->s->labels(q).size();
}

int kl_spectrum_cohomology_dim(const kl_spectrum* spectrum, int q) {
  return spectrum ? spectrum::kohn_rossi_dim(*spectrum->s, q) : 0;
}

kl_status kl_spectrum_validate(const kl_spectrum* spectrum, int* pass, char** report_json) {
  if (!spectrum) return null_arg("spectrum");
  return guard([&] {
    const auto report = spectrum::validate_spectrum(spectrum->s->all_labels(), spectrum->s->meta());
    if (pass) *pass = report.pass ? 1 : 0;
    if (report_json) *report_json = dup_string(io::validation_to_json(report).dump(2));
  });
}

kl_status kl_labels_validate_file(const char* path, int* pass, char** report_json) {
  if (!path) return null_arg("path");
  return guard([&] {
    const auto set = io::labels_from_json(io::read_json(path));
    const auto report = spectrum::validate_spectrum(set.labels, set.meta);
    if (pass) *pass = report.pass ? 1 : 0;
    if (report_json) *report_json = dup_string(io::validation_to_json(report).dump(2));
  });
}

void kl_spectrum_free(kl_spectrum* spectrum) { delete spectrum; }

kl_status kl_mesh_build(const kl_domain* domain, double h, kl_mesh** out) {
  if (!domain || !out) return null_arg("domain/out");
  return guard([&] { *out = new kl_mesh{fem::make_space(domain->d, h)}; });
}

kl_status kl_mesh_write(const kl_mesh* mesh, const char* dir) {
  if (!mesh || !dir) return null_arg("mesh/dir");
  return guard([&] { io::write_mesh(mesh->space->mesh(), dir); });
}

int kl_mesh_num_nodes(const kl_mesh* mesh) { return mesh ? mesh->space->mesh().num_nodes() : 0; }
int kl_mesh_num_triangles(const kl_mesh* mesh) { return mesh ? mesh->space->mesh().num_triangles() : 0; }
double kl_mesh_h(const kl_mesh* mesh) { return mesh ? mesh->space->mesh().h : 0.0; }
void kl_mesh_free(kl_mesh* mesh) { delete mesh; }

kl_status kl_context_create(const kl_spectrum* spectrum, const kl_domain* domain, const kl_mesh* mesh, int threads,
                            kl_context** out) {
  if (!spectrum || !domain || !mesh || !out) return null_arg("spectrum/domain/mesh/out");
  return guard([&] {
    if (domain->d.nu() != spectrum->s->nu()) throw UsageError("domain and spectrum use different nu");
    *out = wrap(std::make_shared<const forms::Context>(spectrum->s, domain->d, mesh->space, std::max(1, threads)));
  });
}

kl_status kl_box_kernel_dim(const kl_context* context, int q, int degree_cap, size_t* out) {
  if (!context || !out) return null_arg("context/out");
  return guard([&] { *out = forms::box_kernel_basis(context->ctx, q, degree_cap).size(); });
}

void kl_context_free(kl_context* context) { delete context; }

// ---------------------------------------------------------------- forms

kl_status kl_form_zero(const kl_context* context, int q, kl_form** out) {
  if (!context || !out) return null_arg("context/out");
  return guard([&] { *out = new kl_form{forms::FourierForm::zero(context->ctx, q), context->blocks}; });
}

kl_status kl_form_random(const kl_context* context, int q, uint64_t seed, kl_form** out) {
  if (!context || !out) return null_arg("context/out");
  return guard([&] { *out = new kl_form{forms::FourierForm::random(context->ctx, q, seed), context->blocks}; });
}

kl_status kl_form_load(const kl_context* context, const char* dir, kl_form** out) {
  if (!context || !dir || !out) return null_arg("context/dir/out");
  return guard([&] { *out = new kl_form{io::read_form(context->ctx, dir), context->blocks}; });
}

kl_status kl_form_save(const kl_form* form, const char* dir) {
  if (!form || !dir) return null_arg("form/dir");
  return guard([&] { io::write_form(form->f, dir); });
}

int kl_form_degree(const kl_form* form) { return form ? form->f.q : -1; }

kl_status kl_form_norm(const kl_form* form, double* out) {
  if (!form || !out) return null_arg("form/out");
  return guard([&] { *out = form->f.norm(); });
}

kl_status kl_form_inner(const kl_form* a, const kl_form* b, double* re, double* im) {
  if (!a || !b) return null_arg("a/b");
  return guard([&] {
    const Complex z = forms::inner_product(a->f, b->f);
    if (re) *re = z.real();
    if (im) *im = z.imag();
  });
}

kl_status kl_form_axpy(kl_form* y, double re, double im, const kl_form* x) {
  if (!y || !x) return null_arg("y/x");
  return guard([&] { y->f.axpy({re, im}, x->f); });
}

kl_status kl_form_dbar(const kl_form* form, kl_form** out) {
  if (!form || !out) return null_arg("form/out");
  return guard([&] { *out = new kl_form{forms::apply_dbar(form->f, *form->blocks), form->blocks}; });
}

kl_status kl_form_dbar_star(const kl_form* form, kl_form** out) {
  if (!form || !out) return null_arg("form/out");
  return guard([&] { *out = new kl_form{forms::apply_dbar_star(form->f, *form->blocks), form->blocks}; });
}

kl_status kl_form_box(const kl_form* form, kl_form** out) {
  if (!form || !out) return null_arg("form/out");
  return guard([&] { *out = new kl_form{forms::apply_box(form->f, *form->blocks), form->blocks}; });
}

kl_status kl_form_solve_box(const kl_form* f, const kl_box_options* options, kl_form** u, double* residual) {
  if (!f || !u) return null_arg("f/u");
  return guard([&] {
    auto sol = forms::solve_box(f->f, *f->blocks, to_box(options));
    if (residual) *residual = sol.residual;
    *u = new kl_form{std::move(sol.u), f->blocks};
  });
}

kl_status kl_form_solve_dbar(const kl_form* varsigma, const kl_dbar_options* options, kl_form** phi,
                             kl_dbar_diagnostics* diagnostics) {
  if (!varsigma || !phi) return null_arg("varsigma/phi");
  if (diagnostics) *diagnostics = {};
  kl_status status = guard([&] {
    auto sol = forms::solve_dbar(varsigma->f, *varsigma->blocks, to_dbar(options));
    if (diagnostics) *diagnostics = {sol.closedness, sol.kernel_component, sol.residual, sol.stability};
    *phi = new kl_form{std::move(sol.phi), varsigma->blocks};
  });
  if (status == KL_ERR_REJECTED) {
    const std::string message = last_error;
    guard([&] { fill_precondition(varsigma->f, *varsigma->blocks, diagnostics); });
    last_error = message;
  }
  return status;
}

void kl_form_free(kl_form* form) { delete form; }

}  // extern "C"
