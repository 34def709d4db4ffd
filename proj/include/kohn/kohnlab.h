#ifndef KOHNLAB_H
#define KOHNLAB_H

/* C interface of the kohnlab shared library. Objects are opaque handles
 * released with the matching kl_*_free. Every fallible call returns a
 * kl_status; the message of the last failure on the calling thread is
 * available from kl_last_error(). Strings returned through char** are
 * released with kl_string_free. */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  define KL_API __declspec(dllexport)
#elif defined(__GNUC__)
#  define KL_API __attribute__((visibility("default")))
#else
#  define KL_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum kl_status {
  KL_OK = 0,
  KL_ERR_USAGE = 1,      /* inconsistent arguments */
  KL_ERR_CONFIG = 2,     /* invalid configuration or hypothesis violation */
  KL_ERR_NUMERICAL = 3,  /* solve diverged or stagnated */
  KL_ERR_REJECTED = 4,   /* input failed a precondition check */
  KL_ERR_DOMAIN = 7,     /* geometry or meshing failure */
  KL_ERR_CAPABILITY = 8, /* beyond what the discretization represents */
  KL_ERR_GENERATION = 9, /* synthetic spectrum constraints not met */
  KL_ERR_IO = 10,        /* file system failure */
  KL_ERR_INTERNAL = 11
} kl_status;

typedef enum kl_verdict { KL_REPRODUCED = 0, KL_VIOLATED = 1, KL_INCONCLUSIVE = 2 } kl_verdict;
typedef enum kl_box_mode { KL_BOX_PLUS_ONE = 0, KL_BOX_KERNEL_ORTHOGONAL = 1 } kl_box_mode;
typedef enum kl_kernel_mode { KL_KERNEL_DISCRETE = 0, KL_KERNEL_CAPPED = 1 } kl_kernel_mode;

typedef struct kl_config kl_config;
typedef struct kl_domain kl_domain;
typedef struct kl_spectrum kl_spectrum;
typedef struct kl_mesh kl_mesh;
typedef struct kl_context kl_context;
typedef struct kl_form kl_form;
typedef struct kl_report kl_report;

typedef struct kl_box_options {
  kl_box_mode mode;
  kl_kernel_mode kernel;
  int degree_cap;
} kl_box_options;

typedef struct kl_dbar_options {
  double precondition_tol;
  double residual_tol;
} kl_dbar_options;

typedef struct kl_dbar_diagnostics {
  double closedness;       /* |dbar s| / |s| */
  double kernel_component; /* |P_ker s| / |s| */
  double residual;         /* |dbar phi - s| / |s| */
  double stability;        /* |phi| / |s| */
} kl_dbar_diagnostics;

typedef struct kl_check {
  const char* name;
  double value;
  const char* relation;
  double threshold;
  int is_property; /* 0 for stability checks */
  int pass;
} kl_check;

KL_API const char* kl_version(void);
KL_API const char* kl_last_error(void);
KL_API const char* kl_status_name(kl_status status);
KL_API void kl_string_free(char* s);
KL_API void kl_box_options_default(kl_box_options* options);
KL_API void kl_dbar_options_default(kl_dbar_options* options);

/* Run configuration (JSON). Loading enforces 1 <= q <= n-2 and n >= 3. */
KL_API kl_status kl_config_load(const char* path, kl_config** out);
KL_API kl_status kl_config_parse(const char* json_text, const char* base_dir, kl_config** out);
KL_API void kl_config_free(kl_config* config);
KL_API int kl_config_degree(const kl_config* config);
KL_API int kl_config_threads(const kl_config* config);
KL_API uint64_t kl_config_seed(const kl_config* config);
KL_API const char* kl_config_input(const kl_config* config);
KL_API const char* kl_config_output(const kl_config* config);
KL_API void kl_config_box_options(const kl_config* config, kl_box_options* out);
KL_API void kl_config_dbar_options(const kl_config* config, kl_dbar_options* out);
/* Spectrum, domain and mesh (at the configured h) of a configuration. */
KL_API kl_status kl_config_context(const kl_config* config, kl_context** out);

/* File-level commands. Outputs go below output_dir. */
KL_API kl_status kl_solve_box_files(const kl_config* config, const char* input_dir, const char* output_dir,
                                    double* residual);
KL_API kl_status kl_solve_dbar_files(const kl_config* config, const char* input_dir, const char* output_dir,
                                     kl_dbar_diagnostics* diagnostics);

/* Experiments: noncompact, negreg, disc, hypo, sweep, converge. */
KL_API size_t kl_experiment_count(void);
KL_API const char* kl_experiment_name(size_t index);
KL_API kl_status kl_experiment_run(const kl_config* config, const char* name, kl_report** out);
KL_API kl_verdict kl_report_verdict(const kl_report* report);
KL_API const char* kl_verdict_name(kl_verdict verdict);
KL_API size_t kl_report_check_count(const kl_report* report);
KL_API kl_status kl_report_check(const kl_report* report, size_t index, kl_check* out);
KL_API kl_status kl_report_json(const kl_report* report, char** out);
/* Writes report.json, table CSVs and Vega-Lite specs into dir, atomically. */
KL_API kl_status kl_report_write(const kl_report* report, const char* dir);
KL_API void kl_report_free(kl_report* report);

/* Domains. */
KL_API kl_status kl_domain_load(const char* path, kl_domain** out);
KL_API kl_status kl_domain_disc(double center_t, double center_s, double radius, double nu, kl_domain** out);
KL_API void kl_domain_free(kl_domain* domain);

/* Spectra. ranks may be NULL. */
KL_API kl_status kl_spectrum_synth(int n, const int* dims, size_t num_dims, const double* lambdas, size_t num_lambdas,
                                   uint64_t seed, double nu, const int* ranks, size_t num_ranks, kl_spectrum** out);
KL_API kl_status kl_spectrum_stub(int n, int lambda_cap, double nu, kl_spectrum** out);
KL_API kl_status kl_spectrum_load(const char* path, kl_spectrum** out);
KL_API kl_status kl_spectrum_save(const kl_spectrum* spectrum, const char* path);
KL_API int kl_spectrum_n(const kl_spectrum* spectrum);
KL_API size_t kl_spectrum_label_count(const kl_spectrum* spectrum, int q);
KL_API int kl_spectrum_cohomology_dim(const kl_spectrum* spectrum, int q);
/* Validation of a spectrum or label file; *pass is 0 or 1, *report_json optional. */
KL_API kl_status kl_spectrum_validate(const kl_spectrum* spectrum, int* pass, char** report_json);
KL_API kl_status kl_labels_validate_file(const char* path, int* pass, char** report_json);
KL_API void kl_spectrum_free(kl_spectrum* spectrum);

/* Meshes and their finite element spaces. */
KL_API kl_status kl_mesh_build(const kl_domain* domain, double h, kl_mesh** out);
KL_API kl_status kl_mesh_write(const kl_mesh* mesh, const char* dir);
KL_API int kl_mesh_num_nodes(const kl_mesh* mesh);
KL_API int kl_mesh_num_triangles(const kl_mesh* mesh);
KL_API double kl_mesh_h(const kl_mesh* mesh);
KL_API void kl_mesh_free(kl_mesh* mesh);

KL_API kl_status kl_context_create(const kl_spectrum* spectrum, const kl_domain* domain, const kl_mesh* mesh,
                                   int threads, kl_context** out);
KL_API kl_status kl_box_kernel_dim(const kl_context* context, int q, int degree_cap, size_t* out);
KL_API void kl_context_free(kl_context* context);

/* Forms of degree q: per-label coefficient fields. */
KL_API kl_status kl_form_zero(const kl_context* context, int q, kl_form** out);
KL_API kl_status kl_form_random(const kl_context* context, int q, uint64_t seed, kl_form** out);
KL_API kl_status kl_form_load(const kl_context* context, const char* dir, kl_form** out);
KL_API kl_status kl_form_save(const kl_form* form, const char* dir);
KL_API int kl_form_degree(const kl_form* form);
KL_API kl_status kl_form_norm(const kl_form* form, double* out);
KL_API kl_status kl_form_inner(const kl_form* a, const kl_form* b, double* re, double* im);
/* y += (re + i im) x */
KL_API kl_status kl_form_axpy(kl_form* y, double re, double im, const kl_form* x);
KL_API kl_status kl_form_dbar(const kl_form* form, kl_form** out);
KL_API kl_status kl_form_dbar_star(const kl_form* form, kl_form** out);
KL_API kl_status kl_form_box(const kl_form* form, kl_form** out);
KL_API kl_status kl_form_solve_box(const kl_form* f, const kl_box_options* options, kl_form** u, double* residual);
KL_API kl_status kl_form_solve_dbar(const kl_form* varsigma, const kl_dbar_options* options, kl_form** phi,
                                    kl_dbar_diagnostics* diagnostics);
KL_API void kl_form_free(kl_form* form);

#ifdef __cplusplus
}
#endif

#endif /* KOHNLAB_H */
