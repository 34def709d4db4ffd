/* C interface checks, compiled as C. */

#include <math.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#include "kohn/kohnlab.h"

static int failures = 0;

#define EXPECT(cond)                                                   \
  do {                                                                 \
    if (!(cond)) {                                                     \
      fprintf(stderr, "%s:%d: expected %s\n", __FILE__, __LINE__, #cond); \
      ++failures;                                                      \
    }                                                                  \
  } while (0)

static void test_status_names(void) {
  EXPECT(strcmp(kl_status_name(KL_OK), "ok") == 0);
  EXPECT(strlen(kl_status_name(KL_ERR_REJECTED)) > 0);
  EXPECT(strlen(kl_version()) > 0);
  EXPECT(kl_experiment_count() == 6);
  EXPECT(strcmp(kl_experiment_name(0), "noncompact") == 0);
  EXPECT(kl_experiment_name(99) == NULL);
}

static void test_null_arguments(void) {
  kl_domain* d = NULL;
  EXPECT(kl_domain_load(NULL, &d) == KL_ERR_USAGE);
  EXPECT(kl_mesh_build(NULL, 0.1, NULL) == KL_ERR_USAGE);
  EXPECT(strlen(kl_last_error()) > 0);
  kl_form_free(NULL);
  kl_spectrum_free(NULL);
}

static void test_config(void) {
  kl_config* c = NULL;
  EXPECT(kl_config_parse("{\"q\": 0}", ".", &c) == KL_ERR_CONFIG);
  EXPECT(c == NULL);
  EXPECT(strstr(kl_last_error(), "1 <= q <= n - 2") != NULL);
  EXPECT(kl_config_parse("{not json", ".", &c) == KL_ERR_CONFIG);
  EXPECT(kl_config_parse("{\"q\": 1, \"n\": 4, \"seed\": 7, \"mesh\": {\"h\": 0.2}}", ".", &c) == KL_OK);
  EXPECT(kl_config_degree(c) == 1);
  EXPECT(kl_config_seed(c) == 7);
  kl_box_options box;
  kl_config_box_options(c, &box);
  EXPECT(box.mode == KL_BOX_PLUS_ONE);
  kl_report* r = NULL;
  EXPECT(kl_experiment_run(c, "bogus", &r) == KL_ERR_CONFIG);
  EXPECT(kl_experiment_run(c, "disc", &r) == KL_OK);
  EXPECT(kl_report_verdict(r) == KL_REPRODUCED);
  EXPECT(strcmp(kl_verdict_name(kl_report_verdict(r)), "reproduced") == 0);
  EXPECT(kl_report_check_count(r) > 0);
  kl_check check;
  EXPECT(kl_report_check(r, 0, &check) == KL_OK);
  EXPECT(check.pass == 1);
  EXPECT(kl_report_check(r, 1000, &check) == KL_ERR_USAGE);
  char* json = NULL;
  EXPECT(kl_report_json(r, &json) == KL_OK);
  EXPECT(json != NULL && strstr(json, "\"verdict\"") != NULL);
  kl_string_free(json);
  kl_report_free(r);
  kl_config_free(c);
}

static void test_spectra(void) {
  kl_spectrum* s = NULL;
  EXPECT(kl_spectrum_stub(4, 2, 0.0, &s) == KL_OK);
  EXPECT(kl_spectrum_n(s) == 4);
  EXPECT(kl_spectrum_cohomology_dim(s, 1) == 0);
  int pass = 0;
  EXPECT(kl_spectrum_validate(s, &pass, NULL) == KL_OK);
  EXPECT(pass == 1);
  kl_spectrum_free(s);

  const int dims[] = {2, 3, 3, 2};
  const double lambdas[] = {-1.0, 0.0, 1.0};
  EXPECT(kl_spectrum_synth(4, dims, 4, lambdas, 3, 5, 0.0, NULL, 0, &s) == KL_OK);
  EXPECT(kl_spectrum_label_count(s, 1) == 9);
  kl_spectrum_free(s);
  EXPECT(kl_spectrum_synth(2, dims, 4, lambdas, 3, 5, 0.0, NULL, 0, &s) != KL_OK);
}

static void test_forms(void) {
  const int dims[] = {2, 3, 3, 2};
  const double zero[] = {0.0};
  const int ranks[] = {1, 1, 1};
  kl_spectrum* s = NULL;
  kl_domain* d = NULL;
  kl_mesh* m = NULL;
  kl_context* ctx = NULL;
  EXPECT(kl_spectrum_synth(4, dims, 4, zero, 1, 11, 0.0, ranks, 3, &s) == KL_OK);
  EXPECT(kl_domain_disc(0.0, 2.0, 1.0, 0.0, &d) == KL_OK);
  EXPECT(kl_domain_disc(0.0, -2.0, 1.0, 0.0, &d) != KL_OK);
  EXPECT(kl_mesh_build(d, 0.2, &m) == KL_OK);
  EXPECT(kl_mesh_num_nodes(m) > 0);
  EXPECT(kl_mesh_h(m) <= 0.2);
  EXPECT(kl_context_create(s, d, m, 2, &ctx) == KL_OK);

  kl_form* phi = NULL;
  kl_form* f = NULL;
  kl_form* u = NULL;
  EXPECT(kl_form_random(ctx, 1, 3, &phi) == KL_OK);
  EXPECT(kl_form_degree(phi) == 1);
  EXPECT(kl_form_box(phi, &f) == KL_OK);
  EXPECT(kl_form_axpy(f, 1.0, 0.0, phi) == KL_OK);
  kl_box_options opt;
  kl_box_options_default(&opt);
  double residual = 1.0;
  EXPECT(kl_form_solve_box(f, &opt, &u, &residual) == KL_OK);
  EXPECT(residual < 1e-10);
  EXPECT(kl_form_axpy(u, -1.0, 0.0, phi) == KL_OK);
  double err = 1.0, norm = 0.0;
  EXPECT(kl_form_norm(u, &err) == KL_OK);
  EXPECT(kl_form_norm(phi, &norm) == KL_OK);
  EXPECT(err < 1e-8 * norm);

  double re = 0.0, im = 0.0;
  EXPECT(kl_form_inner(phi, phi, &re, &im) == KL_OK);
  EXPECT(fabs(re - norm * norm) < 1e-10 * norm * norm);

  kl_form* g = NULL;
  EXPECT(kl_form_random(ctx, 2, 4, &g) == KL_OK);
  EXPECT(kl_form_axpy(phi, 1.0, 0.0, g) == KL_ERR_USAGE);

  kl_form* sol = NULL;
  kl_dbar_options dopt;
  kl_dbar_options_default(&dopt);
  kl_dbar_diagnostics diag;
  EXPECT(kl_form_solve_dbar(g, &dopt, &sol, &diag) == KL_ERR_REJECTED);
  EXPECT(sol == NULL);
  EXPECT(diag.closedness > dopt.precondition_tol);

  kl_form* dphi = NULL;
  kl_form* dd = NULL;
  EXPECT(kl_form_dbar(phi, &dphi) == KL_OK);
  EXPECT(kl_form_dbar(dphi, &dd) == KL_OK);
  double ddn = 1.0;
  EXPECT(kl_form_norm(dd, &ddn) == KL_OK);
  EXPECT(ddn < 1e-10 * norm);

  size_t kdim = 99;
  EXPECT(kl_box_kernel_dim(ctx, 1, 2, &kdim) == KL_OK);

  kl_form* z = NULL;
  EXPECT(kl_form_zero(ctx, 1, &z) == KL_OK);
  kl_form* zu = NULL;
  opt.mode = KL_BOX_KERNEL_ORTHOGONAL;
  EXPECT(kl_form_solve_box(z, &opt, &zu, &residual) == KL_OK);
  double zn = 1.0;
  EXPECT(kl_form_norm(zu, &zn) == KL_OK);
  EXPECT(zn == 0.0);

  kl_form_free(zu);
  kl_form_free(z);
  kl_form_free(dd);
  kl_form_free(dphi);
  kl_form_free(g);
  kl_form_free(u);
  kl_form_free(f);
  kl_form_free(phi);
  kl_context_free(ctx);
  kl_mesh_free(m);
  kl_domain_free(d);
  kl_spectrum_free(s);
}

int main(void) {
  test_status_names();
  test_null_arguments();
  test_config();
  test_spectra();
  test_forms();
  if (failures) {
    fprintf(stderr, "%d failure(s)\n", failures);
    return 1;
  }
  printf("capi: all checks passed\n");
  return 0;
}
