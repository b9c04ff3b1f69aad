/* C interface of the funnelsim shared library. All objects are opaque and
   owned by the caller once returned; release them with the matching _free.
   Every call returning fs_status leaves details in fs_last_error_* on failure
   (thread-local, overwritten by the next failing call on the same thread). */
#ifndef FUNNELSIM_H
#define FUNNELSIM_H

#include <stddef.h>
#include <stdint.h>

#if defined(FUNNELSIM_BUILDING_LIBRARY)
#define FS_API __attribute__((visibility("default")))
#else
#define FS_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum fs_status {
  FS_OK = 0,
  FS_ERR_INVALID_ARGUMENT = 1,
  FS_ERR_CONFIG = 2,
  FS_ERR_TRACE_FORMAT = 3,
  FS_ERR_IO = 4,
  FS_ERR_SYSTEM_CLASS = 5, /* plant outside the admissible class */
  FS_ERR_SYNTHESIS = 6,    /* design steps infeasible */
  FS_ERR_INTEGRATION = 7,  /* step underflow or funnel violation */
  FS_ERR_INTERNAL = 8
} fs_status;

typedef struct fs_scenario fs_scenario;
typedef struct fs_trace fs_trace;
typedef struct fs_report fs_report;

typedef struct fs_sample {
  double t;
  int a;
  double tau;
  double phi;
  double e_norm;
  double u_norm;
  double eta_norm;
} fs_sample;

FS_API const char* fs_version(void);

/* Name of the failing error code (e.g. "InvalidQ") and its message; "" when none. */
FS_API const char* fs_last_error_code(void);
FS_API const char* fs_last_error_message(void);

/* 0 error .. 3 debug; the default comes from FUNNELSIM_LOG. */
FS_API void fs_set_log_level(int level);

/* Strings returned through char** are allocated by the library. */
FS_API void fs_string_free(char* s);

/* Scenario: parsed config, normal form, design and availability schedule. */
FS_API fs_status fs_scenario_from_file(const char* path, fs_scenario** out);
FS_API fs_status fs_scenario_from_json(const char* json_text, fs_scenario** out);
FS_API fs_status fs_scenario_from_preset(const char* name, fs_scenario** out);
FS_API void fs_scenario_free(fs_scenario* sc);

/* Comma-separated preset names. */
FS_API const char* fs_preset_names(void);

FS_API const char* fs_scenario_name(const fs_scenario* sc);
FS_API const char* fs_scenario_trace_file(const fs_scenario* sc);
FS_API const char* fs_scenario_report_file(const fs_scenario* sc);
/* 1 for a synthesized design, 0 for a user-fixed funnel. */
FS_API int fs_scenario_is_synthesized(const fs_scenario* sc);
/* 1 when the plant is the mass-on-car model with the reference parameters. */
FS_API int fs_scenario_is_reference_plant(const fs_scenario* sc);

/* Named design quantity: r, m, M, mu, beta, q, A_r, Delta, delta, delta_min,
   eta_star, phi0_min, phi0_max, phi0_0, a, b, c, rho, chi, c_r, U_max, eta_bar, t_end. */
FS_API fs_status fs_scenario_get(const fs_scenario* sc, const char* key, double* value);

FS_API fs_status fs_scenario_design_report(const fs_scenario* sc, char** text);
/* Reported versus recomputed constants; needs a synthesized design. */
FS_API fs_status fs_scenario_discrepancy_report(const fs_scenario* sc, char** text);

FS_API fs_status fs_simulate(const fs_scenario* sc, fs_trace** out);

FS_API fs_status fs_trace_read(const char* path, fs_trace** out);
FS_API fs_status fs_trace_write(const fs_trace* trace, const char* path);
FS_API void fs_trace_free(fs_trace* trace);
FS_API size_t fs_trace_size(const fs_trace* trace);
FS_API fs_status fs_trace_sample(const fs_trace* trace, size_t index, fs_sample* out);
/* r, m and the internal dimension k. */
FS_API void fs_trace_dims(const fs_trace* trace, int* r, int* m, int* k);
/* Writes <dir>/<stem>_error.dat, _input.dat, _internal.dat. */
FS_API fs_status fs_trace_write_plot_data(const fs_trace* trace, const char* dir, const char* stem);

/* Trace checks for the scenario's design. */
FS_API fs_status fs_verify(const fs_scenario* sc, const fs_trace* trace, fs_report** out);
/* Seeded property runs: cascade estimate (r = 1..3, q in {0.5, 0.9, 0.95}),
   cascade equivalence (r = 1..3) and, for synthesized designs, the design inequalities. */
FS_API fs_status fs_verify_properties(const fs_scenario* sc, uint64_t seed, int trials, fs_report** out);
FS_API void fs_report_free(fs_report* report);
FS_API int fs_report_all_pass(const fs_report* report);
FS_API size_t fs_report_size(const fs_report* report);
/* name is valid until the report is freed. */
FS_API fs_status fs_report_check(const fs_report* report, size_t index, const char** name, int* pass,
                                 double* margin, double* at);
FS_API fs_status fs_report_text(const fs_report* report, char** text);

#ifdef __cplusplus
}
#endif

#endif
