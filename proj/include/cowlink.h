/* C interface to the cowlink shared library: the COW-link physical-layer
 * model plus the data-pipeline commands. All entry points are thread-safe
 * as long as each cow_ctx is used from one thread at a time. */
#ifndef COWLINK_H
#define COWLINK_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum cow_status {
    COW_OK = 0,
    COW_ERROR_INVALID_ARGUMENT = 1,
    COW_ERROR_DOMAIN = 2, /* model undefined at these inputs (e.g. mu/t > 2) */
    COW_ERROR_IO = 3,
    COW_ERROR_PARSE = 4,
    COW_ERROR_CONVERGENCE = 5,
    COW_ERROR_INTERNAL = 6
} cow_status;

/* Opaque handle carrying the last error message of failed calls. */
typedef struct cow_ctx cow_ctx;

cow_ctx* cow_ctx_new(void);
void cow_ctx_free(cow_ctx* ctx);
/* Message of the most recent failure on this handle; empty string after a
 * success. The pointer stays valid until the next call using the handle. */
const char* cow_last_error(const cow_ctx* ctx);

const char* cow_version(void);

/* Frees strings returned through char** outputs. NULL is allowed. */
void cow_string_free(char* text);

/* ---- physical-layer model ---- */

typedef struct cow_params {
    double attenuation_db_per_km;
    double detector_efficiency;
    double error_correction_eff;
    double dark_count_prob;
    double after_pulse_prob;
    double key_block_length_km;
    double bob_transmittance_exp; /* receiver transmittance = 10^exp */
    double dead_time_s;
    double pulse_rate_hz;
    double mean_photon_number;
    double distance_km;
    int include_eta_in_p_mu;
} cow_params;

/* Fills the reference-link defaults. */
void cow_params_default(cow_params* params);

typedef struct cow_observables {
    double visibility;
    double measured_qber;
    int use_model_qber;
} cow_observables;

/* visibility 0.98, measured qber 0.02, measured mode */
void cow_observables_default(cow_observables* obs);

typedef struct cow_skr_breakdown {
    double transmittance;
    double detection_prob;
    double dead_time_factor;
    double duty_cycle_factor;
    double sifted_rate;
    double qber;
    double mutual_info_ab;
    double mutual_info_ae;
    double skr_raw; /* before the clamp at zero */
    double skr;     /* bits/s, >= 0 */
} cow_skr_breakdown;

cow_status cow_secret_key_rate(cow_ctx* ctx, const cow_params* params,
                               const cow_observables* obs, cow_skr_breakdown* out);

typedef struct cow_mu_solution {
    double mu;
    double residual;
    int bracketed; /* 0 when the target exceeds the achievable peak */
    int iterations;
} cow_mu_solution;

/* Smallest mu in [mu_lo, mu_hi] whose rate meets target_skr. */
cow_status cow_solve_mu(cow_ctx* ctx, const cow_params* params, const cow_observables* obs,
                        double target_skr, double mu_lo, double mu_hi, cow_mu_solution* out);

/* ---- pipeline commands ----
 * Each runs one orchestrated step and returns COW_OK iff its artifact was
 * written. `output` receives the human-readable summary for standard output
 * and `diagnostics` any warnings for standard error; both are optional and
 * freed with cow_string_free. */

typedef struct cow_synth_options {
    const char* scenario_path; /* NULL = built-in five-link chain */
    const char* out_dir;
    uint64_t seed; /* used when seed_set != 0 */
    int seed_set;
} cow_synth_options;

cow_status cow_run_synth(cow_ctx* ctx, const cow_synth_options* options, char** output,
                         char** diagnostics);

typedef struct cow_prep_options {
    const char* in_dir;
    const char* out_path;
    const char* window; /* NULL = "10m" */
    const char* lags;   /* NULL = "1,2,3"; "none" disables */
    double link_loss;   /* used when link_loss_set != 0 */
    int link_loss_set;
} cow_prep_options;

cow_status cow_run_prep(cow_ctx* ctx, const cow_prep_options* options, char** output,
                        char** diagnostics);

typedef struct cow_fit_options {
    const char* frame_path;
    const char* out_path;
    const char* free_params; /* NULL = "alpha" */
    double mu;               /* used when mu_set != 0 */
    int mu_set;
    double distance_km; /* used when distance_set != 0 */
    int distance_set;
    int use_model_qber;
} cow_fit_options;

cow_status cow_run_fit(cow_ctx* ctx, const cow_fit_options* options, char** output,
                       char** diagnostics);

typedef struct cow_train_options {
    const char* const* frame_paths;
    size_t n_frames;
    const char* out_model;
    const char* features; /* NULL = "qber,visibility,history" */
    int history_lags;     /* 0 = default 3 */
    int epochs;           /* 0 = default 50 */
    int batch_size;       /* 0 = default 8 */
    uint64_t seed;        /* default 42 when seed_set == 0 */
    int seed_set;
} cow_train_options;

cow_status cow_run_train(cow_ctx* ctx, const cow_train_options* options, char** output,
                         char** diagnostics);

typedef struct cow_predict_options {
    const char* model_path;
    const char* frame_path;
    const char* out_path;
    const double* link_loss_overrides;
    size_t n_overrides;
} cow_predict_options;

cow_status cow_run_predict(cow_ctx* ctx, const cow_predict_options* options, char** output,
                           char** diagnostics);

typedef struct cow_evaluate_options {
    const char* model_path;
    const char* const* frame_paths;
    size_t n_frames;
    const char* out_path;
} cow_evaluate_options;

cow_status cow_run_evaluate(cow_ctx* ctx, const cow_evaluate_options* options, char** output,
                            char** diagnostics);

typedef struct cow_correlate_options {
    const char* frame_path;
    const char* out_path;
    const char* columns; /* NULL = every frame column */
} cow_correlate_options;

cow_status cow_run_correlate(cow_ctx* ctx, const cow_correlate_options* options, char** output,
                             char** diagnostics);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* COWLINK_H */
