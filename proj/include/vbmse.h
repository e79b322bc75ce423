/*
 * vbmse - regularized covariance selection and minimum-variance backtesting.
 *
 * C API over the core library: opaque handles, status codes, file-based
 * results. All functions are thread-safe as long as each returns handle is
 * used from one thread at a time; error messages are thread-local.
 */
#ifndef VBMSE_H
#define VBMSE_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define VBMSE_API __declspec(dllexport)
#elif defined(__GNUC__)
#define VBMSE_API __attribute__((visibility("default")))
#else
#define VBMSE_API
#endif

typedef enum vbmse_status {
  VBMSE_OK = 0,
  VBMSE_ERROR_INVALID_ARGUMENT = 1,
  VBMSE_ERROR_PARSE = 2,
  VBMSE_ERROR_INSUFFICIENT_HISTORY = 3,
  VBMSE_ERROR_NUMERIC = 4,
  VBMSE_ERROR_IO = 5,
  VBMSE_ERROR_VALIDATION_FAILED = 6,
  VBMSE_ERROR_INTERNAL = 7
} vbmse_status;

/* Library version string, e.g. "1.0.0". */
VBMSE_API const char* vbmse_version(void);

/* Message for the most recent failing call on this thread ("" if none). */
VBMSE_API const char* vbmse_last_error(void);

/* ---- returns data ------------------------------------------------------ */

typedef struct vbmse_returns vbmse_returns; /* opaque: p assets x T days */

/* mode: 0 = file already holds returns, 1 = prices (converted to log returns,
 * day count shrinks by one). Assets with missing cells are dropped. */
VBMSE_API vbmse_status vbmse_returns_load_csv(const char* path, int32_t prices_mode,
                                              vbmse_returns** out);

/* Column-major p x days buffer of log returns; labels are synthesized. */
VBMSE_API vbmse_status vbmse_returns_from_values(const double* values, int32_t p, int32_t days,
                                                 vbmse_returns** out);

typedef struct vbmse_synth_options {
  int32_t p;          /* asset count */
  int32_t days;       /* generated day count */
  double rho;         /* AR(1) coefficient of the true covariance (|rho| < 1) */
  double mu;          /* common mean of every asset */
  int32_t n_factors;  /* 0: AR(1) covariance; k>0: k-factor + diagonal */
  uint64_t seed;
} vbmse_synth_options;

VBMSE_API void vbmse_synth_options_init(vbmse_synth_options* opts);

/* Gaussian draws from the model y = mu + Sigma^(1/2) x; bit-reproducible for
 * a fixed seed. */
VBMSE_API vbmse_status vbmse_returns_synth(const vbmse_synth_options* opts, vbmse_returns** out);

VBMSE_API void vbmse_returns_free(vbmse_returns* r);
VBMSE_API vbmse_status vbmse_returns_dims(const vbmse_returns* r, int32_t* p, int32_t* days);
VBMSE_API vbmse_status vbmse_returns_write_csv(const vbmse_returns* r, const char* path);

/* ---- regularization selection ------------------------------------------ */

typedef struct vbmse_grid_options {
  double min_mult; /* grid lower bound as a multiple of tr(SCM)/p */
  double max_mult; /* grid upper bound, same unit */
  int32_t points;  /* log-spaced point count */
} vbmse_grid_options;

typedef struct vbmse_select_options {
  vbmse_grid_options grid;
  int32_t exact_t_factor; /* 1: use the exact (n-1)/n trace factor in fixed points */
  /* Conventions of the consistent-MSE bracket; 0 keeps the frozen defaults
   * chosen by the validation gate. bracket_sign: +1 / -1 on the trace term.
   * curvature_factor: 1 = minus-gamma-dtilde', 2 = plus-gamma-dtilde'. */
  int32_t bracket_sign;
  int32_t curvature_factor;
} vbmse_select_options;

VBMSE_API void vbmse_select_options_init(vbmse_select_options* opts);

/* Minimizes the consistent MSE estimator over the grid (ties break toward
 * smaller gamma). Optionally writes the curve CSV. */
VBMSE_API vbmse_status vbmse_select_gamma(const vbmse_returns* r,
                                          const vbmse_select_options* opts, double* gamma_opt,
                                          const char* curve_csv_path_or_null);

/* ---- MSE curves --------------------------------------------------------- */

typedef struct vbmse_curve_options {
  vbmse_select_options select;
  /* Comma-separated subset of
   * "consistent,plugin,semi_oracle,asymptotic,mc_oracle"; NULL selects every
   * variant computable from the inputs. Oracle variants need synth. */
  const char* variants;
  int32_t mc_trials; /* Monte-Carlo trials for the mc_oracle column */
  int32_t threads;   /* 0 = auto */
} vbmse_curve_options;

VBMSE_API void vbmse_curve_options_init(vbmse_curve_options* opts);

/* Writes one row per grid gamma with one column per requested variant.
 * Exactly one of `r` and `synth` must be non-NULL; with `synth`, a training
 * block of synth->days columns is generated and the true-covariance variants
 * become available. */
VBMSE_API vbmse_status vbmse_mse_curve(const vbmse_returns* r, const vbmse_synth_options* synth,
                                       const vbmse_curve_options* opts, const char* out_csv_path);

/* ---- backtesting -------------------------------------------------------- */

typedef struct vbmse_backtest_options {
  vbmse_select_options select;
  int32_t rebalance;          /* holding days per window (default 20) */
  double annualization_days;  /* realized risk scale (default 250) */
  /* Comma-separated subset of "vb_mse,plugin,lw,scm_pinv,equal_weight". */
  const char* methods;
  /* Test hook: perturb the final holding block before running; weights must
   * be unaffected (no look-ahead) while tail returns change. */
  int32_t poison_tail;
  uint64_t poison_seed;
} vbmse_backtest_options;

VBMSE_API void vbmse_backtest_options_init(vbmse_backtest_options* opts);

/* Rolling out-of-sample backtest at one window length. Writes the per-method
 * report CSV; optionally also per-day returns and per-window weights. */
VBMSE_API vbmse_status vbmse_backtest(const vbmse_returns* r, int32_t n_window,
                                      const vbmse_backtest_options* opts,
                                      const char* report_csv_path,
                                      const char* oos_csv_path_or_null,
                                      const char* weights_csv_path_or_null);

/* Cross product of methods x window lengths into one tidy report CSV. */
VBMSE_API vbmse_status vbmse_sweep(const vbmse_returns* r, const int32_t* n_windows,
                                   int32_t n_windows_len, const vbmse_backtest_options* opts,
                                   const char* report_csv_path);

/* ---- validation suite ---------------------------------------------------- */

typedef struct vbmse_validate_options {
  int32_t p;
  int32_t n;
  int32_t reps;
  uint64_t seed;
  double de_tolerance;      /* deterministic-equivalent checks (default 0.05) */
  double mc_sigma_tolerance; /* MC cross-checks, standard errors (default 3) */
  int32_t threads;
} vbmse_validate_options;

VBMSE_API void vbmse_validate_options_init(vbmse_validate_options* opts);

/* Runs the numerical validation suite (trace-relation checks, MC
 * cross-checks, delta consistency, the bracket-sign gate and the asymptotic
 * curve check), writes a JSON summary, and sets *all_pass. Returns
 * VBMSE_ERROR_VALIDATION_FAILED when any check fails. */
VBMSE_API vbmse_status vbmse_validate(const vbmse_validate_options* opts, const char* json_path,
                                      int32_t* all_pass);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* VBMSE_H */
