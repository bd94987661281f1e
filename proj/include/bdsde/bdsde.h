/*
 * C interface to the backward doubly-stochastic solver library.
 *
 * All entry points return a status code; bdsde_last_error() gives a
 * thread-local message for the most recent failure on the calling thread.
 * Objects are created behind opaque handles and released with the matching
 * _destroy function.
 */
#ifndef BDSDE_H
#define BDSDE_H

#include <stddef.h>
#include <stdint.h>

#if defined _WIN32
#define BDSDE_API __declspec(dllexport)
#else
#define BDSDE_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum bdsde_status {
  BDSDE_OK = 0,
  BDSDE_ERR_INVALID_ARGUMENT = 1, /* bad parameter or precondition */
  BDSDE_ERR_CONFIG = 2,           /* config parse/validation failure */
  BDSDE_ERR_NUMERIC = 3,          /* non-finite value during a run */
  BDSDE_ERR_IO = 4,               /* file read/write failure */
  BDSDE_ERR_INTERNAL = 5
} bdsde_status;

typedef struct bdsde_problem bdsde_problem;
typedef struct bdsde_config bdsde_config;
typedef struct bdsde_solution bdsde_solution;

BDSDE_API const char* bdsde_version(void);

/* Message for the last error on this thread; empty string if none. */
BDSDE_API const char* bdsde_last_error(void);

/* ---- problems ----------------------------------------------------------- */

typedef struct bdsde_linear_params {
  double a0;          /* driver coefficient f = a0 y */
  double b0;          /* noise coefficient g = b0 y */
  double strike;      /* terminal is strike - x */
  double mu;          /* state drift rate */
  double sigma;       /* state volatility, > 0 */
  double x0;
  double horizon;
} bdsde_linear_params;

typedef struct bdsde_finance_params {
  double mu;
  double r;            /* lending rate */
  double big_r;        /* borrowing rate, >= r */
  double strike;
  double sigma;
  double x0;
  double horizon;
  double domain_lower; /* evaluation box for log terms, lower > 0 */
  double domain_upper;
} bdsde_finance_params;

/* noise variants for the finance problem: 1, 2 or 3 */
BDSDE_API bdsde_status bdsde_problem_create_linear(const bdsde_linear_params* params,
                                                   bdsde_problem** out);
BDSDE_API bdsde_status bdsde_problem_create_finance(const bdsde_finance_params* params,
                                                    int noise_variant, bdsde_problem** out);

/* Builtin by CLI name: "linear", "finance-g1", "finance-g2", "finance-g3". */
BDSDE_API bdsde_status bdsde_problem_create_builtin(const char* name, bdsde_problem** out);

/*
 * Custom coefficients.  Matrix outputs are row-major; z passed to driver and
 * noise callbacks is k x d.  Every callback must fill its whole output
 * buffer with finite values.
 */
typedef void (*bdsde_state_fn)(const double* x, double* out, void* ctx);
typedef void (*bdsde_value_fn)(double t, const double* x, const double* y, const double* z,
                               double* out, void* ctx);

typedef struct bdsde_custom_problem {
  uint64_t state_dim;  /* d */
  uint64_t value_dim;  /* k */
  uint64_t noise_dim;  /* l */
  bdsde_state_fn drift;      /* out: d */
  bdsde_state_fn diffusion;  /* out: d x d */
  bdsde_value_fn driver;     /* out: k */
  bdsde_value_fn noise;      /* out: k x l */
  bdsde_state_fn terminal;   /* out: k */
  const double* x0;          /* d values */
  double horizon;
  double contraction;        /* Lipschitz bound of noise in z; warn if >= 1 */
  void* ctx;                 /* passed through to every callback */
} bdsde_custom_problem;

BDSDE_API bdsde_status bdsde_problem_create_custom(const bdsde_custom_problem* desc,
                                                   bdsde_problem** out);

BDSDE_API bdsde_status bdsde_problem_dims(const bdsde_problem* problem, uint64_t* state_dim,
                                          uint64_t* value_dim, uint64_t* noise_dim);

BDSDE_API void bdsde_problem_destroy(bdsde_problem* problem);

/* ---- direct solves ------------------------------------------------------ */

typedef struct bdsde_solver_options {
  uint64_t steps;              /* N >= 1 */
  uint64_t samples;            /* M >= 1 */
  double cell_edge;            /* regression cell width, > 0 */
  uint64_t picard_iterations;  /* 0 selects the default (3) */
  int data_driven_domain;      /* nonzero: bounds from sampled states */
  const double* domain_lower;  /* d values; required when not data driven */
  const double* domain_upper;
} bdsde_solver_options;

/*
 * One backward solve: the driver path comes from (seed, path stream 0), the
 * sample batch from repetition 0 of the same seed, matching the experiment
 * runner's seed lineage.
 */
BDSDE_API bdsde_status bdsde_solve(const bdsde_problem* problem,
                                   const bdsde_solver_options* options, uint64_t seed,
                                   bdsde_solution** out);

/* y at t=0 and the initial state; out must hold value_dim doubles. */
BDSDE_API bdsde_status bdsde_solution_y0(const bdsde_solution* solution, double* out);

/*
 * Fitted fields at time index n (0..N): y_out takes value_dim doubles,
 * z_out value_dim * state_dim; either may be NULL.
 */
BDSDE_API bdsde_status bdsde_solution_eval(const bdsde_solution* solution, uint64_t n,
                                           const double* x, double* y_out, double* z_out);

BDSDE_API void bdsde_solution_destroy(bdsde_solution* solution);

/* ---- experiments -------------------------------------------------------- */

/* Empty config with default values for every key. */
BDSDE_API bdsde_status bdsde_config_create(bdsde_config** out);

/* Parse a JSON config document from a file or a string. */
BDSDE_API bdsde_status bdsde_config_load_file(const char* path, bdsde_config** out);
BDSDE_API bdsde_status bdsde_config_load_string(const char* text, bdsde_config** out);

/*
 * Override one key with a dotted path, e.g. "solver.samples", "seed",
 * "problem.name".  The value is parsed as a JSON literal when possible and
 * treated as a string otherwise.
 */
BDSDE_API bdsde_status bdsde_config_set(bdsde_config* config, const char* dotted_key,
                                        const char* value);

BDSDE_API void bdsde_config_destroy(bdsde_config* config);

/* Run the configured experiment; artifacts are written into out_dir. */
BDSDE_API bdsde_status bdsde_run_experiment(const bdsde_config* config, const char* out_dir);

/* Side-by-side run with the configured noise and with noise zeroed. */
BDSDE_API bdsde_status bdsde_compare_bsde(const bdsde_config* config, const char* out_dir);

/* Re-run the experiment recorded in a manifest; CSV bodies are reproduced
 * byte for byte. */
BDSDE_API bdsde_status bdsde_replay(const char* manifest_path, const char* out_dir);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* BDSDE_H */
