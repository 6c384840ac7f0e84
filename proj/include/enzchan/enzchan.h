/* enzchan — C API for the enzyme-assisted diffusive molecular
 * communication toolkit.
 *
 * The library models a point transmitter releasing impulses of
 * information molecules into a fluid where diffusing enzymes degrade
 * them, a passive spherical receiver counting molecules, and the
 * threshold detector built on top. It exposes the closed-form channel
 * expressions, the receiver error statistics, the particle-based
 * stochastic simulator, and a declarative experiment runner.
 *
 * Conventions:
 *   - All quantities cross this boundary in SI units (m, s, molecule),
 *     except where a name carries an explicit unit suffix.
 *   - Functions return EC_OK (0) on success. On failure they return a
 *     nonzero code and ec_last_error() describes the problem for the
 *     calling thread. Functions returning pointers yield NULL on failure.
 *   - Every ec_* object must be released with its matching _free().
 *     Objects are immutable after creation except ec_sim.
 */
#ifndef ENZCHAN_H
#define ENZCHAN_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

enum ec_status {
  EC_OK = 0,
  EC_ERR = 1,        /* unexpected internal failure */
  EC_ERR_CONFIG = 2, /* invalid configuration or experiment spec */
  EC_ERR_BUDGET = 3, /* simulation size above the configured cap */
  EC_ERR_DOMAIN = 4, /* argument outside an operation's domain */
  EC_ERR_IO = 5      /* file could not be read or written */
};

enum ec_family { EC_FAMILY_BINOMIAL = 0, EC_FAMILY_POISSON = 1, EC_FAMILY_GAUSSIAN = 2 };
enum ec_isi { EC_ISI_NONE = 0, EC_ISI_PREV = 1, EC_ISI_FULL = 2 };
enum ec_decay_method { EC_DECAY_NUMERIC = 0, EC_DECAY_BOUND = 1 };
enum ec_mode {
  EC_MODE_IMPULSE_RESPONSE = 0,
  EC_MODE_DECAY_INTERVAL = 1,
  EC_MODE_FIRST_BIT_DETECTION = 2,
  EC_MODE_KNOWN_SEQUENCE_ERROR = 3,
  EC_MODE_THRESHOLD_SWEEP = 4
};

typedef struct ec_config ec_config;
typedef struct ec_channel ec_channel;
typedef struct ec_sim ec_sim;
typedef struct ec_table ec_table;

/* Message describing the most recent failure on this thread. The pointer
 * stays valid until the next failing ec_ call on the same thread. */
const char* ec_last_error(void);

/* Status code of the most recent failure on this thread; EC_OK after a
 * successful call. Useful with the pointer-returning functions. */
int ec_last_status(void);

const char* ec_version(void);

/* ------------------------------------------------------------------ */
/* Configuration                                                       */

int ec_preset_count(void);
const char* ec_preset_name(int index);

ec_config* ec_config_preset(const char* name);
ec_config* ec_config_load(const char* path);
/* Parse config text directly (same flat key = value format as files). */
ec_config* ec_config_parse(const char* text);
void ec_config_free(ec_config* cfg);

int ec_config_warning_count(const ec_config* cfg);
const char* ec_config_warning(const ec_config* cfg, int index);

/* Named scalar lookup. Keys: n_emit, n_enzyme, v_enz_side, k1, k_minus1,
 * k2, rx_distance, rx_radius, dt, bit_interval, p1, temperature,
 * viscosity, boltzmann, d_a, d_e, d_ea, r_a, r_e, r_ea, v_ob, c_etot,
 * r_rms, r_b, r_b_regime_ok. */
int ec_config_get(const ec_config* cfg, const char* key, double* out);

/* Canonical key = value dump (config-file units); caller frees. */
char* ec_config_dump(const ec_config* cfg);
void ec_string_free(char* s);

/* ------------------------------------------------------------------ */
/* Analytical channel                                                  */

ec_channel* ec_channel_create(const ec_config* cfg, int enzymes_active);
void ec_channel_free(ec_channel* ch);

double ec_channel_peak_time(const ec_channel* ch);       /* t_max, s */
double ec_channel_peak_count(const ec_channel* ch);      /* expected count at t_max */
double ec_channel_sampling_time(const ec_channel* ch);   /* t_max on the dt grid */
double ec_channel_c_etot(const ec_channel* ch);

/* Expected concentration at distance r and time t > 0 (lower bound when
 * enzymes are active). */
int ec_channel_impulse_concentration(const ec_channel* ch, double r, double t, double* out);
/* Expected receiver count at time t > 0. */
int ec_channel_expected_observed(const ec_channel* ch, double t, double* out);
/* Probability that one emitted molecule is observed at time t > 0. */
int ec_channel_observation_prob(const ec_channel* ch, double t, double* out);
/* Time to decay to alpha * peak, alpha in (0,1). */
int ec_channel_decay_time(const ec_channel* ch, double alpha, int method, double* out);

/* ------------------------------------------------------------------ */
/* Count statistics and bit errors                                     */

/* Pr(N >= xi) / Pr(N = w). n_trials is used by the binomial family,
 * p_single by binomial (success probability) and gaussian (variance
 * term); the poisson family uses only mean. */
int ec_count_tail(int family, int64_t n_trials, double mean, double p_single,
                  int64_t xi, double* out);
int ec_count_pmf(int family, int64_t n_trials, double mean, double p_single,
                 int64_t w, double* out);

/* Expected count at the j-th decision instant (1-based) for the given
 * bit pattern with interval t_b. isi selects how many past intervals
 * contribute. dt_aligned != 0 samples at t_max rounded to the dt grid. */
int ec_isi_mean(const ec_channel* ch, const uint8_t* bits, int n_bits, double t_b,
                int j, int isi, int dt_aligned, double* out);

/* Error probability of bit j conditioned on the given sequence. */
int ec_bit_error_prob(const ec_channel* ch, const uint8_t* bits, int n_bits, double t_b,
                      int j, int64_t xi, int family, int isi, int dt_aligned,
                      double* out);

/* Mean error probability over n_sequences random sequences of n_bits
 * with Pr(1) = p1 (pass p1 < 0 to use the config value). per_bit_out may
 * be NULL or an array of n_bits. Deterministic in seed; independent of
 * n_threads. */
int ec_mean_error_prob(const ec_channel* ch, double t_b, int64_t xi, int family,
                       int isi, int n_bits, int n_sequences, double p1,
                       uint64_t seed, int n_threads, int dt_aligned,
                       double* mean_out, double* per_bit_out);

/* ------------------------------------------------------------------ */
/* Particle simulation                                                 */

/* Creates a world with the configured enzymes placed uniformly at random
 * in V_enz (drawn from seed). ea_as_a != 0 forces the intermediate to
 * diffuse with D_A instead of its own Einstein coefficient. */
ec_sim* ec_sim_create(const ec_config* cfg, uint64_t seed, int ea_as_a);
void ec_sim_free(ec_sim* sim);

int ec_sim_emit(ec_sim* sim);  /* lattice impulse at the transmitter */
int ec_sim_step(ec_sim* sim);  /* advance one dt */
int64_t ec_sim_observe(const ec_sim* sim); /* free A inside the receiver */
int64_t ec_sim_clock(const ec_sim* sim);   /* completed steps */
int ec_sim_counts(const ec_sim* sim, int64_t* n_e, int64_t* n_ea,
                  int64_t* n_a_free, int64_t* n_a_degraded);

/* Full transmission of the given bit pattern: one emission at the start
 * of each 1 interval, counts recorded at each sample time (multiples of
 * dt, nondecreasing). counts_out must hold n_samples values. If
 * world_out is not NULL it must hold 4 * n_samples values and receives
 * (n_E, n_EA, n_A_free, n_A_degraded) per sample. */
int ec_sim_run_trial(const ec_config* cfg, const uint8_t* bits, int n_bits,
                     double t_b, const double* sample_times, int n_samples,
                     uint64_t seed, int ea_as_a, int64_t* counts_out,
                     int64_t* world_out);

/* ------------------------------------------------------------------ */
/* Experiments                                                         */

typedef struct ec_experiment {
  const char* name;
  const char* system;       /* preset name or config file path */
  int mode;                 /* ec_mode */
  int64_t trials;           /* simulated trials/transmissions; 0 = analytic only */
  int64_t trial_offset;     /* first trial index, for sharding */
  int64_t sequences;        /* analytic sequence draws (threshold sweep) */
  int n_bits;
  const int64_t* thresholds;
  int n_thresholds;         /* 0 = per-mode default */
  const double* t_b_us;
  int n_t_b;                /* 0 = config bit interval */
  int enzymes;              /* 0/1 */
  uint64_t master_seed;
  int family;               /* ec_family */
  int isi;                  /* ec_isi */
  int threads;
  double t_start_us, t_end_us, t_step_us;    /* impulse-response grid */
  double alpha_min, alpha_max, alpha_step;   /* decay grid */
  const char* bits;         /* known-sequence pattern, e.g. "1111100000" */
  double budget_cap;        /* particle-step refusal threshold */
  int ea_diffuses_as_a;
  const char* per_trial_out; /* optional per-trial CSV path */
} ec_experiment;

/* Fills defaults: system1, impulse response, 1000 trials, seed 1,
 * poisson family, full ISI, 1 thread, 5..200 us step 5, alpha 0.05..0.95
 * step 0.05, budget cap 1e12. */
void ec_experiment_init(ec_experiment* spec);

ec_table* ec_run_experiment(const ec_experiment* spec);
void ec_table_free(ec_table* table);

/* Merge shards of one experiment into the table of the full run. */
ec_table* ec_table_merge(const ec_table* const* tables, int n);

int64_t ec_table_rows(const ec_table* table);
int ec_table_cols(const ec_table* table);
const char* ec_table_column_name(const ec_table* table, int col);
int ec_table_column_index(const ec_table* table, const char* name); /* -1 if absent */
double ec_table_value(const ec_table* table, int64_t row, int col);

int ec_table_metadata_count(const ec_table* table);
const char* ec_table_metadata_key(const ec_table* table, int index);
const char* ec_table_metadata_value_at(const ec_table* table, int index);
const char* ec_table_metadata_value(const ec_table* table, const char* key);

int ec_table_write_csv(const ec_table* table, const char* path);
/* CSV text in memory; caller frees with ec_string_free. */
char* ec_table_to_csv(const ec_table* table);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* ENZCHAN_H */
