#ifndef SICMAB_H
#define SICMAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SicmabMethod {
  SICMAB_METHOD_PROPOSED = 0,
  SICMAB_METHOD_BASELINE = 1,
} SicmabMethod;

/**
 * Per-transmission series held by a report.
 */
typedef enum SicmabSeries {
  /**
   * Trailing 40-transmission success rate.
   */
  SICMAB_SERIES_ROLLING_SUCCESS_RATE = 0,
  SICMAB_SERIES_SUCCESS_BY_INDEX = 1,
  /**
   * Energy efficiency in bit/J.
   */
  SICMAB_SERIES_ENERGY_EFFICIENCY = 2,
} SicmabSeries;

/**
 * Result code of every fallible call.
 */
typedef enum SicmabStatus {
  SICMAB_STATUS_OK = 0,
  SICMAB_STATUS_NULL_POINTER = 1,
  SICMAB_STATUS_DOMAIN = 2,
  SICMAB_STATUS_CONFIG = 3,
  SICMAB_STATUS_CONTRACT = 4,
  SICMAB_STATUS_INSUFFICIENT_DATA = 5,
  SICMAB_STATUS_PARSE = 6,
  SICMAB_STATUS_VALIDATION = 7,
  SICMAB_STATUS_IO = 8,
  SICMAB_STATUS_INVALID_UTF8 = 9,
  SICMAB_STATUS_PANIC = 10,
} SicmabStatus;

typedef enum SicmabVarianceMode {
  SICMAB_VARIANCE_MODE_EMPIRICAL = 0,
  SICMAB_VARIANCE_MODE_PADDED = 1,
} SicmabVarianceMode;

/**
 * Opaque UCB1-tuned state.
 */
typedef struct SicmabBandit SicmabBandit;

/**
 * Opaque result of one simulated method.
 */
typedef struct SicmabReport SicmabReport;

/**
 * Opaque scenario configuration.
 */
typedef struct SicmabScenario SicmabScenario;

typedef struct SicmabRadioParams {
  uint8_t spreading_factor;
  double bandwidth_hz;
  uint32_t preamble_symbols;
  uint32_t payload_bytes;
  /**
   * 1..=4 for coding rates 4/5..4/8.
   */
  uint8_t coding_rate;
  bool crc_enabled;
  bool explicit_header;
  bool low_data_rate_optimize;
} SicmabRadioParams;

typedef struct SicmabTransmissionCost {
  double t_symbol;
  double t_preamble;
  double t_payload;
  double t_toa;
  double e_toa;
  double e_active;
} SicmabTransmissionCost;

typedef struct SicmabSicResult {
  /**
   * NaN when fewer than two windows were available.
   */
  double sic_h0;
  double sic_h1_min;
  size_t best_split;
  double statistic;
  bool detected;
  size_t window_count;
} SicmabSicResult;

typedef struct SicmabParameterSet {
  size_t channel_id;
  double center_frequency_hz;
  double bandwidth_hz;
  int32_t tx_power_dbm;
} SicmabParameterSet;

typedef struct SicmabArmStats {
  double cumulative_reward;
  uint64_t selection_count;
  double mean;
  double variance;
  /**
   * Score from the most recent selection; +inf for unplayed arms.
   */
  double last_score;
} SicmabArmStats;

typedef struct SicmabSummary {
  double overall_success_rate;
  double overall_ee;
  /**
   * NaN when no reset followed a jamming onset (always for the baseline).
   */
  double mean_detection_latency;
  uint32_t horizon;
  size_t arm_count;
  size_t bin_count;
  size_t replications;
} SicmabSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null if none.
 * The pointer stays valid until the next failing call on the same thread.
 */
const char *sicmab_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *sicmab_version(void);

/**
 * Radio settings with coding rate 4/5, CRC on, explicit header and no
 * low-data-rate optimization.
 */
struct SicmabRadioParams sicmab_radio_params_default(uint8_t spreading_factor,
                                                     double bandwidth_hz,
                                                     uint32_t preamble_symbols,
                                                     uint32_t payload_bytes);

/**
 * Symbol duration `2^sf / bw` in seconds.
 *
 * # Safety
 * `out` must be null or point to writable memory for one `double`.
 */
enum SicmabStatus sicmab_symbol_duration(uint8_t spreading_factor,
                                         double bandwidth_hz,
                                         double *out);

/**
 * Preamble duration in seconds for `n_preamble` programmed symbols.
 *
 * # Safety
 * `out` must be null or point to writable memory for one `double`.
 */
enum SicmabStatus sicmab_preamble_duration(uint32_t n_preamble, double t_symbol, double *out);

/**
 * Airtime and energy of one transmission at `tx_dbm`, using the default
 * energy profile.
 *
 * # Safety
 * `params` and `out` must be null or valid for reading/writing one struct.
 */
enum SicmabStatus sicmab_transmission_cost(const struct SicmabRadioParams *params,
                                           int32_t tx_dbm,
                                           struct SicmabTransmissionCost *out);

/**
 * Runs the change detector over `len` ACK bits (nonzero = success).
 *
 * # Safety
 * `bits` must point to `len` readable bytes (may be null when `len` is 0);
 * `out` must be valid for writing one struct.
 */
enum SicmabStatus sicmab_detect(const uint8_t *bits,
                                size_t len,
                                size_t window,
                                size_t shift,
                                double theta,
                                struct SicmabSicResult *out);

/**
 * Creates a bandit over `n` arms. Release with [`sicmab_bandit_free`].
 *
 * # Safety
 * `arms` must point to `n` readable structs; `out` must be writable.
 */
enum SicmabStatus sicmab_bandit_new(const struct SicmabParameterSet *arms,
                                    size_t n,
                                    enum SicmabVarianceMode mode,
                                    struct SicmabBandit **out);

/**
 * # Safety
 * `bandit` must be null or a pointer from [`sicmab_bandit_new`] not yet freed.
 */
void sicmab_bandit_free(struct SicmabBandit *bandit);

/**
 * Index of the arm with the highest score; unplayed arms come first.
 *
 * # Safety
 * `bandit` must be a live handle; `out` must be writable.
 */
enum SicmabStatus sicmab_bandit_select(struct SicmabBandit *bandit, size_t *out);

/**
 * Records a normalized reward in [0, 1] for `arm`.
 *
 * # Safety
 * `bandit` must be a live handle.
 */
enum SicmabStatus sicmab_bandit_update(struct SicmabBandit *bandit, size_t arm, double reward);

/**
 * Clears all statistics and the step counter.
 *
 * # Safety
 * `bandit` must be a live handle.
 */
enum SicmabStatus sicmab_bandit_reset(struct SicmabBandit *bandit);

/**
 * # Safety
 * `bandit` must be a live handle; `out` must be writable.
 */
enum SicmabStatus sicmab_bandit_arm_count(const struct SicmabBandit *bandit, size_t *out);

/**
 * Number of updates since creation or the last reset.
 *
 * # Safety
 * `bandit` must be a live handle; `out` must be writable.
 */
enum SicmabStatus sicmab_bandit_total_steps(const struct SicmabBandit *bandit, uint64_t *out);

/**
 * # Safety
 * `bandit` must be a live handle; `out` must be writable.
 */
enum SicmabStatus sicmab_bandit_arm_stats(const struct SicmabBandit *bandit,
                                          size_t arm,
                                          struct SicmabArmStats *out);

/**
 * The bundled reference scenario.
 *
 * # Safety
 * `out` must be writable.
 */
enum SicmabStatus sicmab_scenario_bundled(struct SicmabScenario **out);

/**
 * Loads and validates a scenario file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum SicmabStatus sicmab_scenario_load(const char *path, struct SicmabScenario **out);

/**
 * Parses a scenario from TOML text.
 *
 * # Safety
 * `text` must be a NUL-terminated string; `out` must be writable.
 */
enum SicmabStatus sicmab_scenario_from_toml(const char *text, struct SicmabScenario **out);

/**
 * # Safety
 * `scenario` must be null or a live handle.
 */
void sicmab_scenario_free(struct SicmabScenario *scenario);

/**
 * # Safety
 * `scenario` must be a live handle.
 */
enum SicmabStatus sicmab_scenario_set_seed(struct SicmabScenario *scenario, uint64_t base_seed);

/**
 * # Safety
 * `scenario` must be a live handle.
 */
enum SicmabStatus sicmab_scenario_set_replications(struct SicmabScenario *scenario,
                                                   uint32_t replications);

/**
 * Simulates every replication of `scenario` with `method`.
 * Release the report with [`sicmab_report_free`].
 *
 * # Safety
 * `scenario` must be a live handle; `out` must be writable.
 */
enum SicmabStatus sicmab_run(const struct SicmabScenario *scenario,
                             enum SicmabMethod method,
                             struct SicmabReport **out);

/**
 * # Safety
 * `report` must be null or a live handle.
 */
void sicmab_report_free(struct SicmabReport *report);

/**
 * # Safety
 * `report` must be a live handle; `out` must be writable.
 */
enum SicmabStatus sicmab_report_summary(const struct SicmabReport *report,
                                        struct SicmabSummary *out);

/**
 * Copies up to `cap` values of a per-transmission series into `buf` and
 * stores the full series length in `out_len`. Call with `cap = 0` to size
 * the buffer first.
 *
 * # Safety
 * `report` must be a live handle; `buf` must have room for `cap` doubles.
 */
enum SicmabStatus sicmab_report_series(const struct SicmabReport *report,
                                       enum SicmabSeries series,
                                       double *buf,
                                       size_t cap,
                                       size_t *out_len);

/**
 * Selection ratio of every arm within 40-transmission bin `bin`, in arm
 * order. Same buffer protocol as [`sicmab_report_series`].
 *
 * # Safety
 * `report` must be a live handle; `buf` must have room for `cap` doubles.
 */
enum SicmabStatus sicmab_report_selection_ratios(const struct SicmabReport *report,
                                                 size_t bin,
                                                 double *buf,
                                                 size_t cap,
                                                 size_t *out_len);

/**
 * Writes the four metric CSVs for `n` reports into directory `dir`.
 *
 * # Safety
 * `reports` must point to `n` live handles; `dir` must be NUL-terminated.
 */
enum SicmabStatus sicmab_write_csv(const struct SicmabReport *const *reports,
                                   size_t n,
                                   const char *dir);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SICMAB_H */
