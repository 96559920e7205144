#ifndef BUDGET_PACING_H
#define BUDGET_PACING_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every entry point.
typedef enum BpStatus {
  BP_STATUS_OK = 0,
  BP_STATUS_NULL_POINTER = 1,
  BP_STATUS_INVALID_ARGUMENT = 2,
  BP_STATUS_PARSE = 3,
  BP_STATUS_PACING = 4,
  // The requested quantity is undefined for this exponent.
  BP_STATUS_REGIME = 5,
  BP_STATUS_ANALYSIS = 6,
  BP_STATUS_AUCTION = 7,
  BP_STATUS_IO = 8,
  BP_STATUS_PANIC = 9,
} BpStatus;

// Status of the pacing step taken at the end of a period.
typedef enum BpStepStatus {
  BP_STEP_STATUS_ACTIVE = 0,
  BP_STEP_STATUS_SUPPRESSED = 1,
  BP_STEP_STATUS_EXHAUSTED = 2,
} BpStepStatus;

typedef enum BpRegime {
  BP_REGIME_UNSTABLE = 0,
  BP_REGIME_STABLE_SUBLINEAR = 1,
  BP_REGIME_ONE_ITERATION = 2,
  BP_REGIME_STABLE_SUPERLINEAR = 3,
  BP_REGIME_GUARD_RAILS_REQUIRED = 4,
} BpRegime;

typedef struct BpBidLog BpBidLog;

typedef struct BpCostFn BpCostFn;

typedef struct BpSchedule BpSchedule;

typedef struct BpTrajectory BpTrajectory;

// Campaign settings. Set `initial_bid` to NaN for the default starting bid
// and `impressions_per_period` to 0 when unknown.
typedef struct BpCampaignConfig {
  double budget;
  size_t periods;
  double initial_bid;
  double tolerance;
  uint64_t impressions_per_period;
  bool clamp_enabled;
  double clamp_min;
  double clamp_max;
} BpCampaignConfig;

typedef struct BpPeriodRecord {
  size_t period;
  double bid;
  double cost;
  // NaN when no ratio was formed.
  double alpha;
  double remaining;
  double multiplier;
  enum BpStepStatus status;
} BpPeriodRecord;

typedef struct BpSummary {
  double total_spend;
  double spend_fraction;
  // -1 when the bids never settled.
  int64_t converged_at;
  // -1 when the campaign ran every period.
  int64_t early_exit_period;
} BpSummary;

typedef struct BpCyclePair {
  double b_minus;
  double b_plus;
  bool b_minus_on_power_branch;
  bool b_plus_on_cap_branch;
} BpCyclePair;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null. Valid until the
// next call into the library from the same thread.
const char *bp_last_error_message(void);

// Library version as a static string.
const char *bp_version(void);

// Releases a string returned by the library. Null is ignored.
//
// # Safety
// `s` must come from this library and not have been freed.
void bp_string_free(char *s);

// Defaults for a campaign: automatic starting bid, tolerance 1e-6, clamp
// off with bounds (0.1, 10).
struct BpCampaignConfig bp_config_default(double budget, size_t periods);

// Parses a cost expression such as `min(2*b^0.5,100)`.
//
// # Safety
// `expr` must be a valid C string; `out` must be writable.
enum BpStatus bp_cost_parse(const char *expr, struct BpCostFn **out);

// Builds `C b^k`, capped at `cap` when `cap` is finite.
//
// # Safety
// `out` must be writable.
enum BpStatus bp_cost_monomial(double coefficient, double k, double cap, struct BpCostFn **out);

// # Safety
// `f` must be a live handle; `out` must be writable.
enum BpStatus bp_cost_evaluate(const struct BpCostFn *f, double bid, double *out);

// # Safety
// `f` must come from this library and not have been freed. Null is ignored.
void bp_cost_free(struct BpCostFn *f);

// Parses `uniform`, `scaled:<κ,...>` or `subthreshold:<τ>,<σ>`.
//
// # Safety
// `spec` must be a valid C string; `out` must be writable.
enum BpStatus bp_schedule_parse(const char *spec, struct BpSchedule **out);

// Spend-multiplier schedule from `len` values.
//
// # Safety
// `multipliers` must point to `len` readable doubles; `out` must be writable.
enum BpStatus bp_schedule_scaled(const double *multipliers, size_t len, struct BpSchedule **out);

// # Safety
// `out` must be writable.
enum BpStatus bp_schedule_subthreshold(double threshold, double inflation, struct BpSchedule **out);

// # Safety
// `s` must come from this library and not have been freed. Null is ignored.
void bp_schedule_free(struct BpSchedule *s);

// Runs a campaign against a cost function. A null `schedule` means uniform
// pacing.
//
// # Safety
// Pointers must be live handles or valid structs; `out` must be writable.
enum BpStatus bp_simulate(const struct BpCampaignConfig *config,
                          const struct BpCostFn *cost,
                          const struct BpSchedule *schedule,
                          struct BpTrajectory **out);

// Number of recorded periods.
//
// # Safety
// `t` must be a live handle; `out` must be writable.
enum BpStatus bp_trajectory_len(const struct BpTrajectory *t, size_t *out);

// # Safety
// `t` must be a live handle; `out` must be writable.
enum BpStatus bp_trajectory_record(const struct BpTrajectory *t,
                                   size_t index,
                                   struct BpPeriodRecord *out);

// # Safety
// `t` must be a live handle; `out` must be writable.
enum BpStatus bp_trajectory_summary(const struct BpTrajectory *t, struct BpSummary *out);

// Spend report as JSON. `schedule` sets the target curve; null means
// uniform. `epsilon` enables the per-period violation count when finite.
//
// # Safety
// `t` must be a live handle; `out` must be writable. Free the string with
// [`bp_string_free`].
enum BpStatus bp_trajectory_report_json(const struct BpTrajectory *t,
                                        const struct BpSchedule *schedule,
                                        double epsilon,
                                        char **out);

// # Safety
// `t` must come from this library and not have been freed. Null is ignored.
void bp_trajectory_free(struct BpTrajectory *t);

enum BpRegime bp_classify_regime(double k);

// Fixed-point bid at the start of the campaign.
//
// # Safety
// `out` must be writable.
enum BpStatus bp_fixed_point(double budget,
                             size_t periods,
                             double coefficient,
                             double k,
                             double *out);

// Local multiplier of the linearized update at period `t`.
//
// # Safety
// `out` must be writable.
enum BpStatus bp_stability_multiplier(double k, size_t periods, size_t t, double *out);

// Upper bound on the periods needed to come within `eps` of the fixed
// point. Fails with `Regime` outside `0 < k < 2`.
//
// # Safety
// `out` must be writable.
enum BpStatus bp_convergence_time_bound(double eps,
                                        double budget,
                                        size_t periods,
                                        double coefficient,
                                        double k,
                                        double *out);

// Bound on the distance to the fixed point after `t` updates.
//
// # Safety
// `out` must be writable.
enum BpStatus bp_distance_bound(size_t t,
                                double budget,
                                size_t periods,
                                double coefficient,
                                double k,
                                double *out);

// Closed-form two-cycle of a capped campaign `min(C b^k, cap)`.
//
// # Safety
// `out` must be writable.
enum BpStatus bp_two_cycle_points(double budget,
                                  size_t periods,
                                  double coefficient,
                                  double k,
                                  double cap,
                                  struct BpCyclePair *out);

// Full analysis report as JSON. `cap` is ignored unless finite.
//
// # Safety
// `out` must be writable. Free the string with [`bp_string_free`].
enum BpStatus bp_analyze_json(double budget,
                              size_t periods,
                              double coefficient,
                              double k,
                              double cap,
                              double eps,
                              char **out);

// Synthetic bid log with the default traffic profile over `periods`
// periods.
//
// # Safety
// `out` must be writable.
enum BpStatus bp_bid_log_generate(uint64_t seed, size_t periods, struct BpBidLog **out);

// Loads a `period,impression,bid` CSV. Any malformed row fails the load;
// the message lists every rejected line.
//
// # Safety
// `path` must be a valid C string; `out` must be writable.
enum BpStatus bp_bid_log_load(const char *path, struct BpBidLog **out);

// # Safety
// `log` must be a live handle; `out` must be writable.
enum BpStatus bp_bid_log_len(const struct BpBidLog *log, size_t *out);

// Budget under which bidding the `win_fraction` quantile of impression
// maxima wins about that fraction of an average period, every period.
//
// # Safety
// `log` must be a live handle; `out` must be writable.
enum BpStatus bp_suggest_budget(const struct BpBidLog *log,
                                size_t periods,
                                double win_fraction,
                                double *out);

// Replays a campaign through first-price auctions on `log`. A null
// `schedule` means uniform pacing.
//
// # Safety
// Pointers must be live handles or valid structs; `out` must be writable.
enum BpStatus bp_replay(const struct BpCampaignConfig *config,
                        const struct BpBidLog *log,
                        const struct BpSchedule *schedule,
                        struct BpTrajectory **out);

// # Safety
// `log` must come from this library and not have been freed. Null is
// ignored.
void bp_bid_log_free(struct BpBidLog *log);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BUDGET_PACING_H */
