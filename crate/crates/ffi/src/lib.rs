//! C ABI over the pacing engine.
//!
//! Every function returns a [`BpStatus`] and writes results through out
//! pointers. On failure the message is kept per thread and can be read with
//! [`bp_last_error_message`]. Objects are opaque handles that must be released
//! with the matching `*_free` function; strings returned by the library are
//! released with [`bp_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use budget_pacing::analysis::{self, AnalysisError, Regime};
use budget_pacing::auction::{
    generate_bid_log, ingest_bid_log_path, replay_campaign, suggest_budget, BidLog, IngestMode, LogProfile,
    ReplayOptions,
};
use budget_pacing::cost::CostFn;
use budget_pacing::engine::{run_campaign, CampaignConfig, Clamp, PacingSchedule, StepStatus, Trajectory};
use budget_pacing::report::spend_report;

/// Result code of every entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    Pacing = 4,
    /// The requested quantity is undefined for this exponent.
    Regime = 5,
    Analysis = 6,
    Auction = 7,
    Io = 8,
    Panic = 9,
}

/// Status of the pacing step taken at the end of a period.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BpStepStatus {
    Active = 0,
    Suppressed = 1,
    Exhausted = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BpRegime {
    Unstable = 0,
    StableSublinear = 1,
    OneIteration = 2,
    StableSuperlinear = 3,
    GuardRailsRequired = 4,
}

/// Campaign settings. Set `initial_bid` to NaN for the default starting bid
/// and `impressions_per_period` to 0 when unknown.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct BpCampaignConfig {
    pub budget: f64,
    pub periods: usize,
    pub initial_bid: f64,
    pub tolerance: f64,
    pub impressions_per_period: u64,
    pub clamp_enabled: bool,
    pub clamp_min: f64,
    pub clamp_max: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct BpPeriodRecord {
    pub period: usize,
    pub bid: f64,
    pub cost: f64,
    /// NaN when no ratio was formed.
    pub alpha: f64,
    pub remaining: f64,
    pub multiplier: f64,
    pub status: BpStepStatus,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct BpSummary {
    pub total_spend: f64,
    pub spend_fraction: f64,
    /// -1 when the bids never settled.
    pub converged_at: i64,
    /// -1 when the campaign ran every period.
    pub early_exit_period: i64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct BpCyclePair {
    pub b_minus: f64,
    pub b_plus: f64,
    pub b_minus_on_power_branch: bool,
    pub b_plus_on_cap_branch: bool,
}

pub struct BpCostFn(CostFn);
pub struct BpSchedule(PacingSchedule);
pub struct BpTrajectory(Trajectory);
pub struct BpBidLog(BidLog);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(BpStatus, String);

type Outcome = Result<(), Failure>;

fn fail(status: BpStatus, e: impl ToString) -> Failure {
    Failure(status, e.to_string())
}

fn analysis_failure(e: AnalysisError) -> Failure {
    let status = match e {
        AnalysisError::Regime { .. } => BpStatus::Regime,
        _ => BpStatus::Analysis,
    };
    fail(status, e)
}

fn set_error(message: Option<String>) {
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = message.map(|m| CString::new(m.replace('\0', " ")).expect("nul bytes removed"));
    });
}

fn guard(f: impl FnOnce() -> Outcome) -> BpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(None);
            BpStatus::Ok
        }
        Ok(Err(Failure(status, message))) => {
            set_error(Some(message));
            status
        }
        Err(_) => {
            set_error(Some("internal panic".into()));
            BpStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref()
        .ok_or_else(|| fail(BpStatus::NullPointer, format!("{what} is null")))
}

unsafe fn write<T>(out: *mut T, value: T) -> Outcome {
    if out.is_null() {
        return Err(fail(BpStatus::NullPointer, "output pointer is null"));
    }
    out.write(value);
    Ok(())
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(fail(BpStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(BpStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn boxed<T>(out: *mut *mut T, value: T) -> Outcome {
    write(out, Box::into_raw(Box::new(value)))
}

unsafe fn json_out(out: *mut *mut c_char, value: &impl serde::Serialize) -> Outcome {
    let s = serde_json::to_string(value).map_err(|e| fail(BpStatus::Io, e))?;
    let c = CString::new(s).map_err(|e| fail(BpStatus::Io, e))?;
    write(out, c.into_raw())
}

fn to_config(c: &BpCampaignConfig) -> Result<CampaignConfig, Failure> {
    let mut config = CampaignConfig::new(c.budget, c.periods).map_err(|e| fail(BpStatus::InvalidArgument, e))?;
    if !c.initial_bid.is_nan() {
        config = config.with_initial_bid(c.initial_bid);
    }
    config = config.with_tolerance(c.tolerance);
    if c.impressions_per_period > 0 {
        config = config.with_impressions(c.impressions_per_period);
    }
    if c.clamp_enabled {
        let clamp = Clamp::new(c.clamp_min, c.clamp_max).map_err(|e| fail(BpStatus::InvalidArgument, e))?;
        config = config.with_clamp(clamp);
    }
    config.validate().map_err(|e| fail(BpStatus::InvalidArgument, e))?;
    Ok(config)
}

unsafe fn schedule_or_uniform<'a>(schedule: *const BpSchedule) -> &'a PacingSchedule {
    static UNIFORM: PacingSchedule = PacingSchedule::Uniform;
    schedule.as_ref().map_or(&UNIFORM, |s| &s.0)
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn bp_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn bp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by the library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn bp_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Defaults for a campaign: automatic starting bid, tolerance 1e-6, clamp
/// off with bounds (0.1, 10).
#[no_mangle]
pub extern "C" fn bp_config_default(budget: f64, periods: usize) -> BpCampaignConfig {
    let clamp = Clamp::default();
    BpCampaignConfig {
        budget,
        periods,
        initial_bid: f64::NAN,
        tolerance: budget_pacing::engine::DEFAULT_TOLERANCE,
        impressions_per_period: 0,
        clamp_enabled: false,
        clamp_min: clamp.min,
        clamp_max: clamp.max,
    }
}

/// Parses a cost expression such as `min(2*b^0.5,100)`.
///
/// # Safety
/// `expr` must be a valid C string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bp_cost_parse(expr: *const c_char, out: *mut *mut BpCostFn) -> BpStatus {
    guard(|| {
        let f: CostFn = text(expr, "expr")?.parse().map_err(|e| fail(BpStatus::Parse, e))?;
        boxed(out, BpCostFn(f))
    })
}

/// Builds `C b^k`, capped at `cap` when `cap` is finite.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bp_cost_monomial(coefficient: f64, k: f64, cap: f64, out: *mut *mut BpCostFn) -> BpStatus {
    guard(|| {
        let f = if cap.is_finite() {
            CostFn::capped_monomial(coefficient, k, cap)
        } else {
            CostFn::monomial(coefficient, k)
        }
        .map_err(|e| fail(BpStatus::InvalidArgument, e))?;
        boxed(out, BpCostFn(f))
    })
}

/// # Safety
/// `f` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bp_cost_evaluate(f: *const BpCostFn, bid: f64, out: *mut f64) -> BpStatus {
    guard(|| {
        let v = deref(f, "cost")?
            .0
            .evaluate(bid)
            .map_err(|e| fail(BpStatus::InvalidArgument, e))?;
        write(out, v)
    })
}

/// # Safety
/// `f` must come from this library and not have been freed. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn bp_cost_free(f: *mut BpCostFn) {
    if !f.is_null() {
        drop(Box::from_raw(f));
    }
}

/// Parses `uniform`, `scaled:<κ,...>` or `subthreshold:<τ>,<σ>`.
///
/// # Safety
/// `spec` must be a valid C string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bp_schedule_parse(spec: *const c_char, out: *mut *mut BpSchedule) -> BpStatus {
    guard(|| {
        let s: PacingSchedule = text(spec, "schedule")?.parse().map_err(|e| fail(BpStatus::Parse, e))?;
        boxed(out, BpSchedule(s))
    })
}

/// Spend-multiplier schedule from `len` values.
///
/// # Safety
/// `multipliers` must point to `len` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bp_schedule_scaled(
    multipliers: *const f64,
    len: usize,
    out: *mut *mut BpSchedule,
) -> BpStatus {
    guard(|| {
        if multipliers.is_null() || len == 0 {
            return Err(fail(BpStatus::InvalidArgument, "multipliers must be a non-empty array"));
        }
        let multipliers = std::slice::from_raw_parts(multipliers, len).to_vec();
        boxed(out, BpSchedule(PacingSchedule::Scaled { multipliers }))
    })
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bp_schedule_subthreshold(
    threshold: f64,
    inflation: f64,
    out: *mut *mut BpSchedule,
) -> BpStatus {
    guard(|| boxed(out, BpSchedule(PacingSchedule::Subthreshold { threshold, inflation })))
}

/// # Safety
/// `s` must come from this library and not have been freed. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn bp_schedule_free(s: *mut BpSchedule) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Runs a campaign against a cost function. A null `schedule` means uniform
/// pacing.
///
/// # Safety
/// Pointers must be live handles or valid structs; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bp_simulate(
    config: *const BpCampaignConfig,
    cost: *const BpCostFn,
    schedule: *const BpSchedule,
    out: *mut *mut BpTrajectory,
) -> BpStatus {
    guard(|| {
        let config = to_config(deref(config, "config")?)?;
        let mut f = deref(cost, "cost")?.0.clone();
        let traj =
            run_campaign(&config, &mut f, schedule_or_uniform(schedule)).map_err(|e| fail(BpStatus::Pacing, e))?;
        boxed(out, BpTrajectory(traj))
    })
}

/// Number of recorded periods.
///
/// # Safety
/// `t` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bp_trajectory_len(t: *const BpTrajectory, out: *mut usize) -> BpStatus {
    guard(|| write(out, deref(t, "trajectory")?.0.records.len()))
}

/// # Safety
/// `t` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bp_trajectory_record(
    t: *const BpTrajectory,
    index: usize,
    out: *mut BpPeriodRecord,
) -> BpStatus {
    guard(|| {
        let traj = &deref(t, "trajectory")?.0;
        let r = traj.records.get(index).ok_or_else(|| {
            fail(
                BpStatus::InvalidArgument,
                format!("record {index} out of range ({} records)", traj.records.len()),
            )
        })?;
        write(
            out,
            BpPeriodRecord {
                period: r.period,
                bid: r.bid,
                cost: r.cost,
                alpha: r.alpha.unwrap_or(f64::NAN),
                remaining: r.remaining,
                multiplier: r.multiplier,
                status: match r.status {
                    StepStatus::Active => BpStepStatus::Active,
                    StepStatus::Suppressed => BpStepStatus::Suppressed,
                    StepStatus::Exhausted => BpStepStatus::Exhausted,
                },
            },
        )
    })
}

/// # Safety
/// `t` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bp_trajectory_summary(t: *const BpTrajectory, out: *mut BpSummary) -> BpStatus {
    guard(|| {
        let traj = &deref(t, "trajectory")?.0;
        let early_exit_period = match traj.termination {
            budget_pacing::engine::Termination::EarlyExit { period } => period as i64,
            budget_pacing::engine::Termination::Completed => -1,
        };
        write(
            out,
            BpSummary {
                total_spend: traj.total_spend(),
                spend_fraction: traj.spend_fraction(),
                converged_at: traj.converged_at().map_or(-1, |t| t as i64),
                early_exit_period,
            },
        )
    })
}

/// Spend report as JSON. `schedule` sets the target curve; null means
/// uniform. `epsilon` enables the per-period violation count when finite.
///
/// # Safety
/// `t` must be a live handle; `out` must be writable. Free the string with
/// [`bp_string_free`].
#[no_mangle]
pub unsafe extern "C" fn bp_trajectory_report_json(
    t: *const BpTrajectory,
    schedule: *const BpSchedule,
    epsilon: f64,
    out: *mut *mut c_char,
) -> BpStatus {
    guard(|| {
        let traj = &deref(t, "trajectory")?.0;
        let eps = epsilon.is_finite().then_some(epsilon);
        let report = spend_report(traj, schedule_or_uniform(schedule), eps).map_err(|e| fail(BpStatus::Pacing, e))?;
        json_out(out, &report)
    })
}

/// # Safety
/// `t` must come from this library and not have been freed. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn bp_trajectory_free(t: *mut BpTrajectory) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

#[no_mangle]
pub extern "C" fn bp_classify_regime(k: f64) -> BpRegime {
    match analysis::classify_regime(k) {
        Regime::Unstable => BpRegime::Unstable,
        Regime::StableSublinear => BpRegime::StableSublinear,
        Regime::OneIteration => BpRegime::OneIteration,
        Regime::StableSuperlinear => BpRegime::StableSuperlinear,
        Regime::GuardRailsRequired => BpRegime::GuardRailsRequired,
    }
}

/// Fixed-point bid at the start of the campaign.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bp_fixed_point(
    budget: f64,
    periods: usize,
    coefficient: f64,
    k: f64,
    out: *mut f64,
) -> BpStatus {
    guard(|| {
        write(
            out,
            analysis::fixed_point(budget, periods, coefficient, k, 0, &[]).map_err(analysis_failure)?,
        )
    })
}

/// Local multiplier of the linearized update at period `t`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bp_stability_multiplier(k: f64, periods: usize, t: usize, out: *mut f64) -> BpStatus {
    guard(|| {
        write(
            out,
            analysis::stability_multiplier(k, periods, t)
                .map_err(analysis_failure)?
                .lambda,
        )
    })
}

/// Upper bound on the periods needed to come within `eps` of the fixed
/// point. Fails with `Regime` outside `0 < k < 2`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bp_convergence_time_bound(
    eps: f64,
    budget: f64,
    periods: usize,
    coefficient: f64,
    k: f64,
    out: *mut f64,
) -> BpStatus {
    guard(|| {
        write(
            out,
            analysis::convergence_time_bound(eps, budget, periods, coefficient, k).map_err(analysis_failure)?,
        )
    })
}

/// Bound on the distance to the fixed point after `t` updates.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bp_distance_bound(
    t: usize,
    budget: f64,
    periods: usize,
    coefficient: f64,
    k: f64,
    out: *mut f64,
) -> BpStatus {
    guard(|| {
        write(
            out,
            analysis::distance_bound(t, budget, periods, coefficient, k).map_err(analysis_failure)?,
        )
    })
}

/// Closed-form two-cycle of a capped campaign `min(C b^k, cap)`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bp_two_cycle_points(
    budget: f64,
    periods: usize,
    coefficient: f64,
    k: f64,
    cap: f64,
    out: *mut BpCyclePair,
) -> BpStatus {
    guard(|| {
        let p = analysis::two_cycle_points(budget, periods, coefficient, k, cap).map_err(analysis_failure)?;
        write(
            out,
            BpCyclePair {
                b_minus: p.b_minus,
                b_plus: p.b_plus,
                b_minus_on_power_branch: p.case_consistent[0],
                b_plus_on_cap_branch: p.case_consistent[1],
            },
        )
    })
}

/// Full analysis report as JSON. `cap` is ignored unless finite.
///
/// # Safety
/// `out` must be writable. Free the string with [`bp_string_free`].
#[no_mangle]
pub unsafe extern "C" fn bp_analyze_json(
    budget: f64,
    periods: usize,
    coefficient: f64,
    k: f64,
    cap: f64,
    eps: f64,
    out: *mut *mut c_char,
) -> BpStatus {
    guard(|| {
        let cap = cap.is_finite().then_some(cap);
        let report = analysis::analyze(budget, periods, coefficient, k, cap, eps).map_err(analysis_failure)?;
        json_out(out, &report)
    })
}

/// Synthetic bid log with the default traffic profile over `periods`
/// periods.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bp_bid_log_generate(seed: u64, periods: usize, out: *mut *mut BpBidLog) -> BpStatus {
    guard(|| {
        let profile = LogProfile {
            periods,
            ..LogProfile::default()
        };
        let log = generate_bid_log(seed, &profile).map_err(|e| fail(BpStatus::Auction, e))?;
        boxed(out, BpBidLog(log))
    })
}

/// Loads a `period,impression,bid` CSV. Any malformed row fails the load;
/// the message lists every rejected line.
///
/// # Safety
/// `path` must be a valid C string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bp_bid_log_load(path: *const c_char, out: *mut *mut BpBidLog) -> BpStatus {
    guard(|| {
        let path = text(path, "path")?;
        let ingested = ingest_bid_log_path(Path::new(path), IngestMode::Accumulate).map_err(|e| {
            let status = match e {
                budget_pacing::auction::AuctionError::Io(_) => BpStatus::Io,
                _ => BpStatus::Auction,
            };
            fail(status, e)
        })?;
        if !ingested.rejects.is_empty() {
            let lines: Vec<String> = ingested
                .rejects
                .iter()
                .map(|r| format!("line {}: {}", r.line, r.message))
                .collect();
            return Err(fail(BpStatus::Auction, lines.join("; ")));
        }
        boxed(out, BpBidLog(ingested.log))
    })
}

/// # Safety
/// `log` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bp_bid_log_len(log: *const BpBidLog, out: *mut usize) -> BpStatus {
    guard(|| write(out, deref(log, "log")?.0.len()))
}

/// Budget under which bidding the `win_fraction` quantile of impression
/// maxima wins about that fraction of an average period, every period.
///
/// # Safety
/// `log` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bp_suggest_budget(
    log: *const BpBidLog,
    periods: usize,
    win_fraction: f64,
    out: *mut f64,
) -> BpStatus {
    guard(|| {
        let b = suggest_budget(&deref(log, "log")?.0, periods, win_fraction).map_err(|e| fail(BpStatus::Auction, e))?;
        write(out, b)
    })
}

/// Replays a campaign through first-price auctions on `log`. A null
/// `schedule` means uniform pacing.
///
/// # Safety
/// Pointers must be live handles or valid structs; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bp_replay(
    config: *const BpCampaignConfig,
    log: *const BpBidLog,
    schedule: *const BpSchedule,
    out: *mut *mut BpTrajectory,
) -> BpStatus {
    guard(|| {
        let config = to_config(deref(config, "config")?)?;
        let log = &deref(log, "log")?.0;
        let replay = replay_campaign(&config, log, schedule_or_uniform(schedule), ReplayOptions::default())
            .map_err(|e| fail(BpStatus::Auction, e))?;
        boxed(out, BpTrajectory(replay.trajectory))
    })
}

/// # Safety
/// `log` must come from this library and not have been freed. Null is
/// ignored.
#[no_mangle]
pub unsafe extern "C" fn bp_bid_log_free(log: *mut BpBidLog) {
    if !log.is_null() {
        drop(Box::from_raw(log));
    }
}
