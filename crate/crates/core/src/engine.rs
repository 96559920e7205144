//! The pacing feedback loop.
//!
//! After each period the bid is rescaled by the ratio of the spend still
//! wanted per remaining period to the spend just observed:
//!
//! ```text
//! b_{t+1} = (B_r / (T - t)) / c_t * b_t,    B_r = B - (c_0 + ... + c_t)
//! ```
//!
//! Non-uniform pacing swaps `B` for `κ_t B` in the ratio; subthreshold
//! budgets swap it for an inflated `σ B` while still debiting the real one.

use std::fmt;
use std::io;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cost::{CostError, CostFn};

pub const DEFAULT_TOLERANCE: f64 = 1e-6;

/// Number of consecutive small bid changes required before a campaign is
/// declared converged.
pub const CONVERGENCE_RUN: usize = 3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("budget must be positive and finite, got {0}")]
    Budget(f64),
    #[error("a campaign needs at least 2 periods, got {0}")]
    Periods(usize),
    #[error("initial bid must be positive and finite, got {0}")]
    InitialBid(f64),
    #[error("tolerance must be positive and finite, got {0}")]
    Tolerance(f64),
    #[error("impressions per period must be positive")]
    Impressions,
    #[error("clamp must satisfy 0 < min < 1 < max, got ({min}, {max})")]
    Clamp { min: f64, max: f64 },
    #[error("invalid schedule: {0}")]
    Schedule(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PacingError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("period {period} is outside a {periods}-period campaign")]
    PeriodOutOfRange { period: usize, periods: usize },
    #[error("period {period}: observed cost {cost} is not a non-negative finite number")]
    InvalidCost { period: usize, cost: f64 },
    #[error("period {period}: zero observed cost leaves the pacing ratio undefined (clamping is disabled)")]
    ZeroCost { period: usize },
    #[error("period {period}: current bid {bid} is not a positive finite number")]
    InvalidBid { period: usize, bid: f64 },
    #[error("period {period}: multiplier {value} is outside (0, 1]")]
    Multiplier { period: usize, value: f64 },
    #[error("period {period}: updated bid is not finite")]
    NonFiniteBid { period: usize },
    #[error("period {period}: {source}")]
    Cost {
        period: usize,
        #[source]
        source: CostError,
    },
}

/// Bounds on the per-step scaling factor `α`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Clamp {
    pub min: f64,
    pub max: f64,
}

impl Default for Clamp {
    fn default() -> Self {
        Clamp { min: 0.1, max: 10.0 }
    }
}

impl Clamp {
    pub fn new(min: f64, max: f64) -> Result<Self, ConfigError> {
        let c = Clamp { min, max };
        c.validate()?;
        Ok(c)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        if self.min > 0.0 && self.min < 1.0 && self.max > 1.0 && self.max.is_finite() {
            Ok(())
        } else {
            Err(ConfigError::Clamp {
                min: self.min,
                max: self.max,
            })
        }
    }

    pub fn apply(&self, alpha: f64) -> f64 {
        alpha.clamp(self.min, self.max)
    }
}

fn default_tolerance() -> f64 {
    DEFAULT_TOLERANCE
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignConfig {
    pub budget: f64,
    pub periods: usize,
    /// `None` falls back to `B / (n T)` when impressions per period are
    /// known, else `B / T`.
    #[serde(default)]
    pub initial_bid: Option<f64>,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default)]
    pub impressions_per_period: Option<u64>,
    #[serde(default)]
    pub clamp: Clamp,
    #[serde(default)]
    pub clamp_enabled: bool,
}

impl CampaignConfig {
    pub fn new(budget: f64, periods: usize) -> Result<Self, ConfigError> {
        let c = CampaignConfig {
            budget,
            periods,
            initial_bid: None,
            tolerance: DEFAULT_TOLERANCE,
            impressions_per_period: None,
            clamp: Clamp::default(),
            clamp_enabled: false,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn with_initial_bid(mut self, bid: f64) -> Self {
        self.initial_bid = Some(bid);
        self
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn with_impressions(mut self, n: u64) -> Self {
        self.impressions_per_period = Some(n);
        self
    }

    pub fn with_clamp(mut self, clamp: Clamp) -> Self {
        self.clamp = clamp;
        self.clamp_enabled = true;
        self
    }

    pub fn without_clamp(mut self) -> Self {
        self.clamp_enabled = false;
        self
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.budget > 0.0 && self.budget.is_finite()) {
            return Err(ConfigError::Budget(self.budget));
        }
        if self.periods < 2 {
            return Err(ConfigError::Periods(self.periods));
        }
        if let Some(b) = self.initial_bid {
            if !(b > 0.0 && b.is_finite()) {
                return Err(ConfigError::InitialBid(b));
            }
        }
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(ConfigError::Tolerance(self.tolerance));
        }
        if self.impressions_per_period == Some(0) {
            return Err(ConfigError::Impressions);
        }
        if self.clamp_enabled {
            self.clamp.validate()?;
        }
        Ok(())
    }

    pub fn starting_bid(&self) -> f64 {
        self.initial_bid.unwrap_or_else(|| {
            let n = self.impressions_per_period.unwrap_or(1) as f64;
            self.budget / (n * self.periods as f64)
        })
    }

    pub fn active_clamp(&self) -> Option<Clamp> {
        self.clamp_enabled.then_some(self.clamp)
    }
}

/// How the budget entering the pacing ratio evolves over the campaign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum PacingSchedule {
    Uniform,
    /// Per-period multipliers `κ_t ∈ (0, 1]` on the budget. A list shorter
    /// than the campaign is stretched into equal piecewise-constant segments.
    Scaled {
        multipliers: Vec<f64>,
    },
    /// Budgets below `threshold` are paced as if they were `inflation` times
    /// larger, which exhausts them early.
    Subthreshold {
        threshold: f64,
        inflation: f64,
    },
}

impl PacingSchedule {
    pub fn validate(&self, periods: usize) -> Result<(), ConfigError> {
        match self {
            PacingSchedule::Uniform => Ok(()),
            PacingSchedule::Scaled { multipliers } => {
                if multipliers.is_empty() {
                    return Err(ConfigError::Schedule("no multipliers given".into()));
                }
                if multipliers.len() > periods {
                    return Err(ConfigError::Schedule(format!(
                        "{} multipliers for a {periods}-period campaign",
                        multipliers.len()
                    )));
                }
                if let Some(k) = multipliers.iter().find(|k| !(**k > 0.0 && **k <= 1.0)) {
                    return Err(ConfigError::Schedule(format!("multiplier {k} is outside (0, 1]")));
                }
                Ok(())
            }
            PacingSchedule::Subthreshold { threshold, inflation } => {
                if !(*threshold > 0.0 && threshold.is_finite()) {
                    return Err(ConfigError::Schedule(format!(
                        "threshold must be positive, got {threshold}"
                    )));
                }
                if !(*inflation > 1.0 && inflation.is_finite()) {
                    return Err(ConfigError::Schedule(format!(
                        "inflation must exceed 1, got {inflation}"
                    )));
                }
                Ok(())
            }
        }
    }

    /// `κ_t` for scaled schedules, 1 otherwise.
    pub fn multiplier(&self, period: usize, periods: usize) -> f64 {
        match self {
            PacingSchedule::Scaled { multipliers } => {
                let idx = period * multipliers.len() / periods.max(1);
                multipliers[idx.min(multipliers.len() - 1)]
            }
            _ => 1.0,
        }
    }

    /// Budget used in the pacing ratio at `period`.
    pub fn ratio_budget(&self, budget: f64, period: usize, periods: usize) -> f64 {
        match self {
            PacingSchedule::Uniform => budget,
            PacingSchedule::Scaled { .. } => self.multiplier(period, periods) * budget,
            PacingSchedule::Subthreshold { threshold, inflation } => {
                if budget < *threshold {
                    inflation * budget
                } else {
                    budget
                }
            }
        }
    }
}

impl fmt::Display for PacingSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PacingSchedule::Uniform => f.write_str("uniform"),
            PacingSchedule::Scaled { multipliers } => {
                f.write_str("scaled:")?;
                for (i, k) in multipliers.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{k}")?;
                }
                Ok(())
            }
            PacingSchedule::Subthreshold { threshold, inflation } => write!(f, "subthreshold:{threshold},{inflation}"),
        }
    }
}

/// Parses `uniform`, `scaled:<κ,κ,...>` or `subthreshold:<τ>,<σ>`.
impl FromStr for PacingSchedule {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let bad = |msg: String| ConfigError::Schedule(msg);
        let numbers = |list: &str| -> Result<Vec<f64>, ConfigError> {
            list.split(',')
                .map(|x| {
                    x.trim()
                        .parse::<f64>()
                        .map_err(|_| bad(format!("'{x}' is not a number")))
                })
                .collect()
        };
        if s == "uniform" {
            return Ok(PacingSchedule::Uniform);
        }
        if let Some(rest) = s.strip_prefix("scaled:") {
            return Ok(PacingSchedule::Scaled {
                multipliers: numbers(rest)?,
            });
        }
        if let Some(rest) = s.strip_prefix("subthreshold:") {
            let v = numbers(rest)?;
            let [threshold, inflation] = v[..] else {
                return Err(bad("subthreshold needs '<threshold>,<inflation>'".into()));
            };
            return Ok(PacingSchedule::Subthreshold { threshold, inflation });
        }
        Err(bad(format!(
            "unknown schedule '{s}' (expected uniform, scaled:..., subthreshold:...)"
        )))
    }
}

/// Mutable campaign state between periods.
#[derive(Debug, Clone, PartialEq)]
pub struct PacingState {
    period: usize,
    bid: f64,
    costs: Vec<f64>,
    spent: f64,
    exited: bool,
    /// Most recent period that actually bid, kept so a suppressed schedule
    /// can resume from a real cost observation.
    last_active: Option<(f64, f64)>,
}

impl PacingState {
    pub fn new(initial_bid: f64) -> Self {
        PacingState {
            period: 0,
            bid: initial_bid,
            costs: Vec::new(),
            spent: 0.0,
            exited: false,
            last_active: None,
        }
    }

    /// State at period `t = costs.len()` after the given spend history.
    pub fn with_history(bid: f64, costs: &[f64]) -> Self {
        let mut spent = 0.0;
        for c in costs {
            spent += c;
        }
        PacingState {
            period: costs.len(),
            bid,
            costs: costs.to_vec(),
            spent,
            exited: false,
            last_active: None,
        }
    }

    pub fn period(&self) -> usize {
        self.period
    }

    pub fn bid(&self) -> f64 {
        self.bid
    }

    pub fn costs(&self) -> &[f64] {
        &self.costs
    }

    pub fn spent(&self) -> f64 {
        self.spent
    }

    pub fn remaining(&self, budget: f64) -> f64 {
        budget - self.spent
    }

    pub fn exited(&self) -> bool {
        self.exited
    }

    /// Records the period's cost and moves to the bid chosen by `step`.
    pub fn apply(&mut self, cost: f64, step: &Step, periods: usize) {
        if self.bid > 0.0 {
            self.last_active = Some((self.bid, cost));
        }
        self.costs.push(cost);
        self.spent += cost;
        self.period += 1;
        self.bid = step.next_bid;
        if step.status == StepStatus::Exhausted || self.period >= periods {
            self.exited = true;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepStatus {
    Active,
    /// The virtual remainder is used up; no bid this coming period.
    Suppressed,
    /// The real budget is used up; the campaign ends.
    Exhausted,
}

impl StepStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            StepStatus::Active => "active",
            StepStatus::Suppressed => "suppressed",
            StepStatus::Exhausted => "exhausted",
        }
    }
}

/// Outcome of one pacing update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub next_bid: f64,
    /// Scaling factor applied to the bid, after clamping. `None` when no
    /// ratio was formed.
    pub alpha: Option<f64>,
    /// `B - Σ c_i`, including the cost just observed.
    pub remaining: f64,
    /// The same remainder measured against the budget used in the ratio.
    pub ratio_remaining: f64,
    pub status: StepStatus,
}

fn check_inputs(config: &CampaignConfig, state: &PacingState, cost: f64) -> Result<(), PacingError> {
    let t = state.period;
    if t >= config.periods {
        return Err(PacingError::PeriodOutOfRange {
            period: t,
            periods: config.periods,
        });
    }
    if !(cost >= 0.0 && cost.is_finite()) {
        return Err(PacingError::InvalidCost { period: t, cost });
    }
    if !(state.bid >= 0.0 && state.bid.is_finite()) {
        return Err(PacingError::InvalidBid {
            period: t,
            bid: state.bid,
        });
    }
    Ok(())
}

fn step_against(
    config: &CampaignConfig,
    state: &PacingState,
    cost: f64,
    ratio_budget: f64,
) -> Result<Step, PacingError> {
    check_inputs(config, state, cost)?;
    let t = state.period;
    let spent = state.spent + cost;
    let remaining = config.budget - spent;
    let ratio_remaining = ratio_budget - spent;
    if remaining <= 0.0 {
        return Ok(Step {
            next_bid: 0.0,
            alpha: None,
            remaining,
            ratio_remaining,
            status: StepStatus::Exhausted,
        });
    }
    if ratio_remaining <= 0.0 {
        return Ok(Step {
            next_bid: 0.0,
            alpha: None,
            remaining,
            ratio_remaining,
            status: StepStatus::Suppressed,
        });
    }

    // A suppressed period has no observation of its own; rescale the last
    // bid that did produce one.
    let (bid, observed) = if state.bid == 0.0 {
        state
            .last_active
            .ok_or(PacingError::InvalidBid { period: t, bid: 0.0 })?
    } else {
        (state.bid, cost)
    };

    let desired = ratio_remaining / (config.periods - t) as f64;
    let alpha = if observed == 0.0 {
        match config.active_clamp() {
            Some(c) => c.max,
            None => return Err(PacingError::ZeroCost { period: t }),
        }
    } else {
        let raw = desired / observed;
        config.active_clamp().map_or(raw, |c| c.apply(raw))
    };
    let next_bid = alpha * bid;
    if !next_bid.is_finite() {
        return Err(PacingError::NonFiniteBid { period: t });
    }
    Ok(Step {
        next_bid,
        alpha: Some(alpha),
        remaining,
        ratio_remaining,
        status: StepStatus::Active,
    })
}

/// One uniform-pacing update given the cost `cost` observed at the current
/// period.
pub fn pace_step(config: &CampaignConfig, state: &PacingState, cost: f64) -> Result<Step, PacingError> {
    step_against(config, state, cost, config.budget)
}

/// Non-uniform update: the ratio is formed against `κ_t B`. Once spend
/// passes `κ_t B` the next bid is suppressed to zero while real budget
/// remains.
pub fn scaled_pace_step(
    config: &CampaignConfig,
    state: &PacingState,
    cost: f64,
    multiplier: f64,
) -> Result<Step, PacingError> {
    if !(multiplier > 0.0 && multiplier <= 1.0) {
        return Err(PacingError::Multiplier {
            period: state.period,
            value: multiplier,
        });
    }
    step_against(config, state, cost, multiplier * config.budget)
}

/// Subthreshold update: budgets under `threshold` are paced against the
/// virtual budget `inflation * B`, with exit still governed by `B`.
pub fn subthreshold_pace_step(
    config: &CampaignConfig,
    state: &PacingState,
    cost: f64,
    threshold: f64,
    inflation: f64,
) -> Result<Step, PacingError> {
    let schedule = PacingSchedule::Subthreshold { threshold, inflation };
    schedule.validate(config.periods)?;
    let ratio_budget = schedule.ratio_budget(config.budget, state.period, config.periods);
    step_against(config, state, cost, ratio_budget)
}

/// What the campaign loop learns from submitting a bid for one period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub cost: f64,
    /// The spend was cut short by the remaining budget.
    pub budget_limited: bool,
}

/// A source of per-period costs: a closed-form latent function or an
/// empirical mechanism such as an auction replay. Sources are queried once
/// per period, in order, by a single campaign loop.
pub trait CostSource {
    fn observe(&mut self, period: usize, bid: f64, remaining: f64) -> Result<Observation, CostError>;
}

impl CostSource for CostFn {
    fn observe(&mut self, _period: usize, bid: f64, remaining: f64) -> Result<Observation, CostError> {
        let raw = self.evaluate(bid)?;
        Ok(if raw >= remaining {
            Observation {
                cost: remaining,
                budget_limited: true,
            }
        } else {
            Observation {
                cost: raw,
                budget_limited: false,
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodRecord {
    pub period: usize,
    pub bid: f64,
    pub cost: f64,
    pub alpha: Option<f64>,
    pub remaining: f64,
    pub multiplier: f64,
    pub status: StepStatus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Termination {
    Completed,
    EarlyExit { period: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub budget: f64,
    pub periods: usize,
    pub tolerance: f64,
    pub records: Vec<PeriodRecord>,
    /// Bid the loop would submit after the last recorded period.
    pub final_bid: f64,
    pub termination: Termination,
}

impl Trajectory {
    pub fn bids(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.bid).collect()
    }

    pub fn costs(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.cost).collect()
    }

    pub fn total_spend(&self) -> f64 {
        let mut s = 0.0;
        for r in &self.records {
            s += r.cost;
        }
        s
    }

    pub fn spend_fraction(&self) -> f64 {
        self.total_spend() / self.budget
    }

    /// Bids including the next bid after the last period, while the campaign
    /// is still live.
    pub fn bid_path(&self) -> Vec<f64> {
        let mut b = self.bids();
        if self.termination == Termination::Completed && self.final_bid > 0.0 {
            b.push(self.final_bid);
        }
        b
    }

    /// First period from which successive bids stay within the campaign
    /// tolerance for [`CONVERGENCE_RUN`] consecutive steps.
    pub fn converged_at(&self) -> Option<usize> {
        sustained_convergence(&self.bid_path(), self.tolerance, CONVERGENCE_RUN)
    }

    /// Writes `t,bid,cost,alpha,remaining,multiplier,status`, one row per
    /// period in order.
    pub fn write_csv<W: io::Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "bid", "cost", "alpha", "remaining", "multiplier", "status"])?;
        for r in &self.records {
            w.write_record([
                r.period.to_string(),
                r.bid.to_string(),
                r.cost.to_string(),
                r.alpha.map(|a| a.to_string()).unwrap_or_default(),
                r.remaining.to_string(),
                r.multiplier.to_string(),
                r.status.as_str().to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// First index `t` with `|b_{i+1} - b_i| < tol` for every `i` in
/// `t..t + run`.
pub fn sustained_convergence(bids: &[f64], tol: f64, run: usize) -> Option<usize> {
    let small: Vec<bool> = bids.windows(2).map(|w| (w[1] - w[0]).abs() < tol).collect();
    if small.len() < run {
        return None;
    }
    (0..=small.len() - run).find(|&t| small[t..t + run].iter().all(|&s| s))
}

/// Runs a full campaign against `source`.
///
/// Spend in any period is limited to the budget still available, so the
/// recorded total never exceeds `B`.
pub fn run_campaign(
    config: &CampaignConfig,
    source: &mut dyn CostSource,
    schedule: &PacingSchedule,
) -> Result<Trajectory, PacingError> {
    config.validate()?;
    schedule.validate(config.periods)?;
    let periods = config.periods;
    let mut state = PacingState::new(config.starting_bid());
    let mut records = Vec::with_capacity(periods);
    let mut termination = Termination::Completed;

    for t in 0..periods {
        let bid = state.bid();
        let available = state.remaining(config.budget);
        let Observation {
            mut cost,
            mut budget_limited,
        } = if bid > 0.0 {
            source
                .observe(t, bid, available)
                .map_err(|source| PacingError::Cost { period: t, source })?
        } else {
            Observation {
                cost: 0.0,
                budget_limited: false,
            }
        };
        if !(cost >= 0.0 && cost.is_finite()) {
            return Err(PacingError::InvalidCost { period: t, cost });
        }
        if cost >= available {
            cost = available;
            budget_limited = true;
        }
        while state.spent() + cost > config.budget {
            cost = cost.next_down();
        }

        let multiplier = schedule.multiplier(t, periods);
        let mut step = match schedule {
            PacingSchedule::Uniform => pace_step(config, &state, cost),
            PacingSchedule::Scaled { .. } => scaled_pace_step(config, &state, cost, multiplier),
            PacingSchedule::Subthreshold { threshold, inflation } => {
                subthreshold_pace_step(config, &state, cost, *threshold, *inflation)
            }
        }?;
        if budget_limited && cost == available {
            step.status = StepStatus::Exhausted;
            step.next_bid = 0.0;
            step.alpha = None;
        }
        records.push(PeriodRecord {
            period: t,
            bid,
            cost,
            alpha: step.alpha,
            remaining: step.remaining,
            multiplier,
            status: step.status,
        });
        state.apply(cost, &step, periods);
        if step.status == StepStatus::Exhausted {
            if t + 1 < periods {
                termination = Termination::EarlyExit { period: t };
            }
            break;
        }
    }

    Ok(Trajectory {
        budget: config.budget,
        periods,
        tolerance: config.tolerance,
        records,
        final_bid: state.bid(),
        termination,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(budget: f64, periods: usize) -> CampaignConfig {
        CampaignConfig::new(budget, periods).unwrap()
    }

    #[test]
    fn linear_cost_first_step() {
        let c = cfg(100.0, 10);
        let s = PacingState::new(1.0);
        let step = pace_step(&c, &s, 2.0).unwrap();
        // (98 / (2 * 10)) * 1
        assert!((step.next_bid - 4.9).abs() < 1e-12);
        assert_eq!(step.remaining, 98.0);
        assert_eq!(step.status, StepStatus::Active);
    }

    #[test]
    fn linear_cost_is_fixed_after_one_step() {
        let c = cfg(100.0, 10);
        let s = PacingState::with_history(4.9, &[2.0]);
        let step = pace_step(&c, &s, 9.8).unwrap();
        // (88.2 / (9.8 * 9)) * 4.9
        assert!((step.next_bid - 4.9).abs() < 1e-12);
    }

    #[test]
    fn on_target_cost_keeps_the_bid() {
        let c = cfg(100.0, 10);
        // c_t = (B - c_t) / (T - t)  =>  c_t = B / (T + 1) at t = 0
        let cost = 100.0 / 11.0;
        let step = pace_step(&c, &PacingState::new(3.0), cost).unwrap();
        assert!((step.alpha.unwrap() - 1.0).abs() < 1e-15);
        assert!((step.next_bid - 3.0).abs() < 1e-14);
    }

    #[test]
    fn zero_cost_is_an_error_without_clamp() {
        let c = cfg(100.0, 10);
        assert_eq!(
            pace_step(&c, &PacingState::new(1.0), 0.0),
            Err(PacingError::ZeroCost { period: 0 })
        );
    }

    #[test]
    fn zero_cost_uses_clamp_max() {
        let c = cfg(100.0, 10).with_clamp(Clamp::default());
        let step = pace_step(&c, &PacingState::new(1.5), 0.0).unwrap();
        assert_eq!(step.alpha, Some(10.0));
        assert_eq!(step.next_bid, 15.0);
    }

    #[test]
    fn clamp_bounds_the_ratio() {
        let c = cfg(100.0, 10).with_clamp(Clamp::new(0.5, 2.0).unwrap());
        let up = pace_step(&c, &PacingState::new(1.0), 0.01).unwrap();
        assert_eq!(up.next_bid, 2.0);
        let down = pace_step(&c, &PacingState::new(1.0), 90.0).unwrap();
        assert_eq!(down.next_bid, 0.5);
    }

    #[test]
    fn exhausting_the_budget_exits() {
        let c = cfg(100.0, 10);
        let s = PacingState::with_history(1.0, &[60.0]);
        let step = pace_step(&c, &s, 40.0).unwrap();
        assert_eq!(step.status, StepStatus::Exhausted);
        assert_eq!(step.next_bid, 0.0);
    }

    #[test]
    fn period_past_horizon_is_rejected() {
        let c = cfg(100.0, 2);
        let s = PacingState::with_history(1.0, &[1.0, 1.0]);
        assert!(matches!(
            pace_step(&c, &s, 1.0),
            Err(PacingError::PeriodOutOfRange { .. })
        ));
    }

    #[test]
    fn scaled_step_uses_virtual_budget() {
        let c = cfg(100.0, 10);
        let step = scaled_pace_step(&c, &PacingState::new(1.0), 2.0, 0.5).unwrap();
        // ((50 - 2) / (2 * 10)) * 1
        assert!((step.next_bid - 2.4).abs() < 1e-12);
        assert_eq!(step.remaining, 98.0);
        assert_eq!(step.ratio_remaining, 48.0);
    }

    #[test]
    fn scaled_step_with_unit_multiplier_matches_uniform() {
        let c = cfg(100.0, 10);
        let s = PacingState::with_history(2.5, &[3.0, 7.0]);
        let a = pace_step(&c, &s, 4.0).unwrap();
        let b = scaled_pace_step(&c, &s, 4.0, 1.0).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn scaled_step_suppresses_when_virtual_budget_is_spent() {
        let c = cfg(100.0, 10);
        let s = PacingState::with_history(1.0, &[20.0]);
        let step = scaled_pace_step(&c, &s, 15.0, 0.3).unwrap();
        assert_eq!(step.status, StepStatus::Suppressed);
        assert_eq!(step.next_bid, 0.0);
        assert!(step.remaining > 0.0);
        assert!(scaled_pace_step(&c, &s, 1.0, 0.0).is_err());
        assert!(scaled_pace_step(&c, &s, 1.0, 1.5).is_err());
    }

    #[test]
    fn subthreshold_inflates_only_small_budgets() {
        let c = cfg(50_000.0, 1000);
        let s = PacingState::new(1.0);
        let step = subthreshold_pace_step(&c, &s, 50.0, 75_000.0, 1.5).unwrap();
        // virtual budget 75000 in the ratio, real budget for the remainder
        assert!((step.next_bid - (75_000.0 - 50.0) / (50.0 * 1000.0)).abs() < 1e-12);
        assert_eq!(step.remaining, 50_000.0 - 50.0);

        let big = cfg(80_000.0, 1000);
        let a = subthreshold_pace_step(&big, &s, 50.0, 75_000.0, 1.5).unwrap();
        let b = pace_step(&big, &s, 50.0).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn schedule_parsing_round_trips() {
        for text in ["uniform", "scaled:0.2,0.6,1", "subthreshold:75000,1.5"] {
            let s: PacingSchedule = text.parse().unwrap();
            assert_eq!(s.to_string(), text);
        }
        assert!("scaled:".parse::<PacingSchedule>().is_err());
        assert!("subthreshold:1".parse::<PacingSchedule>().is_err());
        assert!("weekly".parse::<PacingSchedule>().is_err());
    }

    #[test]
    fn short_multiplier_lists_are_stretched() {
        let s = PacingSchedule::Scaled {
            multipliers: vec![0.2, 0.6, 1.0],
        };
        let k: Vec<f64> = (0..9).map(|t| s.multiplier(t, 9)).collect();
        assert_eq!(k, [0.2, 0.2, 0.2, 0.6, 0.6, 0.6, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn config_validation() {
        assert!(CampaignConfig::new(0.0, 10).is_err());
        assert!(CampaignConfig::new(100.0, 1).is_err());
        assert!(cfg(100.0, 10).with_initial_bid(-1.0).validate().is_err());
        assert!(cfg(100.0, 10).with_tolerance(0.0).validate().is_err());
        assert!(cfg(100.0, 10)
            .with_clamp(Clamp { min: 1.2, max: 3.0 })
            .validate()
            .is_err());
    }

    #[test]
    fn default_initial_bid() {
        assert_eq!(cfg(100.0, 10).starting_bid(), 10.0);
        assert_eq!(cfg(100.0, 10).with_impressions(5).starting_bid(), 2.0);
        assert_eq!(cfg(100.0, 10).with_initial_bid(3.0).starting_bid(), 3.0);
    }

    #[test]
    fn convergence_needs_a_sustained_run() {
        let bids = [1.0, 2.0, 2.0, 2.0, 3.0, 3.0, 3.0, 3.0];
        assert_eq!(sustained_convergence(&bids, 1e-6, 3), Some(4));
        assert_eq!(sustained_convergence(&bids, 1e-6, 2), Some(1));
        assert_eq!(sustained_convergence(&[1.0, 2.0], 1e-6, 3), None);
    }

    #[test]
    fn final_period_overshoot_is_capped() {
        // a market shock in period 1 that would spend far past the budget
        struct Shock;
        impl CostSource for Shock {
            fn observe(&mut self, period: usize, bid: f64, _: f64) -> Result<Observation, CostError> {
                let cost = if period == 1 { 1e6 * bid } else { bid };
                Ok(Observation {
                    cost,
                    budget_limited: false,
                })
            }
        }
        let c = cfg(100.0, 5).with_initial_bid(60.0);
        let traj = run_campaign(&c, &mut Shock, &PacingSchedule::Uniform).unwrap();
        assert!(traj.total_spend() <= 100.0);
        assert_eq!(traj.records.len(), 2);
        assert_eq!(traj.records[1].cost, 40.0);
        assert_eq!(traj.records[1].status, StepStatus::Exhausted);
        assert_eq!(traj.termination, Termination::EarlyExit { period: 1 });
    }

    #[test]
    fn fixed_point_start_is_constant() {
        let (b, t) = (50_000.0, 1000usize);
        let bstar = (b / (t as f64 + 1.0)).powf(1.0 / 0.5);
        let c = cfg(b, t).with_initial_bid(bstar);
        let mut f = CostFn::capped_monomial(1.0, 0.5, 100.0).unwrap();
        let traj = run_campaign(&c, &mut f, &PacingSchedule::Uniform).unwrap();
        assert_eq!(traj.records.len(), t);
        let drift = traj
            .bids()
            .iter()
            .map(|x| (x - bstar).abs() / bstar)
            .fold(0.0, f64::max);
        assert!(drift < 1e-12, "drift {drift}");
        assert_eq!(traj.converged_at(), Some(0));
    }

    #[test]
    fn csv_export_header_and_rows() {
        let mut f = CostFn::monomial(2.0, 1.0).unwrap();
        let c = cfg(100.0, 4).with_initial_bid(1.0);
        let traj = run_campaign(&c, &mut f, &PacingSchedule::Uniform).unwrap();
        let mut buf = Vec::new();
        traj.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("t,bid,cost,alpha,remaining,multiplier,status"));
        assert_eq!(lines.next(), Some("0,1,2,12.25,98,1,active"));
        assert_eq!(text.lines().count(), 5);
    }
}
