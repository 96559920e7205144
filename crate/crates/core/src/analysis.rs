//! Closed-form and numerical analysis of the pacing map for monomial costs
//! `f(b) = C b^k`, optionally guard-railed as `min(C b^k, M)`.
//!
//! With `L = |1 - k|` and `γ = C T / B`:
//!
//! | quantity | expression |
//! |---|---|
//! | fixed point | `b* = ((B - Σc) / (C (T - t + 1)))^(1/k)` |
//! | stability | `λ = 1 - k (T - t + 1) / (T - t)` |
//! | convergence bound | `t* = (k-1)/k + ln|ε γ^(1/k) (1-L)| / ln L` |
//! | distance bound | `γ^(-1/k) L^(t-1+1/k) / (1-L)` |

use std::fmt;
use std::ops::Range;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cost::{monomial_envelope, CostError, CostFn, EnvelopeRegime, PolynomialCost};
use crate::engine::{run_campaign, CampaignConfig, PacingError, PacingSchedule};

/// Relative tolerance for declaring two bids equal in cycle detection.
pub const CYCLE_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("k = {k}: {reason}")]
    Regime { k: f64, reason: &'static str },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error(transparent)]
    Cost(#[from] CostError),
    #[error(transparent)]
    Pacing(#[from] PacingError),
}

type Result<T> = std::result::Result<T, AnalysisError>;

fn positive(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(AnalysisError::Domain(format!(
            "{name} must be positive and finite, got {x}"
        )))
    }
}

fn check_market(budget: f64, periods: usize, coefficient: f64) -> Result<()> {
    positive("budget", budget)?;
    positive("coefficient", coefficient)?;
    if periods < 2 {
        return Err(AnalysisError::Domain(format!("need at least 2 periods, got {periods}")));
    }
    Ok(())
}

/// Contraction constant `|1 - k|`, rejecting exponents where it is not in
/// `(0, 1)`.
fn contraction(k: f64) -> Result<f64> {
    if !(k > 0.0 && k < 2.0) {
        return Err(AnalysisError::Regime {
            k,
            reason: "the pacing map is not a contraction outside 0 < k < 2",
        });
    }
    if k == 1.0 {
        return Err(AnalysisError::Regime {
            k,
            reason: "linear costs converge in one step; the geometric bound degenerates",
        });
    }
    Ok((1.0 - k).abs())
}

/// Convergence regimes of the pacing map by cost exponent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `k ≤ 0`: the fixed point repels.
    Unstable,
    /// `0 < k < 1`.
    StableSublinear,
    /// `k = 1`: exact after one update.
    OneIteration,
    /// `1 < k < 2`.
    StableSuperlinear,
    /// `k ≥ 2`: oscillation unless spend is capped.
    GuardRailsRequired,
}

impl Regime {
    pub fn converges(self) -> bool {
        matches!(
            self,
            Regime::StableSublinear | Regime::OneIteration | Regime::StableSuperlinear
        )
    }

    pub fn description(self) -> &'static str {
        match self {
            Regime::Unstable => "unstable fixed point",
            Regime::StableSublinear => "stable, bound grows like ln(k)/ln(1-k)",
            Regime::OneIteration => "convergence in one iteration",
            Regime::StableSuperlinear => "stable, bound grows like ln(2-k)/ln(k-1)",
            Regime::GuardRailsRequired => "instability requiring guard rails",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.description())
    }
}

pub fn classify_regime(k: f64) -> Regime {
    if k <= 0.0 {
        Regime::Unstable
    } else if k < 1.0 {
        Regime::StableSublinear
    } else if k == 1.0 {
        Regime::OneIteration
    } else if k < 2.0 {
        Regime::StableSuperlinear
    } else {
        Regime::GuardRailsRequired
    }
}

/// Bid at which the pacing update is stationary in period `t`, given the
/// costs observed in periods `0..t`.
pub fn fixed_point(
    budget: f64,
    periods: usize,
    coefficient: f64,
    k: f64,
    t: usize,
    cost_history: &[f64],
) -> Result<f64> {
    check_market(budget, periods, coefficient)?;
    if k == 0.0 || !k.is_finite() {
        return Err(AnalysisError::Regime {
            k,
            reason: "constant costs have no bid fixed point",
        });
    }
    if cost_history.len() != t {
        return Err(AnalysisError::Precondition(format!(
            "period {t} needs {t} observed costs, got {}",
            cost_history.len()
        )));
    }
    if t >= periods {
        return Err(AnalysisError::Precondition(format!(
            "period {t} is outside a {periods}-period campaign"
        )));
    }
    let mut spent = 0.0;
    for c in cost_history {
        spent += c;
    }
    let numerator = budget - spent;
    if numerator <= 0.0 {
        return Err(AnalysisError::Domain(format!(
            "budget already spent by period {t} ({spent} of {budget})"
        )));
    }
    let b = (numerator / (coefficient * (periods - t + 1) as f64)).powf(1.0 / k);
    if !(b > 0.0 && b.is_finite()) {
        return Err(AnalysisError::Domain(format!("fixed point {b} is not representable")));
    }
    Ok(b)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stability {
    pub lambda: f64,
    pub stable: bool,
}

/// Linearised multiplier of the pacing map at its fixed point in period `t`.
pub fn stability_multiplier(k: f64, periods: usize, t: usize) -> Result<Stability> {
    if t >= periods {
        return Err(AnalysisError::Precondition(format!(
            "t = {t} must be below T = {periods}"
        )));
    }
    let remaining = (periods - t) as f64;
    let lambda = 1.0 - k * (remaining + 1.0) / remaining;
    Ok(Stability {
        lambda,
        stable: lambda.abs() < 1.0,
    })
}

pub fn gamma(budget: f64, periods: usize, coefficient: f64) -> f64 {
    coefficient * periods as f64 / budget
}

/// Upper bound on the number of periods before `|b_t - b*| < ε`.
///
/// Returns 1 for linear costs. Callers round up to whole periods.
pub fn convergence_time_bound(eps: f64, budget: f64, periods: usize, coefficient: f64, k: f64) -> Result<f64> {
    positive("tolerance", eps)?;
    check_market(budget, periods, coefficient)?;
    if k == 1.0 {
        return Ok(1.0);
    }
    let l = contraction(k)?;
    let g = gamma(budget, periods, coefficient);
    Ok((k - 1.0) / k + (eps * g.powf(1.0 / k) * (1.0 - l)).abs().ln() / l.ln())
}

/// Geometric bound on `|b_t - b*|` for `t ≥ 1`.
pub fn distance_bound(t: usize, budget: f64, periods: usize, coefficient: f64, k: f64) -> Result<f64> {
    check_market(budget, periods, coefficient)?;
    if t == 0 {
        return Err(AnalysisError::Precondition("distance bound starts at t = 1".into()));
    }
    let l = contraction(k)?;
    let g = gamma(budget, periods, coefficient);
    Ok(g.powf(-1.0 / k) * l.powf(t as f64 - 1.0 + 1.0 / k) / (1.0 - l))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaxDistance {
    /// Starting bid at which the first step is largest.
    pub argmax: f64,
    pub distance: f64,
}

/// Largest first-step move `|b_1 - b_0|` of the contraction argument and
/// the starting bid that attains it.
///
/// This is a local quantity: the first step can be made arbitrarily large
/// by starting far enough from the fixed point.
pub fn max_initial_distance(budget: f64, periods: usize, coefficient: f64, k: f64) -> Result<MaxDistance> {
    check_market(budget, periods, coefficient)?;
    let l = contraction(k)?;
    let t = periods as f64;
    let argmax = (budget * l / (coefficient * t)).powf(1.0 / k);
    let distance = ((t - l) / (l * (t - 1.0)) * argmax).abs();
    Ok(MaxDistance { argmax, distance })
}

/// The two points of the period-2 orbit that appears past `k = 2` when
/// spend is capped at `M`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CyclePair {
    pub b_minus: f64,
    pub b_plus: f64,
    /// Whether `b_minus` lies on the power branch (`C b^k ≤ M`) and `b_plus`
    /// on the capped branch (`C b^k ≥ M`). Under that assignment the updates
    /// at `t = 0, 1` map `b_plus → b_minus → b_plus` exactly.
    pub case_consistent: [bool; 2],
}

pub fn two_cycle_points(budget: f64, periods: usize, coefficient: f64, k: f64, cap: f64) -> Result<CyclePair> {
    check_market(budget, periods, coefficient)?;
    if k.is_nan() || k <= 2.0 {
        return Err(AnalysisError::Regime {
            k,
            reason: "a two-cycle only exists past the period-doubling point k = 2",
        });
    }
    let t = periods as f64;
    let lower = budget / (coefficient * t);
    if !(cap > lower && cap < budget) {
        return Err(AnalysisError::Precondition(format!(
            "cap must satisfy B/(CT) = {lower} < M < B = {budget}, got {cap}"
        )));
    }
    let (b, m, c) = (budget, cap, coefficient);
    let b_minus = ((b - m).powi(2) / (c * (b - m - m * t + m * t * t))).powf(1.0 / k);
    let uncapped = c * b_minus.powf(k) < m;
    let b_plus = if uncapped {
        m * t / (b - m) * b_minus
    } else {
        (b - m) / (m * t) * b_minus
    };
    Ok(CyclePair {
        b_minus,
        b_plus,
        case_consistent: [c * b_minus.powf(k) <= m, c * b_plus.powf(k) >= m],
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapOrder {
    /// One update at `t = 0`.
    First,
    /// Updates at `t = 0` then `t = 1`.
    Second,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MapSample {
    pub bid: f64,
    pub value: Result<f64>,
}

/// Samples the unconstrained pacing map `G(b)` or `G(G(b))` over `grid`.
/// A point whose evaluation fails carries its error instead of a value.
pub fn iterate_map(
    budget: f64,
    periods: usize,
    cost: &CostFn,
    order: MapOrder,
    grid: &[f64],
) -> Result<Vec<MapSample>> {
    positive("budget", budget)?;
    if periods < 2 {
        return Err(AnalysisError::Domain(format!("need at least 2 periods, got {periods}")));
    }
    let t = periods as f64;
    let step = |bid: f64, observed: f64, spent: f64, remaining_periods: f64| -> Result<f64> {
        if observed == 0.0 {
            return Err(AnalysisError::Domain(format!("zero cost at bid {bid}")));
        }
        let next = (budget - spent) / (observed * remaining_periods) * bid;
        if next.is_finite() {
            Ok(next)
        } else {
            Err(AnalysisError::Domain(format!("map diverges at bid {bid}")))
        }
    };
    let eval = |b0: f64| -> Result<f64> {
        positive("grid bid", b0)?;
        let c0 = cost.evaluate(b0)?;
        let b1 = step(b0, c0, c0, t)?;
        match order {
            MapOrder::First => Ok(b1),
            MapOrder::Second => {
                if b1 <= 0.0 {
                    return Err(AnalysisError::Domain(format!(
                        "first update from {b0} leaves a non-positive bid"
                    )));
                }
                let c1 = cost.evaluate(b1)?;
                step(b1, c1, c0 + c1, t - 1.0)
            }
        }
    };
    Ok(grid.iter().map(|&bid| MapSample { bid, value: eval(bid) }).collect())
}

/// `n` logarithmically spaced points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && n >= 2, "log_grid needs 0 < lo < hi and n >= 2");
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| {
            if i == 0 {
                lo
            } else if i == n - 1 {
                hi
            } else {
                (a + (b - a) * i as f64 / (n - 1) as f64).exp()
            }
        })
        .collect()
}

/// Number of sign changes of `G(b) - b` along the samples. Failed samples
/// and exact zeros are skipped.
pub fn crossing_count(samples: &[MapSample]) -> usize {
    let mut last: Option<bool> = None;
    let mut count = 0;
    for s in samples {
        let Ok(v) = s.value else { continue };
        let d = v - s.bid;
        if d == 0.0 || !d.is_finite() {
            continue;
        }
        let above = d > 0.0;
        if let Some(prev) = last {
            if prev != above {
                count += 1;
            }
        }
        last = Some(above);
    }
    count
}

/// Smallest period `p` such that the last `window` bids repeat with period
/// `p` to relative tolerance `rel_tol`. Returns 1 for a converged tail and 0
/// when no period up to `window / 2` fits.
pub fn detect_cycle(bids: &[f64], window: usize, rel_tol: f64) -> Result<usize> {
    if window < 4 {
        return Err(AnalysisError::Precondition(format!(
            "cycle window must be at least 4, got {window}"
        )));
    }
    if bids.len() < 2 * window {
        return Err(AnalysisError::Precondition(format!(
            "need {} bids for a window of {window} after the transient, got {}",
            2 * window,
            bids.len()
        )));
    }
    let tail = &bids[bids.len() - window..];
    let close = |a: f64, b: f64| (a - b).abs() <= rel_tol * a.abs().max(b.abs());
    Ok((1..=window / 2)
        .find(|&p| (0..window - p).all(|i| close(tail[i], tail[i + p])))
        .unwrap_or(0))
}

/// Number of separated bands the values occupy: sorted values are split
/// wherever consecutive ones differ by more than `gap_fraction` of the total
/// range. A spread within `flat_tol` (relative) counts as one band.
pub fn band_count(values: &[f64], gap_fraction: f64, flat_tol: f64) -> usize {
    bands(values, gap_fraction, flat_tol).len()
}

/// Bands as described for [`band_count`], each returned as its sorted
/// members.
pub fn bands(values: &[f64], gap_fraction: f64, flat_tol: f64) -> Vec<Vec<f64>> {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return Vec::new();
    }
    v.sort_by(f64::total_cmp);
    let range = v[v.len() - 1] - v[0];
    if range <= flat_tol * v[0].abs().max(v[v.len() - 1].abs()) {
        return vec![v];
    }
    let mut out = vec![vec![v[0]]];
    for w in v.windows(2) {
        if w[1] - w[0] > gap_fraction * range {
            out.push(Vec::new());
        }
        out.last_mut().expect("non-empty").push(w[1]);
    }
    out
}

/// Monomial-envelope bracket on the convergence bound of a polynomial cost:
/// the bound evaluated at the lower and upper envelope monomials.
pub fn bracketed_convergence_bound(
    poly: &PolynomialCost,
    budget: f64,
    periods: usize,
    eps: f64,
    regime: EnvelopeRegime,
) -> Result<(f64, f64)> {
    let env = monomial_envelope(poly, regime)?;
    let k = env.lower.exponent;
    contraction(k)?;
    Ok((
        convergence_time_bound(eps, budget, periods, env.lower.coefficient, k)?,
        convergence_time_bound(eps, budget, periods, env.upper.coefficient, k)?,
    ))
}

/// Convergence times implied by the size of the first pacing step,
/// `τ = ln((1 - L) ε / |b_1 - b_0|) / ln L`, for the two envelope monomials
/// and the polynomial itself from the same starting bid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FirstStepBracket {
    pub lower: f64,
    pub actual: f64,
    pub upper: f64,
}

impl FirstStepBracket {
    pub fn contains_actual(&self) -> bool {
        let (lo, hi) = if self.lower <= self.upper {
            (self.lower, self.upper)
        } else {
            (self.upper, self.lower)
        };
        lo <= self.actual && self.actual <= hi
    }
}

pub fn first_step_bracket(
    poly: &PolynomialCost,
    budget: f64,
    periods: usize,
    eps: f64,
    b0: f64,
) -> Result<FirstStepBracket> {
    positive("tolerance", eps)?;
    positive("budget", budget)?;
    positive("starting bid", b0)?;
    let env = monomial_envelope(poly, EnvelopeRegime::of(b0))?;
    let l = contraction(env.lower.exponent)?;
    let t = periods as f64;
    let tau = |cost: f64| -> Result<f64> {
        let b1 = (budget - cost) / (cost * t) * b0;
        let step = (b1 - b0).abs();
        if !(step > 0.0 && step.is_finite()) {
            return Err(AnalysisError::Domain(format!(
                "first step from {b0} is degenerate ({step})"
            )));
        }
        Ok(((1.0 - l) * eps / step).ln() / l.ln())
    };
    Ok(FirstStepBracket {
        lower: tau(env.lower.evaluate(b0)?)?,
        actual: tau(poly.evaluate(b0)?)?,
        upper: tau(env.upper.evaluate(b0)?)?,
    })
}

/// Summary of the closed-form analysis for one monomial market.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub fixed_point: f64,
    pub lambda: f64,
    pub lipschitz: f64,
    pub gamma: f64,
    /// `None` outside the contraction regime.
    pub convergence_bound: Option<f64>,
    pub max_initial_distance: Option<f64>,
    pub regime: Regime,
    pub cycle: Option<CyclePair>,
}

pub fn analyze(
    budget: f64,
    periods: usize,
    coefficient: f64,
    k: f64,
    cap: Option<f64>,
    eps: f64,
) -> Result<AnalysisReport> {
    let fixed_point = fixed_point(budget, periods, coefficient, k, 0, &[])?;
    let lambda = stability_multiplier(k, periods, 0)?.lambda;
    let in_contraction = k > 0.0 && k < 2.0;
    let convergence_bound = if in_contraction {
        Some(convergence_time_bound(eps, budget, periods, coefficient, k)?)
    } else {
        None
    };
    let max_initial_distance = if in_contraction && k != 1.0 {
        Some(max_initial_distance(budget, periods, coefficient, k)?.distance)
    } else {
        None
    };
    let cycle = match cap {
        Some(m) if k > 2.0 => Some(two_cycle_points(budget, periods, coefficient, k, m)?),
        _ => None,
    };
    Ok(AnalysisReport {
        fixed_point,
        lambda,
        lipschitz: (1.0 - k).abs(),
        gamma: gamma(budget, periods, coefficient),
        convergence_bound,
        max_initial_distance,
        regime: classify_regime(k),
        cycle,
    })
}

/// Periods inspected for long-run bid behaviour: late enough to skip the
/// transient, early enough that the shrinking horizon has not distorted the
/// map.
pub fn tail_window(periods: usize) -> Range<usize> {
    periods / 10..periods / 4
}

pub const BAND_GAP_FRACTION: f64 = 0.2;

/// One point of a period-doubling sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub k: f64,
    pub bands: usize,
    pub tail_min: f64,
    pub tail_max: f64,
    pub converged_at: Option<usize>,
    pub spend_fraction: f64,
    pub b_minus: Option<f64>,
    pub b_plus: Option<f64>,
}

/// Runs one capped-monomial campaign per exponent and summarises the tail
/// of each trajectory. Campaigns run in parallel; output follows `ks`.
pub fn period_doubling_sweep(
    config: &CampaignConfig,
    coefficient: f64,
    cap: f64,
    ks: &[f64],
) -> Result<Vec<SweepPoint>> {
    ks.par_iter()
        .map(|&k| {
            let mut cost = CostFn::capped_monomial(coefficient, k, cap)?;
            let traj = run_campaign(config, &mut cost, &PacingSchedule::Uniform)?;
            let bids = traj.bids();
            let window = tail_window(config.periods);
            let tail = &bids[window.start.min(bids.len())..window.end.min(bids.len())];
            let (lo, hi) = tail.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &b| {
                (lo.min(b), hi.max(b))
            });
            let cycle = two_cycle_points(config.budget, config.periods, coefficient, k, cap).ok();
            Ok(SweepPoint {
                k,
                bands: band_count(tail, BAND_GAP_FRACTION, CYCLE_TOLERANCE),
                tail_min: lo,
                tail_max: hi,
                converged_at: traj.converged_at(),
                spend_fraction: traj.spend_fraction(),
                b_minus: cycle.map(|c| c.b_minus),
                b_plus: cycle.map(|c| c.b_plus),
            })
        })
        .collect()
}

/// Exponents `start, start + step, ...` up to `end` inclusive, with each
/// value rounded to suppress accumulated drift.
pub fn k_range(start: f64, end: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && step.is_finite() && start.is_finite() && end.is_finite() && end >= start) {
        return Err(AnalysisError::Precondition(format!(
            "range {start}:{end}:{step} is empty or malformed"
        )));
    }
    let n = ((end - start) / step + 1e-9).floor() as usize;
    Ok((0..=n)
        .map(|i| {
            let k = start + step * i as f64;
            (k * 1e9).round() / 1e9
        })
        .collect())
}
