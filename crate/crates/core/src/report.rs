//! Pacing-quality metrics for a finished campaign.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{detect_cycle, CYCLE_TOLERANCE};
use crate::engine::{PacingSchedule, Trajectory};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReportError {
    #[error("cannot report on an empty trajectory")]
    Empty,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpendReport {
    pub budget: f64,
    pub periods: usize,
    pub total_spend: f64,
    /// `B - Σ c_t`.
    pub leftover: f64,
    pub leftover_fraction: f64,
    /// Spend the schedule asks for in each period.
    pub target: Vec<f64>,
    /// `|target_t - c_t|` per period.
    pub deviations: Vec<f64>,
    pub max_deviation: f64,
    /// Cumulative spend fraction after each period.
    pub spend_curve: Vec<f64>,
    /// Cumulative target fraction after each period; the diagonal
    /// `(t + 1) / T` under uniform pacing.
    pub target_curve: Vec<f64>,
    pub max_curve_deviation: f64,
    pub converged_at: Option<usize>,
    /// Period of a repeating bid tail, if one was found.
    pub cycle_period: Option<usize>,
    /// Tolerance used for `epsilon_violation_fraction`.
    pub epsilon: Option<f64>,
    /// Fraction of periods with `|target_t - c_t| > ε`.
    pub epsilon_violation_fraction: Option<f64>,
}

/// Per-period spend targets of an ideal pacer that always spends exactly
/// what the schedule asks: `d_t = (κ_t B - S_{t-1}) / (T - t)`.
pub fn target_spend(budget: f64, periods: usize, schedule: &PacingSchedule) -> Vec<f64> {
    let mut spent = 0.0;
    (0..periods)
        .map(|t| {
            let kappa = match schedule {
                PacingSchedule::Scaled { .. } => schedule.multiplier(t, periods),
                _ => 1.0,
            };
            let d = ((kappa * budget - spent) / (periods - t) as f64).max(0.0);
            spent += d;
            d
        })
        .collect()
}

/// Builds the report. Periods after an early exit count as zero spend.
pub fn spend_report(
    trajectory: &Trajectory,
    schedule: &PacingSchedule,
    epsilon: Option<f64>,
) -> Result<SpendReport, ReportError> {
    if trajectory.records.is_empty() {
        return Err(ReportError::Empty);
    }
    let budget = trajectory.budget;
    let periods = trajectory.periods;
    let mut costs = trajectory.costs();
    costs.resize(periods.max(costs.len()), 0.0);

    let target = target_spend(budget, periods, schedule);
    let deviations: Vec<f64> = target.iter().zip(&costs).map(|(d, c)| (d - c).abs()).collect();
    let max_deviation = deviations.iter().copied().fold(0.0, f64::max);

    let cumulative = |xs: &[f64]| -> Vec<f64> {
        let mut s = 0.0;
        xs.iter()
            .map(|x| {
                s += x;
                s / budget
            })
            .collect()
    };
    let spend_curve = cumulative(&costs);
    let target_curve = cumulative(&target);
    let max_curve_deviation = spend_curve
        .iter()
        .zip(&target_curve)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);

    let total_spend = trajectory.total_spend();
    let final_fraction = *spend_curve.last().expect("non-empty");

    let bids = trajectory.bids();
    let window = periods / 10;
    let cycle_period = if window >= 4 && bids.len() >= 2 * window {
        detect_cycle(&bids, window, CYCLE_TOLERANCE).ok().filter(|&p| p > 0)
    } else {
        None
    };

    let epsilon_violation_fraction =
        epsilon.map(|eps| deviations.iter().filter(|d| **d > eps).count() as f64 / periods as f64);

    Ok(SpendReport {
        budget,
        periods,
        total_spend,
        leftover: budget - total_spend,
        leftover_fraction: 1.0 - final_fraction,
        target,
        deviations,
        max_deviation,
        spend_curve,
        target_curve,
        max_curve_deviation,
        converged_at: trajectory.converged_at(),
        cycle_period,
        epsilon,
        epsilon_violation_fraction,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::{CostError, CostFn};
    use crate::engine::{run_campaign, CampaignConfig, CostSource, Observation};

    struct Fixed(f64);

    impl CostSource for Fixed {
        fn observe(&mut self, _: usize, _: f64, _: f64) -> Result<Observation, CostError> {
            Ok(Observation {
                cost: self.0,
                budget_limited: false,
            })
        }
    }

    #[test]
    fn perfectly_uniform_spend() {
        let config = CampaignConfig::new(1000.0, 10).unwrap().with_initial_bid(1.0);
        let traj = run_campaign(&config, &mut Fixed(100.0), &PacingSchedule::Uniform).unwrap();
        let r = spend_report(&traj, &PacingSchedule::Uniform, Some(1e-9)).unwrap();
        assert_eq!(r.leftover, 0.0);
        assert_eq!(r.max_deviation, 0.0);
        assert!(r.max_curve_deviation < 1e-15);
        assert_eq!(r.epsilon_violation_fraction, Some(0.0));
    }

    #[test]
    fn uniform_target_is_the_diagonal() {
        let d = target_spend(960.0, 96, &PacingSchedule::Uniform);
        assert!(d.iter().all(|x| (x - 10.0).abs() < 1e-12));
    }

    #[test]
    fn scaled_target_follows_the_multipliers() {
        let s = PacingSchedule::Scaled {
            multipliers: vec![0.5, 1.0],
        };
        // κ_t B is spread over every period still to come
        let d = target_spend(100.0, 4, &s);
        assert_eq!(d, vec![12.5, 12.5, 37.5, 37.5]);
    }

    #[test]
    fn sublinear_campaign_leaves_about_a_tenth_of_a_percent() {
        let config = CampaignConfig::new(50_000.0, 1000).unwrap();
        let mut f = CostFn::capped_monomial(1.0, 0.5, 100.0).unwrap();
        let traj = run_campaign(&config, &mut f, &PacingSchedule::Uniform).unwrap();
        let r = spend_report(&traj, &PacingSchedule::Uniform, None).unwrap();
        assert!((r.leftover_fraction - 0.001).abs() < 0.0002, "{}", r.leftover_fraction);
        assert_eq!(r.cycle_period, Some(1));
        assert!(r.converged_at.is_some());
        assert!(r.spend_curve.windows(2).all(|w| w[1] >= w[0]));
        assert_eq!(1.0 - r.spend_curve.last().unwrap(), r.leftover_fraction);
    }
}
