//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use budget_pacing::analysis::{
    bands, bracketed_convergence_bound, convergence_time_bound, crossing_count, distance_bound, first_step_bracket,
    fixed_point, iterate_map, k_range, log_grid, max_initial_distance, period_doubling_sweep, two_cycle_points,
    MapOrder, BAND_GAP_FRACTION,
};
use budget_pacing::auction::{
    generate_bid_log, mean_impressions, replay_campaign, suggest_budget, LogProfile, ReplayOptions,
};
use budget_pacing::cost::{BaseCost, CapMode, CostFn, EnvelopeRegime, GuardedCost, MonomialCost, PolynomialCost, Term};
use budget_pacing::engine::{pace_step, run_campaign, CampaignConfig, Clamp, PacingSchedule, PacingState, Trajectory};
use budget_pacing::report::spend_report;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const B: f64 = 50_000.0;
const T: usize = 1000;
const EPS: f64 = 1e-6;

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn capped(k: f64) -> CostFn {
    CostFn::capped_monomial(1.0, k, 100.0).unwrap()
}

fn campaign(cost: &mut CostFn, b0: Option<f64>) -> Trajectory {
    let mut config = CampaignConfig::new(B, T).unwrap().with_tolerance(EPS);
    config.initial_bid = b0;
    run_campaign(&config, cost, &PacingSchedule::Uniform).unwrap()
}

fn convergence_bound_reproduction() -> Outcome {
    let b05 = convergence_time_bound(EPS, B, T, 1.0, 0.5).unwrap().ceil();
    let b14 = convergence_time_bound(EPS, B, T, 1.0, 1.4).unwrap().ceil();
    let pass = (b05 - 31.0).abs() <= 1.0 && (b14 - 19.0).abs() <= 1.0;
    outcome(pass, format!("ceil bound k=0.5: {b05} (31±1), k=1.4: {b14} (19±1)"))
}

fn simulated_convergence_within_bound() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (k, spend_target) in [(0.5, 0.9990), (1.4, 0.9987)] {
        let limit = convergence_time_bound(EPS, B, T, 1.0, k).unwrap().ceil() as usize + 1;
        let b_star = fixed_point(B, T, 1.0, k, 0, &[]).unwrap();
        let mut seen = Vec::new();
        for b0 in [0.1 * b_star, b_star, 10.0 * b_star, B / T as f64] {
            let traj = campaign(&mut capped(k), Some(b0));
            let t = traj.converged_at();
            let spend = traj.spend_fraction();
            let ok = t.is_some_and(|t| t <= limit) && (spend - spend_target).abs() <= 0.002;
            pass &= ok;
            seen.push(format!(
                "{}@{:.4}%",
                t.map_or("none".into(), |t| t.to_string()),
                100.0 * spend
            ));
        }
        parts.push(format!("k={k} limit {limit}: [{}]", seen.join(", ")));
    }
    outcome(pass, parts.join("; "))
}

fn one_iteration_convergence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    let mut runs = 0;
    let mut check = |cost: &mut CostFn, budget: f64, periods: usize, b0: f64| {
        let config = CampaignConfig::new(budget, periods).unwrap().with_initial_bid(b0);
        let traj = run_campaign(&config, cost, &PacingSchedule::Uniform).unwrap();
        let b = traj.bid_path();
        worst = worst.max(rel(b[2], b[1]));
        runs += 1;
    };
    for i in 0..100 {
        let budget = rng.random_range(1e3..1e6);
        let periods = rng.random_range(3..2000usize);
        let c = rng.random_range(0.1..10.0);
        let floor = (budget / (c * periods as f64)).max(budget / periods as f64);
        let m = floor * rng.random_range(1.01..20.0);
        let b0 = m / c * rng.random_range(0.01..0.99);
        if i % 2 == 0 {
            check(&mut CostFn::monomial(c, 1.0).unwrap(), budget, periods, b0);
        } else {
            check(&mut CostFn::capped_monomial(c, 1.0, m).unwrap(), budget, periods, b0);
        }
    }
    for _ in 0..100 {
        let budget = rng.random_range(1e3..1e6);
        let periods = rng.random_range(3..2000usize);
        let c = rng.random_range(0.1..10.0);
        let b0 = budget / (c * periods as f64) * rng.random_range(0.05..20.0);
        let ceiling = (c * b0).min((budget - c * b0) / periods as f64);
        if ceiling <= 0.0 {
            continue;
        }
        let m = ceiling * rng.random_range(0.01..0.99);
        let mut f = CostFn::Guarded(
            GuardedCost::new(
                BaseCost::Monomial(MonomialCost::new(c, 1.0).unwrap()),
                m,
                CapMode::Below,
            )
            .unwrap(),
        );
        check(&mut f, budget, periods, b0);
    }
    outcome(
        worst < 1e-12 && runs >= 150,
        format!("{runs} campaigns (min and max guard rails), worst |b2-b1|/b1 = {worst:.2e}"),
    )
}

fn fixed_point_residual() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for i in 0..200 {
        let budget = rng.random_range(1e3..1e7);
        let periods = rng.random_range(2..5000usize);
        let c = rng.random_range(0.01..100.0);
        let k = rng.random_range(0.01..1.99);
        let t = if i % 2 == 0 { 0 } else { rng.random_range(0..periods) };
        let history: Vec<f64> = (0..t)
            .map(|_| budget * 0.9 / periods as f64 * rng.random_range(0.0..2.0))
            .collect();
        let b = fixed_point(budget, periods, c, k, t, &history).unwrap();
        let config = CampaignConfig::new(budget, periods).unwrap();
        let step = pace_step(&config, &PacingState::with_history(b, &history), c * b.powf(k)).unwrap();
        worst = worst.max(rel(step.next_bid, b));
    }
    outcome(
        worst < 1e-12,
        format!("200 configurations, worst relative residual {worst:.2e}"),
    )
}

fn banach_distance_envelope() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for k in [0.3, 0.7, 1.3, 1.7] {
        let b0 = max_initial_distance(B, T, 1.0, k).unwrap().argmax;
        let traj = campaign(&mut capped(k), Some(b0));
        let costs = traj.costs();
        let bids = traj.bids();
        let mut worst: f64 = 0.0;
        for t in 1..=T / 10 {
            let reference = fixed_point(B, T, 1.0, k, t, &costs[..t]).unwrap();
            let allowed = 1.05 * distance_bound(t, B, T, 1.0, k).unwrap() + 4.0 * f64::EPSILON * reference;
            worst = worst.max((bids[t] - reference).abs() / allowed);
        }
        pass &= worst <= 1.0;
        parts.push(format!("k={k}: {worst:.3}"));
    }
    outcome(
        pass,
        format!(
            "worst |b_t-b*|/(1.05 bound) over t<=T/10, from the max-distance start: {}",
            parts.join(", ")
        ),
    )
}

fn period_doubling() -> Outcome {
    let config = CampaignConfig::new(B, T).unwrap().with_tolerance(EPS);
    let ks = k_range(1.8, 2.4, 0.05).unwrap();
    let points = period_doubling_sweep(&config, 1.0, 100.0, &ks).unwrap();
    let mut pass = true;
    let mut counts = Vec::new();
    for p in &points {
        if p.k < 2.0 {
            pass &= p.bands == 1;
        } else if p.k > 2.0 && p.k <= 2.35 + 1e-9 {
            pass &= p.bands == 2;
        }
        counts.push(format!("{}:{}", p.k, p.bands));
    }

    let pair = two_cycle_points(B, T, 1.0, 2.3, 100.0).unwrap();
    let traj = campaign(&mut capped(2.3), Some(pair.b_minus));
    let window = &traj.bids()[..=T / 50];
    let split = bands(window, BAND_GAP_FRACTION, 1e-6);
    let mut worst: f64 = 0.0;
    let matched = split.len() == 2;
    if matched {
        for b in &split[0] {
            worst = worst.max(rel(*b, pair.b_minus));
        }
        for b in &split[1] {
            worst = worst.max(rel(*b, pair.b_plus));
        }
    }
    pass &= matched && worst <= 0.02;
    outcome(
        pass,
        format!(
            "tail bands [{}]; k=2.3 early window vs b-={:.4}, b+={:.4}: {} bands, worst error {:.2}%",
            counts.join(" "),
            pair.b_minus,
            pair.b_plus,
            split.len(),
            100.0 * worst
        ),
    )
}

fn second_iterate_crossings() -> Outcome {
    let count = |k: f64| {
        let s = fixed_point(B, T, 1.0, k, 0, &[]).unwrap();
        let grid = log_grid(1e-3 * s, 1e3 * s, 10_000);
        crossing_count(&iterate_map(B, T, &capped(k), MapOrder::Second, &grid).unwrap())
    };
    let (a, b) = (count(0.5), count(2.3));
    outcome(a == 1 && b == 3, format!("k=0.5: {a} (1), k=2.3: {b} (3)"))
}

/// Bid at which `f` spends `B / (T + 1)`, by bisection on an increasing cost.
fn stationary_bid(f: impl Fn(f64) -> f64) -> f64 {
    let target = B / (T as f64 + 1.0);
    let (mut lo, mut hi) = (1e-12f64, 1e12f64);
    for _ in 0..400 {
        let mid = (lo * hi).sqrt();
        if f(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

fn envelope_bracketing() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut inside = 0;
    let mut bound_bracket_hits = 0;
    let mut n = 0;
    while n < 50 {
        let k1: f64 = rng.random_range(0.2..1.9);
        let k2: f64 = rng.random_range(0.05..k1);
        let (c1, c2) = (rng.random_range(0.2..3.0), rng.random_range(0.2..3.0));
        let b0: f64 = 10f64.powf(rng.random_range(-3.0..4.0));
        let regime = EnvelopeRegime::of(b0);
        let k_env = match regime {
            EnvelopeRegime::AtLeastOne => k1,
            EnvelopeRegime::BelowOne => k2,
        };
        if (k_env - 1.0).abs() < 0.05 || (k1 - k2).abs() < 0.05 {
            continue;
        }
        let poly = PolynomialCost::new(vec![
            Term {
                coefficient: c1,
                exponent: k1,
            },
            Term {
                coefficient: c2,
                exponent: k2,
            },
        ])
        .unwrap();
        let env = budget_pacing::cost::monomial_envelope(&poly, regime).unwrap();
        let fixed = [
            stationary_bid(|b| env.lower.evaluate(b).unwrap()),
            stationary_bid(|b| poly.evaluate(b).unwrap()),
            stationary_bid(|b| env.upper.evaluate(b).unwrap()),
        ];
        let below = fixed.iter().all(|f| b0 < *f);
        let above = fixed.iter().all(|f| b0 > *f);
        if !(below || above) {
            continue;
        }
        n += 1;
        let bracket = first_step_bracket(&poly, B, T, EPS, b0).unwrap();
        if bracket.contains_actual() {
            inside += 1;
        }
        let (lo, hi) = bracketed_convergence_bound(&poly, B, T, EPS, regime).unwrap();
        let config = CampaignConfig::new(B, T).unwrap().with_initial_bid(b0);
        let mut f = CostFn::Polynomial(poly);
        if let Ok(traj) = run_campaign(&config, &mut f, &PacingSchedule::Uniform) {
            if let Some(t) = traj.converged_at() {
                if lo.min(hi) <= t as f64 && t as f64 <= lo.max(hi) {
                    bound_bracket_hits += 1;
                }
            }
        }
    }
    outcome(
        inside == 50,
        format!(
            "{inside}/50 polynomial first-step convergence times inside the envelope bracket \
             (informational: simulated t* inside the envelope bound-formula bracket in {bound_bracket_hits}/50)"
        ),
    )
}

fn replay_pacing_quality() -> Outcome {
    let log = generate_bid_log(42, &LogProfile::default()).unwrap();
    let periods = log.len();
    let budget = suggest_budget(&log, periods, 0.6).unwrap();
    let config = CampaignConfig::new(budget, periods)
        .unwrap()
        .with_clamp(Clamp::default())
        .with_impressions(mean_impressions(&log));
    let uniform = replay_campaign(&config, &log, &PacingSchedule::Uniform, ReplayOptions::default()).unwrap();
    let ramp = PacingSchedule::Scaled {
        multipliers: (0..periods)
            .map(|t| 0.25 + 0.75 * t as f64 / (periods - 1) as f64)
            .collect(),
    };
    let scaled = replay_campaign(&config, &log, &ramp, ReplayOptions::default()).unwrap();
    let u = &uniform.report;
    let s = &scaled.report;
    let pass = u.max_curve_deviation <= 0.05 && u.leftover_fraction <= 0.01 && s.max_curve_deviation <= 0.05;
    outcome(
        pass,
        format!(
            "uniform: max curve deviation {:.4} (<=0.05), leftover {:.3}% (<=1%); κ-ramp: max deviation from κ target {:.4} (<=0.05)",
            u.max_curve_deviation,
            100.0 * u.leftover_fraction,
            s.max_curve_deviation
        ),
    )
}

fn accounting_and_safety() -> Outcome {
    let mut campaigns: Vec<(Trajectory, Option<Clamp>)> = Vec::new();
    for k in [0.25, 0.5, 1.0, 1.4, 1.9, 2.3, 3.0] {
        campaigns.push((campaign(&mut capped(k), None), None));
    }
    let schedules = [
        PacingSchedule::Uniform,
        PacingSchedule::Scaled {
            multipliers: vec![0.2, 0.6, 1.0],
        },
        PacingSchedule::Subthreshold {
            threshold: 75_000.0,
            inflation: 1.5,
        },
    ];
    for schedule in &schedules {
        for k in [0.5, 1.4] {
            let config = CampaignConfig::new(B, T).unwrap();
            let traj = run_campaign(&config, &mut capped(k), schedule).unwrap();
            campaigns.push((traj, None));
        }
        let clamp = Clamp::new(0.5, 2.0).unwrap();
        let config = CampaignConfig::new(B, T)
            .unwrap()
            .with_clamp(clamp)
            .with_initial_bid(1e-3);
        let traj = run_campaign(&config, &mut capped(2.3), schedule).unwrap();
        campaigns.push((traj, Some(clamp)));

        let log = generate_bid_log(42, &LogProfile::default()).unwrap();
        let budget = suggest_budget(&log, log.len(), 0.6).unwrap();
        let config = CampaignConfig::new(budget, log.len())
            .unwrap()
            .with_clamp(Clamp::default())
            .with_impressions(mean_impressions(&log));
        let replay = replay_campaign(&config, &log, schedule, ReplayOptions::default()).unwrap();
        campaigns.push((replay.trajectory, Some(Clamp::default())));
    }

    let mut overspend = 0;
    let mut mismatched = 0;
    let mut out_of_clamp = 0;
    for (traj, clamp) in &campaigns {
        let mut spent = 0.0;
        for r in &traj.records {
            spent += r.cost;
            if r.remaining != traj.budget - spent {
                mismatched += 1;
            }
            if let (Some(c), Some(a)) = (clamp, r.alpha) {
                if a < c.min || a > c.max {
                    out_of_clamp += 1;
                }
            }
        }
        if spent > traj.budget {
            overspend += 1;
        }
        let report = spend_report(traj, &PacingSchedule::Uniform, None).unwrap();
        if report.leftover < 0.0 {
            overspend += 1;
        }
    }
    outcome(
        overspend == 0 && mismatched == 0 && out_of_clamp == 0,
        format!(
            "{} campaigns: {overspend} overspent, {mismatched} remaining-budget mismatches, {out_of_clamp} ratios outside the clamp",
            campaigns.len()
        ),
    )
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("convergence-bound reproduction", convergence_bound_reproduction),
        (
            "simulated convergence respects bounds",
            simulated_convergence_within_bound,
        ),
        ("one-iteration convergence", one_iteration_convergence),
        ("fixed-point residual", fixed_point_residual),
        ("Banach distance envelope", banach_distance_envelope),
        ("period doubling", period_doubling),
        ("second-iterate crossings", second_iterate_crossings),
        ("envelope bracketing", envelope_bracketing),
        ("replay pacing quality", replay_pacing_quality),
        ("accounting and safety", accounting_and_safety),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        if !o.pass {
            failed += 1;
        }
        println!(
            "[{}] {:>2} {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            i + 1,
            o.detail
        );
    }
    println!(
        "acceptance: {}/{} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
