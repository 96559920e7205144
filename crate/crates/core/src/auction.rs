//! First-price auction replay.
//!
//! A bid log holds, for each period, the impressions that arrived and the
//! competitor bids on each. The paced bid is entered into every auction of
//! its period: the highest bidder wins and pays its own bid, so the period
//! cost is `bid × wins`.
//!
//! Logs are exchanged as CSV with header `period,impression,bid`, one row per
//! competitor bid. An impression nobody else bid on is written as a single
//! row with an empty `bid` field.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fs::File;
use std::io::{self, Read};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Poisson, Uniform};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cost::CostError;
use crate::engine::{run_campaign, CampaignConfig, CostSource, Observation, PacingError, PacingSchedule, Trajectory};
use crate::report::{spend_report, ReportError, SpendReport};

#[derive(Debug, Error)]
pub enum AuctionError {
    #[error("our bid must be a non-negative finite number, got {0}")]
    Bid(f64),
    #[error("competitor bid {bid} in period {period} is not a positive finite number")]
    CompetitorBid { period: usize, bid: f64 },
    #[error("period indices must be strictly increasing ({previous} then {next})")]
    PeriodOrder { previous: usize, next: usize },
    #[error("bid log has no periods")]
    EmptyLog,
    #[error("bid log covers {have} periods but the campaign needs {need}")]
    LogTooShort { have: usize, need: usize },
    #[error("invalid profile: {0}")]
    Profile(String),
    #[error("value multiplier must be positive and finite, got {0}")]
    ValueMultiplier(f64),
    #[error("line {line}: {message}")]
    Row { line: u64, message: String },
    #[error("bid log header must be 'period,impression,bid', got '{0}'")]
    Header(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Pacing(#[from] PacingError),
    #[error(transparent)]
    Report(#[from] ReportError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Impression {
    pub id: u64,
    /// Competitor bids, possibly none.
    pub bids: Vec<f64>,
}

impl Impression {
    pub fn max_bid(&self) -> Option<f64> {
        self.bids.iter().copied().reduce(f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Period {
    pub index: usize,
    /// In arrival order.
    pub impressions: Vec<Impression>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LogSource {
    File { path: String },
    Synthetic { seed: u64 },
    Memory,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BidLog {
    /// `periods[i].index == i`.
    pub periods: Vec<Period>,
    pub period_label: String,
    pub source: LogSource,
}

impl BidLog {
    /// Validates bids and period order. Period indices that are skipped are
    /// filled with empty periods.
    pub fn new(periods: Vec<Period>, period_label: impl Into<String>, source: LogSource) -> Result<Self, AuctionError> {
        if periods.is_empty() {
            return Err(AuctionError::EmptyLog);
        }
        let mut out: Vec<Period> = Vec::with_capacity(periods.len());
        for p in periods {
            if let Some(prev) = out.last() {
                if p.index <= prev.index {
                    return Err(AuctionError::PeriodOrder {
                        previous: prev.index,
                        next: p.index,
                    });
                }
            }
            for imp in &p.impressions {
                if let Some(&bid) = imp.bids.iter().find(|b| !(**b > 0.0 && b.is_finite())) {
                    return Err(AuctionError::CompetitorBid { period: p.index, bid });
                }
            }
            while out.len() < p.index {
                out.push(Period {
                    index: out.len(),
                    impressions: Vec::new(),
                });
            }
            out.push(p);
        }
        Ok(BidLog {
            periods: out,
            period_label: period_label.into(),
            source,
        })
    }

    pub fn len(&self) -> usize {
        self.periods.len()
    }

    pub fn is_empty(&self) -> bool {
        self.periods.is_empty()
    }

    pub fn impression_count(&self) -> usize {
        self.periods.iter().map(|p| p.impressions.len()).sum()
    }

    /// Writes the log as `period,impression,bid` CSV.
    pub fn write_csv<W: io::Write>(&self, out: W) -> Result<(), AuctionError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["period", "impression", "bid"])?;
        for p in &self.periods {
            let period = p.index.to_string();
            for imp in &p.impressions {
                let id = imp.id.to_string();
                if imp.bids.is_empty() {
                    w.write_record([period.as_str(), id.as_str(), ""])?;
                }
                for b in &imp.bids {
                    w.write_record([period.as_str(), id.as_str(), b.to_string().as_str()])?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TieRule {
    #[default]
    WeWin,
    WeLose,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuctionOutcome {
    pub period: usize,
    pub impressions_contested: usize,
    pub wins: usize,
    pub cost: f64,
    pub win_rate: f64,
}

fn wins_impression(our_bid: f64, imp: &Impression, tie: TieRule) -> bool {
    if our_bid <= 0.0 {
        return false;
    }
    match (imp.max_bid(), tie) {
        (None, _) => true,
        (Some(m), TieRule::WeWin) => our_bid >= m,
        (Some(m), TieRule::WeLose) => our_bid > m,
    }
}

fn auction(
    our_bid: f64,
    period: &Period,
    tie: TieRule,
    budget_left: f64,
) -> Result<(AuctionOutcome, bool), AuctionError> {
    if !(our_bid >= 0.0 && our_bid.is_finite()) {
        return Err(AuctionError::Bid(our_bid));
    }
    let mut wins = 0usize;
    let mut limited = false;
    for imp in &period.impressions {
        if wins_impression(our_bid, imp, tie) {
            if our_bid * (wins + 1) as f64 > budget_left {
                limited = true;
                break;
            }
            wins += 1;
        }
    }
    let n = period.impressions.len();
    Ok((
        AuctionOutcome {
            period: period.index,
            impressions_contested: n,
            wins,
            cost: our_bid * wins as f64,
            win_rate: if n == 0 { 0.0 } else { wins as f64 / n as f64 },
        },
        limited,
    ))
}

/// Enters `our_bid` into every auction of `period`.
pub fn run_period_auction(our_bid: f64, period: &Period, tie: TieRule) -> Result<AuctionOutcome, AuctionError> {
    auction(our_bid, period, tie, f64::INFINITY).map(|(o, _)| o)
}

/// Same as [`run_period_auction`] but stops taking wins, in arrival order,
/// once another win would exceed `budget_left`. The flag reports whether
/// that happened.
pub fn run_budgeted_auction(
    our_bid: f64,
    period: &Period,
    tie: TieRule,
    budget_left: f64,
) -> Result<(AuctionOutcome, bool), AuctionError> {
    auction(our_bid, period, tie, budget_left)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReplayOptions {
    pub tie_rule: TieRule,
    /// Constant multiplier applied to the period bid in every auction.
    pub value_multiplier: f64,
}

impl Default for ReplayOptions {
    fn default() -> Self {
        ReplayOptions {
            tie_rule: TieRule::WeWin,
            value_multiplier: 1.0,
        }
    }
}

/// Empirical cost source backed by a bid log.
pub struct AuctionCost<'a> {
    log: &'a BidLog,
    options: ReplayOptions,
    outcomes: Vec<AuctionOutcome>,
}

impl<'a> AuctionCost<'a> {
    pub fn new(log: &'a BidLog, options: ReplayOptions) -> Self {
        AuctionCost {
            log,
            options,
            outcomes: Vec::new(),
        }
    }

    pub fn outcomes(&self) -> &[AuctionOutcome] {
        &self.outcomes
    }

    pub fn into_outcomes(self) -> Vec<AuctionOutcome> {
        self.outcomes
    }
}

impl CostSource for AuctionCost<'_> {
    fn observe(&mut self, period: usize, bid: f64, remaining: f64) -> Result<Observation, CostError> {
        let p = self
            .log
            .periods
            .get(period)
            .ok_or_else(|| CostError::Invalid(format!("bid log has no period {period}")))?;
        let bid = bid * self.options.value_multiplier;
        let (outcome, limited) = run_budgeted_auction(bid, p, self.options.tie_rule, remaining)
            .map_err(|e| CostError::Invalid(e.to_string()))?;
        self.outcomes.push(outcome);
        Ok(Observation {
            cost: outcome.cost,
            budget_limited: limited,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Replay {
    pub trajectory: Trajectory,
    pub report: SpendReport,
    pub outcomes: Vec<AuctionOutcome>,
}

/// Paces a campaign against the auctions in `log`. Only the first
/// `config.periods` periods are used.
pub fn replay_campaign(
    config: &CampaignConfig,
    log: &BidLog,
    schedule: &PacingSchedule,
    options: ReplayOptions,
) -> Result<Replay, AuctionError> {
    if log.is_empty() {
        return Err(AuctionError::EmptyLog);
    }
    if log.len() < config.periods {
        return Err(AuctionError::LogTooShort {
            have: log.len(),
            need: config.periods,
        });
    }
    if !(options.value_multiplier > 0.0 && options.value_multiplier.is_finite()) {
        return Err(AuctionError::ValueMultiplier(options.value_multiplier));
    }
    let mut source = AuctionCost::new(log, options);
    let trajectory = run_campaign(config, &mut source, schedule)?;
    let report = spend_report(&trajectory, schedule, None)?;
    Ok(Replay {
        trajectory,
        report,
        outcomes: source.into_outcomes(),
    })
}

/// Budget under which bidding the `win_fraction` quantile of impression
/// maxima wins about that fraction of an average period, every period:
/// `B = T · n̄ · q · win_fraction`. Uncontested impressions count as maximum 0.
pub fn suggest_budget(log: &BidLog, periods: usize, win_fraction: f64) -> Result<f64, AuctionError> {
    if !(win_fraction > 0.0 && win_fraction <= 1.0) {
        return Err(AuctionError::Profile(format!(
            "win fraction must be in (0, 1], got {win_fraction}"
        )));
    }
    let mut maxima: Vec<f64> = log
        .periods
        .iter()
        .flat_map(|p| &p.impressions)
        .map(|i| i.max_bid().unwrap_or(0.0))
        .collect();
    if maxima.is_empty() {
        return Err(AuctionError::EmptyLog);
    }
    maxima.sort_by(f64::total_cmp);
    let rank = ((win_fraction * maxima.len() as f64).ceil() as usize).clamp(1, maxima.len()) - 1;
    let q = maxima[rank];
    let mean_impressions = maxima.len() as f64 / log.len() as f64;
    Ok(periods as f64 * mean_impressions * q * win_fraction)
}

/// Mean impressions per period, rounded, at least 1.
pub fn mean_impressions(log: &BidLog) -> u64 {
    ((log.impression_count() as f64 / log.len().max(1) as f64).round() as u64).max(1)
}

/// Shape of intraday traffic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Intensity {
    Constant,
    /// `1 + amplitude · cos(2π (t/T - peak))`, with `peak` the fraction of
    /// the day at which traffic is highest.
    Diurnal {
        amplitude: f64,
        peak: f64,
    },
}

impl Intensity {
    pub fn at(&self, period: usize, periods: usize) -> f64 {
        match *self {
            Intensity::Constant => 1.0,
            Intensity::Diurnal { amplitude, peak } => {
                1.0 + amplitude * (2.0 * PI * (period as f64 / periods as f64 - peak)).cos()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BidDistribution {
    LogNormal { mu: f64, sigma: f64 },
    Uniform { low: f64, high: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogProfile {
    pub periods: usize,
    /// Mean impressions per period before intensity modulation. Every period
    /// receives at least one impression.
    pub impressions_per_period: f64,
    /// Mean number of competitor bids per impression.
    pub competitors_per_impression: f64,
    pub bids: BidDistribution,
    pub intensity: Intensity,
    pub period_label: String,
}

impl Default for LogProfile {
    /// One day of fifteen-minute periods with a midday traffic peak.
    fn default() -> Self {
        LogProfile {
            periods: 96,
            impressions_per_period: 1000.0,
            competitors_per_impression: 2.0,
            bids: BidDistribution::LogNormal { mu: 0.0, sigma: 1.0 },
            intensity: Intensity::Diurnal {
                amplitude: 0.5,
                peak: 0.5,
            },
            period_label: "15m".into(),
        }
    }
}

impl LogProfile {
    fn validate(&self) -> Result<(), AuctionError> {
        let bad = |m: String| Err(AuctionError::Profile(m));
        if self.periods == 0 {
            return bad("at least one period is required".into());
        }
        if !(self.impressions_per_period > 0.0 && self.impressions_per_period.is_finite()) {
            return bad(format!(
                "impressions per period must be positive, got {}",
                self.impressions_per_period
            ));
        }
        if !(self.competitors_per_impression >= 0.0 && self.competitors_per_impression.is_finite()) {
            return bad(format!(
                "competitors per impression must be non-negative, got {}",
                self.competitors_per_impression
            ));
        }
        match self.bids {
            BidDistribution::LogNormal { mu, sigma } => {
                if !(mu.is_finite() && sigma >= 0.0 && sigma.is_finite()) {
                    return bad(format!("log-normal parameters ({mu}, {sigma}) are invalid"));
                }
            }
            BidDistribution::Uniform { low, high } => {
                if !(low > 0.0 && high >= low && high.is_finite()) {
                    return bad(format!("uniform bids need 0 < low <= high, got [{low}, {high}]"));
                }
            }
        }
        if let Intensity::Diurnal { amplitude, peak } = self.intensity {
            if !((0.0..1.0).contains(&amplitude) && peak.is_finite()) {
                return bad(format!("diurnal amplitude must be in [0, 1), got {amplitude}"));
            }
        }
        Ok(())
    }
}

fn poisson(rng: &mut ChaCha8Rng, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    let d = Poisson::new(mean).expect("validated positive mean");
    d.sample(rng) as u64
}

/// Synthesises a bid log. Identical seeds give identical logs.
pub fn generate_bid_log(seed: u64, profile: &LogProfile) -> Result<BidLog, AuctionError> {
    profile.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw: Box<dyn Fn(&mut ChaCha8Rng) -> f64> = match profile.bids {
        BidDistribution::LogNormal { mu, sigma } => {
            let d = LogNormal::new(mu, sigma).map_err(|e| AuctionError::Profile(e.to_string()))?;
            Box::new(move |r| d.sample(r))
        }
        BidDistribution::Uniform { low, high } => {
            if low == high {
                Box::new(move |_| low)
            } else {
                let d = Uniform::new(low, high).map_err(|e| AuctionError::Profile(e.to_string()))?;
                Box::new(move |r| d.sample(r))
            }
        }
    };
    let mut periods = Vec::with_capacity(profile.periods);
    for t in 0..profile.periods {
        let mean = profile.impressions_per_period * profile.intensity.at(t, profile.periods);
        let n = poisson(&mut rng, mean).max(1);
        let impressions = (0..n)
            .map(|id| {
                let m = poisson(&mut rng, profile.competitors_per_impression);
                let bids = (0..m).map(|_| draw(&mut rng)).collect();
                Impression { id, bids }
            })
            .collect();
        periods.push(Period { index: t, impressions });
    }
    BidLog::new(periods, profile.period_label.clone(), LogSource::Synthetic { seed })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IngestMode {
    /// Skip malformed rows and report them all.
    #[default]
    Accumulate,
    /// Stop at the first malformed row.
    FailFast,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowReject {
    pub line: u64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ingested {
    pub log: BidLog,
    pub rejects: Vec<RowReject>,
}

struct Builder {
    periods: Vec<Period>,
    slots: HashMap<u64, usize>,
}

impl Builder {
    fn current(&self) -> Option<usize> {
        self.periods.last().map(|p| p.index)
    }

    fn add(&mut self, period: usize, id: u64, bid: Option<f64>) -> Result<(), String> {
        match self.current() {
            Some(cur) if period < cur => {
                return Err(format!("period {period} appears after period {cur}"));
            }
            Some(cur) if period == cur => {}
            _ => {
                self.periods.push(Period {
                    index: period,
                    impressions: Vec::new(),
                });
                self.slots.clear();
            }
        }
        let p = self.periods.last_mut().expect("pushed above");
        match (self.slots.get(&id), bid) {
            (None, bid) => {
                self.slots.insert(id, p.impressions.len());
                p.impressions.push(Impression {
                    id,
                    bids: bid.into_iter().collect(),
                });
            }
            (Some(&i), Some(b)) if !p.impressions[i].bids.is_empty() => p.impressions[i].bids.push(b),
            (Some(_), _) => {
                return Err(format!(
                    "impression {id} in period {period} mixes an empty bid with other rows"
                ));
            }
        }
        Ok(())
    }
}

fn parse_row(record: &csv::StringRecord) -> Result<(usize, u64, Option<f64>), String> {
    if record.len() != 3 {
        return Err(format!("expected 3 fields, found {}", record.len()));
    }
    let period: usize = record[0]
        .trim()
        .parse()
        .map_err(|_| format!("period '{}' is not a non-negative integer", &record[0]))?;
    let id: u64 = record[1]
        .trim()
        .parse()
        .map_err(|_| format!("impression '{}' is not a non-negative integer", &record[1]))?;
    let raw = record[2].trim();
    let bid = if raw.is_empty() {
        None
    } else {
        let b: f64 = raw.parse().map_err(|_| format!("bid '{raw}' is not a number"))?;
        if !(b > 0.0 && b.is_finite()) {
            return Err(format!("bid {b} must be positive and finite"));
        }
        Some(b)
    };
    Ok((period, id, bid))
}

/// Reads a `period,impression,bid` CSV stream.
pub fn ingest_bid_log<R: Read>(reader: R, mode: IngestMode, source: LogSource) -> Result<Ingested, AuctionError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    if header != ["period", "impression", "bid"] {
        return Err(AuctionError::Header(header.join(",")));
    }
    let mut builder = Builder {
        periods: Vec::new(),
        slots: HashMap::new(),
    };
    let mut rejects = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let outcome = parse_row(&record).and_then(|(p, id, bid)| builder.add(p, id, bid));
        if let Err(message) = outcome {
            match mode {
                IngestMode::FailFast => return Err(AuctionError::Row { line, message }),
                IngestMode::Accumulate => rejects.push(RowReject { line, message }),
            }
        }
    }
    if builder.periods.is_empty() && !rejects.is_empty() {
        // Nothing survived; the first bad row says more than "empty log".
        let RowReject { line, message } = rejects.swap_remove(0);
        return Err(AuctionError::Row { line, message });
    }
    let log = BidLog::new(builder.periods, "15m", source)?;
    Ok(Ingested { log, rejects })
}

pub fn ingest_bid_log_path(path: &Path, mode: IngestMode) -> Result<Ingested, AuctionError> {
    let file = File::open(path)?;
    ingest_bid_log(
        io::BufReader::new(file),
        mode,
        LogSource::File {
            path: path.display().to_string(),
        },
    )
}
