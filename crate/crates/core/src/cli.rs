//! The `pacer` command line.
//!
//! Exit codes: 0 on success, 2 for bad input, 3 when an analysis is
//! requested outside the regime where it is defined.

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::analysis::{self, analyze, k_range, period_doubling_sweep, tail_window, AnalysisError, AnalysisReport};
use crate::auction::{
    generate_bid_log, ingest_bid_log_path, mean_impressions, replay_campaign, suggest_budget, BidDistribution, BidLog,
    IngestMode, Intensity, LogProfile, ReplayOptions, TieRule,
};
use crate::cost::{parse_cost, CostFn};
use crate::engine::{run_campaign, CampaignConfig, Clamp, PacingSchedule, Trajectory};
use crate::report::{spend_report, SpendReport};

/// Win fraction used to size a replay budget when none is given.
const DEFAULT_WIN_FRACTION: f64 = 0.6;

#[derive(Debug)]
pub enum CliError {
    Input(String),
    Regime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Regime(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(m) | CliError::Regime(m) => f.write_str(m),
        }
    }
}

fn input<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Input(e.to_string())
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::Regime { .. } => CliError::Regime(e.to_string()),
            other => CliError::Input(other.to_string()),
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(
    name = "pacer",
    version,
    about = "Budget pacing simulator, analyzer and auction replay"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a campaign against a latent cost function.
    Simulate(SimulateArgs),
    /// Closed-form analysis of a monomial cost.
    Analyze(AnalyzeArgs),
    /// Sweep the cost exponent of a capped monomial and summarise the bid tail.
    Sweep(SweepArgs),
    /// Pace a campaign against a first-price auction bid log.
    Replay(ReplayArgs),
    /// Write a synthetic bid log.
    GenLog(GenLogArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Args, Default)]
struct CampaignArgs {
    /// Campaign budget B.
    #[arg(long)]
    budget: Option<f64>,
    /// Number of pacing periods T.
    #[arg(long)]
    periods: Option<usize>,
    /// Initial bid; defaults to B/(nT) or B/T.
    #[arg(long)]
    b0: Option<f64>,
    /// Convergence tolerance on successive bids.
    #[arg(long)]
    tol: Option<f64>,
    /// uniform | scaled:<κ,...> | subthreshold:<τ>,<σ>
    #[arg(long)]
    schedule: Option<String>,
    /// <min>,<max> bounds on the bid ratio, or "off".
    #[arg(long)]
    clamp: Option<String>,
    /// Impressions per period, used for the default initial bid.
    #[arg(long)]
    impressions: Option<u64>,
    /// JSON file with campaign, schedule and cost settings. Flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Args, Default)]
struct OutputArgs {
    /// Directory for output files; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t)]
    format: Format,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    campaign: CampaignArgs,
    /// Cost expression, e.g. "min(1*b^0.5,100)".
    #[arg(long)]
    cost: Option<String>,
    /// Accepted for symmetry with the other subcommands; simulation is
    /// deterministic.
    #[arg(long)]
    seed: Option<u64>,
    /// Report the fraction of periods whose spend misses the target by more
    /// than this amount.
    #[arg(long)]
    epsilon: Option<f64>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Quantity {
    FixedPoint,
    Lambda,
    Lipschitz,
    Gamma,
    Bound,
    Distance,
    MaxDistance,
    Cycle,
    Regime,
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    campaign: CampaignArgs,
    /// Monomial cost "C*b^k", optionally capped as "min(C*b^k,M)".
    #[arg(long)]
    cost: Option<String>,
    /// Print a single quantity instead of the full report.
    #[arg(long, value_enum)]
    only: Option<Quantity>,
    /// Period for the distance bound and stability multiplier.
    #[arg(long, default_value_t = 1)]
    t: usize,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    campaign: CampaignArgs,
    /// Exponent range <start>:<end>:<step>.
    #[arg(long)]
    k: String,
    /// Cost coefficient C.
    #[arg(long, default_value_t = 1.0)]
    coefficient: f64,
    /// Spend cap M.
    #[arg(long, default_value_t = 100.0)]
    cap: f64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Tie {
    WeWin,
    WeLose,
}

#[derive(Debug, Args)]
struct ReplayArgs {
    #[command(flatten)]
    campaign: CampaignArgs,
    /// Bid log CSV; a synthetic log is generated from --seed when omitted.
    #[arg(long)]
    log: Option<PathBuf>,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Tie::WeWin)]
    tie: Tie,
    /// Stop at the first malformed log row instead of reporting them all.
    #[arg(long)]
    fail_fast: bool,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct GenLogArgs {
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 96)]
    periods: usize,
    /// Mean impressions per period.
    #[arg(long, default_value_t = 1000.0)]
    impressions: f64,
    /// Mean competitor bids per impression.
    #[arg(long, default_value_t = 2.0)]
    competitors: f64,
    /// Log-normal location of competitor bids.
    #[arg(long, default_value_t = 0.0)]
    bid_mu: f64,
    /// Log-normal scale of competitor bids.
    #[arg(long, default_value_t = 1.0)]
    bid_sigma: f64,
    /// Relative amplitude of the daily traffic cycle.
    #[arg(long, default_value_t = 0.5)]
    amplitude: f64,
    /// Time of peak traffic as a fraction of the day.
    #[arg(long, default_value_t = 0.5)]
    peak: f64,
    /// Flat traffic instead of a daily cycle.
    #[arg(long)]
    constant: bool,
    /// Directory for bid_log.csv; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    budget: Option<f64>,
    periods: Option<usize>,
    initial_bid: Option<f64>,
    tolerance: Option<f64>,
    impressions_per_period: Option<u64>,
    clamp: Option<Clamp>,
    clamp_enabled: Option<bool>,
    schedule: Option<PacingSchedule>,
    cost: Option<String>,
}

struct Resolved {
    config: CampaignConfig,
    schedule: PacingSchedule,
    cost: Option<String>,
}

fn parse_clamp(s: &str) -> Result<Option<Clamp>> {
    if s.trim() == "off" {
        return Ok(None);
    }
    let parts: Vec<&str> = s.split(',').collect();
    let [lo, hi] = parts[..] else {
        return Err(CliError::Input(format!(
            "--clamp expects <min>,<max> or off, got '{s}'"
        )));
    };
    let num = |x: &str| {
        x.trim()
            .parse::<f64>()
            .map_err(|_| CliError::Input(format!("--clamp value '{x}' is not a number")))
    };
    Clamp::new(num(lo)?, num(hi)?).map(Some).map_err(input)
}

impl CampaignArgs {
    /// Merges the config file and flags. `fallback` supplies budget and
    /// periods when neither source does.
    fn resolve(&self, clamp_by_default: bool, fallback: Option<(f64, usize)>) -> Result<Resolved> {
        let file: FileConfig = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
                serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?
            }
            None => FileConfig::default(),
        };
        let budget = self
            .budget
            .or(file.budget)
            .or(fallback.map(|f| f.0))
            .ok_or_else(|| CliError::Input("--budget is required".into()))?;
        let periods = self
            .periods
            .or(file.periods)
            .or(fallback.map(|f| f.1))
            .ok_or_else(|| CliError::Input("--periods is required".into()))?;
        let mut config = CampaignConfig::new(budget, periods).map_err(input)?;
        config.initial_bid = self.b0.or(file.initial_bid);
        if let Some(tol) = self.tol.or(file.tolerance) {
            config.tolerance = tol;
        }
        config.impressions_per_period = self.impressions.or(file.impressions_per_period);
        config.clamp = file.clamp.unwrap_or_default();
        config.clamp_enabled = file.clamp_enabled.unwrap_or(clamp_by_default);
        if let Some(c) = &self.clamp {
            match parse_clamp(c)? {
                Some(c) => config = config.with_clamp(c),
                None => config = config.without_clamp(),
            }
        }
        config.validate().map_err(input)?;
        let schedule = match &self.schedule {
            Some(s) => s.parse().map_err(input)?,
            None => file.schedule.unwrap_or(PacingSchedule::Uniform),
        };
        schedule.validate(config.periods).map_err(input)?;
        Ok(Resolved {
            config,
            schedule,
            cost: file.cost,
        })
    }
}

/// Writes `bytes` to `dir/name` through a temporary file and a rename.
fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::Input(format!("{}: {e}", dir.display())))?;
    let target = dir.join(name);
    let tmp = dir.join(format!(".{name}.{}.tmp", process::id()));
    let io_err = |e: io::Error| CliError::Input(format!("{}: {e}", target.display()));
    fs::write(&tmp, bytes).map_err(io_err)?;
    fs::rename(&tmp, &target).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        io_err(e)
    })
}

fn to_json<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut v = serde_json::to_vec_pretty(value).map_err(input)?;
    v.push(b'\n');
    Ok(v)
}

fn trajectory_csv(traj: &Trajectory) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    traj.write_csv(&mut buf).map_err(input)?;
    Ok(buf)
}

fn opt<T: ToString>(x: Option<T>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn parse_cost_arg(cost: Option<String>) -> Result<CostFn> {
    let text = cost.ok_or_else(|| CliError::Input("--cost is required".into()))?;
    parse_cost(&text).map_err(|e| CliError::Input(format!("{e}\n  in: {text}")))
}

fn summary(out: &mut dyn Write, traj: &Trajectory, report: &SpendReport) -> io::Result<()> {
    writeln!(
        out,
        "spent {:.6} of {} ({:.4}%), leftover fraction {:.6}",
        report.total_spend,
        report.budget,
        100.0 * traj.spend_fraction(),
        report.leftover_fraction
    )?;
    writeln!(
        out,
        "converged at: {}, max curve deviation: {:.6}",
        report.converged_at.map_or("never".into(), |t| t.to_string()),
        report.max_curve_deviation
    )
}

fn simulate(args: SimulateArgs, out: &mut dyn Write) -> Result<()> {
    let resolved = args.campaign.resolve(false, None)?;
    let mut cost = parse_cost_arg(args.cost.or(resolved.cost))?;
    let traj = run_campaign(&resolved.config, &mut cost, &resolved.schedule).map_err(input)?;
    let report = spend_report(&traj, &resolved.schedule, args.epsilon).map_err(input)?;
    let analysis: Option<AnalysisReport> = cost.as_capped_monomial().and_then(|(m, cap)| {
        analyze(
            resolved.config.budget,
            resolved.config.periods,
            m.coefficient,
            m.exponent,
            cap,
            resolved.config.tolerance,
        )
        .ok()
    });

    let io = |e: io::Error| input(e);
    match (&args.output.out, args.output.format) {
        (Some(dir), format) => {
            match format {
                Format::Csv => write_atomic(dir, "trajectory.csv", &trajectory_csv(&traj)?)?,
                Format::Json => write_atomic(dir, "trajectory.json", &to_json(&traj)?)?,
            }
            if let Some(a) = &analysis {
                write_atomic(dir, "analysis.json", &to_json(a)?)?;
            }
            write_atomic(dir, "spend_report.json", &to_json(&report)?)?;
            summary(out, &traj, &report).map_err(io)?;
        }
        (None, Format::Csv) => out.write_all(&trajectory_csv(&traj)?).map_err(io)?,
        (None, Format::Json) => {
            #[derive(Serialize)]
            struct Doc<'a> {
                analysis: &'a Option<AnalysisReport>,
                report: &'a SpendReport,
                trajectory: &'a Trajectory,
            }
            out.write_all(&to_json(&Doc {
                analysis: &analysis,
                report: &report,
                trajectory: &traj,
            })?)
            .map_err(io)?
        }
    }
    Ok(())
}

fn analyze_cmd(args: AnalyzeArgs, out: &mut dyn Write) -> Result<()> {
    let resolved = args.campaign.resolve(false, None)?;
    let cost = parse_cost_arg(args.cost.or(resolved.cost))?;
    let (mono, cap) = cost
        .as_capped_monomial()
        .ok_or_else(|| CliError::Input("analysis needs a monomial cost 'C*b^k' or 'min(C*b^k,M)'".into()))?;
    let (b, t, c, k) = (
        resolved.config.budget,
        resolved.config.periods,
        mono.coefficient,
        mono.exponent,
    );
    let eps = resolved.config.tolerance;
    let io = |e: io::Error| input(e);

    let Some(q) = args.only else {
        let report = analyze(b, t, c, k, cap, eps)?;
        let json = to_json(&report)?;
        match &args.output.out {
            Some(dir) => {
                write_atomic(dir, "analysis.json", &json)?;
                writeln!(out, "regime: {}", report.regime).map_err(io)?;
            }
            None => out.write_all(&json).map_err(io)?,
        }
        return Ok(());
    };

    let value = match q {
        Quantity::FixedPoint => serde_json::json!(analysis::fixed_point(b, t, c, k, 0, &[])?),
        Quantity::Lambda => serde_json::json!(analysis::stability_multiplier(k, t, args.t.min(t - 1))?),
        Quantity::Lipschitz => serde_json::json!((1.0 - k).abs()),
        Quantity::Gamma => serde_json::json!(analysis::gamma(b, t, c)),
        Quantity::Bound => serde_json::json!(analysis::convergence_time_bound(eps, b, t, c, k)?),
        Quantity::Distance => serde_json::json!(analysis::distance_bound(args.t, b, t, c, k)?),
        Quantity::MaxDistance => serde_json::json!(analysis::max_initial_distance(b, t, c, k)?),
        Quantity::Cycle => {
            let m = cap.ok_or_else(|| CliError::Input("cycle points need a capped cost 'min(C*b^k,M)'".into()))?;
            serde_json::json!(analysis::two_cycle_points(b, t, c, k, m)?)
        }
        Quantity::Regime => serde_json::json!(analysis::classify_regime(k)),
    };
    let json = to_json(&value)?;
    match &args.output.out {
        Some(dir) => write_atomic(dir, "analysis.json", &json)?,
        None => out.write_all(&json).map_err(io)?,
    }
    Ok(())
}

fn parse_k_range(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    let nums: Vec<f64> = parts
        .iter()
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| CliError::Input(format!("--k expects <start>:<end>:<step>, got '{s}'")))?;
    let [a, b, step] = nums[..] else {
        return Err(CliError::Input(format!("--k expects <start>:<end>:<step>, got '{s}'")));
    };
    k_range(a, b, step).map_err(input)
}

fn sweep(args: SweepArgs, out: &mut dyn Write) -> Result<()> {
    let resolved = args.campaign.resolve(false, None)?;
    let ks = parse_k_range(&args.k)?;
    let points = period_doubling_sweep(&resolved.config, args.coefficient, args.cap, &ks)?;
    let io = |e: io::Error| input(e);

    let doc = match args.output.format {
        Format::Json => to_json(&points)?,
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record([
                "k",
                "bands",
                "tail_min",
                "tail_max",
                "converged_at",
                "spend_fraction",
                "b_minus",
                "b_plus",
            ])
            .map_err(input)?;
            for p in &points {
                w.write_record([
                    p.k.to_string(),
                    p.bands.to_string(),
                    p.tail_min.to_string(),
                    p.tail_max.to_string(),
                    opt(p.converged_at),
                    p.spend_fraction.to_string(),
                    opt(p.b_minus),
                    opt(p.b_plus),
                ])
                .map_err(input)?;
            }
            w.into_inner().map_err(input)?
        }
    };
    match &args.output.out {
        Some(dir) => {
            let name = match args.output.format {
                Format::Csv => "sweep.csv",
                Format::Json => "sweep.json",
            };
            write_atomic(dir, name, &doc)?;
            write_atomic(dir, "sweep_tail.csv", &sweep_tail(&resolved.config, &args, &ks)?)?;
            for p in &points {
                writeln!(out, "k={} bands={}", p.k, p.bands).map_err(io)?;
            }
        }
        None => out.write_all(&doc).map_err(io)?,
    }
    Ok(())
}

/// Tail bids of every sweep point, for bifurcation plots.
fn sweep_tail(config: &CampaignConfig, args: &SweepArgs, ks: &[f64]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["k", "t", "bid"]).map_err(input)?;
    for &k in ks {
        let mut cost = CostFn::capped_monomial(args.coefficient, k, args.cap).map_err(input)?;
        let traj = run_campaign(config, &mut cost, &PacingSchedule::Uniform).map_err(input)?;
        for r in traj
            .records
            .iter()
            .filter(|r| tail_window(config.periods).contains(&r.period))
        {
            w.write_record([k.to_string(), r.period.to_string(), r.bid.to_string()])
                .map_err(input)?;
        }
    }
    w.into_inner().map_err(input)
}

fn replay(args: ReplayArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let io = |e: io::Error| input(e);
    let log: BidLog = match &args.log {
        Some(path) => {
            let mode = if args.fail_fast {
                IngestMode::FailFast
            } else {
                IngestMode::Accumulate
            };
            let ingested = ingest_bid_log_path(path, mode).map_err(input)?;
            if !ingested.rejects.is_empty() {
                for r in &ingested.rejects {
                    writeln!(err, "{}:{}: {}", path.display(), r.line, r.message).map_err(io)?;
                }
                return Err(CliError::Input(format!(
                    "{} malformed row(s) in {}",
                    ingested.rejects.len(),
                    path.display()
                )));
            }
            ingested.log
        }
        None => generate_bid_log(args.seed, &LogProfile::default()).map_err(input)?,
    };
    let periods = args.campaign.periods.unwrap_or(log.len());
    let budget = match args.campaign.budget {
        Some(b) => b,
        None => suggest_budget(&log, periods, DEFAULT_WIN_FRACTION).map_err(input)?,
    };
    let mut resolved = args.campaign.resolve(true, Some((budget, periods)))?;
    if resolved.config.impressions_per_period.is_none() {
        resolved.config.impressions_per_period = Some(mean_impressions(&log));
    }
    let options = ReplayOptions {
        tie_rule: match args.tie {
            Tie::WeWin => TieRule::WeWin,
            Tie::WeLose => TieRule::WeLose,
        },
        value_multiplier: 1.0,
    };
    let r = replay_campaign(&resolved.config, &log, &resolved.schedule, options).map_err(input)?;

    let mut curve = csv::Writer::from_writer(Vec::new());
    curve
        .write_record(["t", "spend_fraction", "target_fraction"])
        .map_err(input)?;
    for (t, (s, d)) in r.report.spend_curve.iter().zip(&r.report.target_curve).enumerate() {
        curve
            .write_record([(t + 1).to_string(), s.to_string(), d.to_string()])
            .map_err(input)?;
    }
    let curve = curve.into_inner().map_err(input)?;

    match &args.output.out {
        Some(dir) => {
            write_atomic(dir, "spend_report.json", &to_json(&r.report)?)?;
            write_atomic(dir, "spend_curve.csv", &curve)?;
            match args.output.format {
                Format::Csv => write_atomic(dir, "trajectory.csv", &trajectory_csv(&r.trajectory)?)?,
                Format::Json => write_atomic(dir, "trajectory.json", &to_json(&r.trajectory)?)?,
            }
            write_atomic(dir, "auctions.json", &to_json(&r.outcomes)?)?;
            summary(out, &r.trajectory, &r.report).map_err(io)?;
        }
        None => match args.output.format {
            Format::Json => out.write_all(&to_json(&r.report)?).map_err(io)?,
            Format::Csv => out.write_all(&curve).map_err(io)?,
        },
    }
    Ok(())
}

fn gen_log(args: GenLogArgs, out: &mut dyn Write) -> Result<()> {
    let profile = LogProfile {
        periods: args.periods,
        impressions_per_period: args.impressions,
        competitors_per_impression: args.competitors,
        bids: BidDistribution::LogNormal {
            mu: args.bid_mu,
            sigma: args.bid_sigma,
        },
        intensity: if args.constant {
            Intensity::Constant
        } else {
            Intensity::Diurnal {
                amplitude: args.amplitude,
                peak: args.peak,
            }
        },
        ..LogProfile::default()
    };
    let log = generate_bid_log(args.seed, &profile).map_err(input)?;
    let mut buf = Vec::new();
    log.write_csv(&mut buf).map_err(input)?;
    match &args.out {
        Some(dir) => {
            write_atomic(dir, "bid_log.csv", &buf)?;
            writeln!(
                out,
                "wrote {} periods, {} impressions",
                log.len(),
                log.impression_count()
            )
            .map_err(input)?;
        }
        None => out.write_all(&buf).map_err(input)?,
    }
    Ok(())
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            let _ = if code == 0 {
                out.write_all(text.as_bytes())
            } else {
                err.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let result = match cli.command {
        Command::Simulate(a) => simulate(a, out),
        Command::Analyze(a) => analyze_cmd(a, out),
        Command::Sweep(a) => sweep(a, out),
        Command::Replay(a) => replay(a, out, err),
        Command::GenLog(a) => gen_log(a, out),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
