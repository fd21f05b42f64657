//! The `edc` command-line tool.
//!
//! Every subcommand reads an optional TOML config (`--config`), applies flag
//! overrides, and writes its result to standard output or `--out`. Errors go
//! to standard error as a single `error: <kind>: <message>` line.
//!
//! Exit codes: 0 success, 1 invalid input, 2 infeasible instance or size cap.

pub mod config;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::analytic::{
    best_two_robot_lag, confirm_prob_single, confirm_prob_tour, confirm_prob_two_robots, m_robot_spacing,
    n_of, optimize_single_robot, optimize_two_robots, PolicyResult,
};
use crate::error::EdcError;
use crate::graph::{tour_period, tsp_tour, PatrolGraph, Tour};
use crate::offline::{offline_feasible, reduce_tsptw, Action, Verdict};
use crate::sim::{estimate_confirm_prob, PatrolConfig, RobotFleet};
use config::{one_line, InstanceFile, RunConfig, TsptwFile};

#[derive(Debug, Parser)]
#[command(name = "edc", version, about = "Event detection and confirmation patrol toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Confirmation probabilities of a periodic tour.
    Analyze(RunArgs),
    /// Free-running Monte Carlo of robots on the TSP tour.
    Simulate(RunArgs),
    /// Single-robot period selection.
    OptimizeSingle(RunArgs),
    /// Two-robot period and lag selection.
    OptimizeTwo(RunArgs),
    /// Spacing heuristic for m robots on one tour.
    SpacingM(RunArgs),
    /// CSV of probabilities against the patrol period.
    SweepTau(RunArgs),
    /// CSV of the two-robot probability against the lag.
    SweepLag(RunArgs),
    /// Feasibility of an offline instance file.
    OfflineCheck(FileArgs),
    /// Offline instance equivalent to a TSPTW file.
    ReduceTsptw(FileArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    critical_time: Option<f64>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    robots: Option<usize>,
    #[arg(long)]
    max_speed: Option<f64>,
    #[arg(long)]
    speed_time_scale: Option<f64>,
    #[arg(long)]
    tsp_length: Option<f64>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    lag: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replications: Option<u64>,
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long)]
    tau_from: Option<f64>,
    #[arg(long)]
    tau_to: Option<f64>,
    #[arg(long)]
    tau_steps: Option<usize>,
    #[arg(long)]
    lag_steps: Option<usize>,
}

#[derive(Debug, Args)]
struct FileArgs {
    /// Instance (offline-check) or TSPTW (reduce-tsptw) TOML file.
    input: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Io(String),
    Input(EdcError),
    Infeasible,
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Infeasible | CliError::Input(EdcError::SizeCap { .. }) => 2,
            _ => 1,
        }
    }

    fn line(&self) -> String {
        match self {
            CliError::Usage(m) => format!("error: usage: {m}"),
            CliError::Io(m) => format!("error: io: {m}"),
            CliError::Input(EdcError::Validation(m)) => format!("error: validation: {}", config::one_line(m)),
            CliError::Input(e @ EdcError::SizeCap { .. }) => format!("error: size_cap: {e}"),
            CliError::Input(e) => format!("error: validation: {e}"),
            CliError::Infeasible => "error: infeasible: no schedule satisfies every window".into(),
        }
    }
}

impl From<EdcError> for CliError {
    fn from(e: EdcError) -> Self {
        CliError::Input(e)
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Input(EdcError::Validation(msg.into()))
}

fn read(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Config after merging the file with flag overrides.
struct Resolved {
    cfg: RunConfig,
}

impl RunArgs {
    fn resolve(&self) -> CliResult<Resolved> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::parse(&read(p)?)?,
            None => RunConfig::default(),
        };
        macro_rules! over {
            ($($field:ident),*) => { $( if self.$field.is_some() { cfg.$field = self.$field; } )* };
        }
        over!(critical_time, mu, lambda, robots, max_speed, speed_time_scale, tsp_length, tau, lag, seed, replications, horizon);
        macro_rules! over_sweep {
            ($($field:ident),*) => { $( if self.$field.is_some() { cfg.sweep.$field = self.$field; } )* };
        }
        over_sweep!(tau_from, tau_to, tau_steps, lag_steps);
        Ok(Resolved { cfg })
    }
}

fn positive(name: &str, v: Option<f64>) -> CliResult<f64> {
    match v {
        Some(x) if x.is_finite() && x > 0.0 => Ok(x),
        Some(x) => Err(invalid(format!("{name} must be finite and > 0, got {x}"))),
        None => Err(invalid(format!("missing {name}"))),
    }
}

impl Resolved {
    fn critical_time(&self) -> CliResult<f64> {
        positive("critical_time", self.cfg.critical_time)
    }

    fn mu(&self) -> CliResult<f64> {
        positive("mu", self.cfg.mu)
    }

    fn scale(&self) -> CliResult<f64> {
        positive("speed_time_scale", self.cfg.speed_time_scale.or(Some(1.0)))
    }

    /// Maximum speed in distance per model time unit.
    fn model_speed(&self) -> CliResult<f64> {
        Ok(positive("max_speed", self.cfg.max_speed)? * self.scale()?)
    }

    fn robots(&self) -> CliResult<usize> {
        match self.cfg.robots.unwrap_or(1) {
            0 => Err(invalid("robots must be at least 1")),
            m => Ok(m),
        }
    }

    fn graph(&self) -> CliResult<PatrolGraph> {
        let spec = self.cfg.graph.as_ref().ok_or_else(|| invalid("missing [graph]"))?;
        Ok(spec.build()?)
    }

    fn tour(&self, g: &PatrolGraph) -> CliResult<Tour> {
        Ok(tsp_tour(g, self.cfg.tsp.mode(g.len()))?)
    }

    fn tsp_length(&self) -> CliResult<f64> {
        if let Some(l) = self.cfg.tsp_length {
            return positive("tsp_length", Some(l));
        }
        let g = self.graph()?;
        let len = self.tour(&g)?.length();
        positive("tour length", Some(len))
    }

    /// Explicit `tau`, else tour length over maximum speed.
    fn tau(&self) -> CliResult<f64> {
        if self.cfg.tau.is_some() {
            return positive("tau", self.cfg.tau);
        }
        Ok(self.tsp_length()? / self.model_speed()?)
    }

    fn sweep_range(&self) -> CliResult<(f64, f64, usize)> {
        let s = &self.cfg.sweep;
        let from = positive("tau_from", s.tau_from)?;
        let to = positive("tau_to", s.tau_to)?;
        let steps = s.tau_steps.ok_or_else(|| invalid("missing tau_steps"))?;
        if !(to > from) || steps < 2 {
            return Err(invalid("sweep needs tau_from < tau_to and tau_steps >= 2"));
        }
        Ok((from, to, steps))
    }
}

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("plain data serializes");
    s.push('\n');
    s
}

#[derive(Serialize)]
struct Analysis {
    tau: f64,
    n: u64,
    probability_single: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    probability_tour: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    two_robots: Option<TwoRobotAnalysis>,
}

#[derive(Serialize)]
struct TwoRobotAnalysis {
    lag: f64,
    probability: f64,
    best_lag: f64,
    best_probability: f64,
}

fn analyze(r: &Resolved) -> CliResult<String> {
    let t_crit = r.critical_time()?;
    let mu = r.mu()?;
    let tau = r.tau()?;
    let probability_tour = match &r.cfg.graph {
        Some(spec) if r.cfg.lambda.is_some() || !r.cfg.vertex.is_empty() => {
            let g = spec.build()?;
            let params = r.cfg.vertex_params(&g)?;
            Some(confirm_prob_tour(&params, &vec![tau; params.len()], t_crit)?)
        }
        _ => None,
    };
    let two_robots = if r.robots()? == 2 {
        let lag = r.cfg.lag.unwrap_or(tau / 2.0);
        let (best_lag, best_probability) = best_two_robot_lag(tau, mu, t_crit)?;
        Some(TwoRobotAnalysis {
            lag,
            probability: confirm_prob_two_robots(tau, mu, t_crit, lag)?,
            best_lag,
            best_probability,
        })
    } else {
        None
    };
    Ok(json(&Analysis {
        tau,
        n: n_of(t_crit, tau)?,
        probability_single: confirm_prob_single(tau, mu, t_crit)?,
        probability_tour,
        two_robots,
    }))
}

fn simulate(r: &Resolved) -> CliResult<String> {
    let t_crit = r.critical_time()?;
    let g = r.graph()?;
    let tour = r.tour(&g)?;
    let speed = r.model_speed()?;
    let period = tour_period(&tour, speed)?.period;
    let m = r.robots()?;
    let lags = match &r.cfg.lags {
        Some(l) => l.clone(),
        None => (0..m).map(|i| i as f64 * period / m as f64).collect(),
    };
    let replications = r.cfg.replications.unwrap_or(1);
    if replications == 0 {
        return Err(invalid("replications must be at least 1"));
    }
    let config = PatrolConfig {
        fleet: RobotFleet::new(tour, speed, lags)?,
        params: r.cfg.vertex_params(&g)?,
        critical_time: t_crit,
        horizon: positive("horizon", r.cfg.horizon)?,
    };
    let stats = estimate_confirm_prob(&config, replications, r.cfg.seed.unwrap_or(0))?;
    Ok(json(&stats))
}

/// Converts the chosen speed back to the caller's speed units.
fn in_speed_units(mut p: PolicyResult, scale: f64) -> PolicyResult {
    p.speed /= scale;
    p
}

fn optimize(r: &Resolved, two: bool) -> CliResult<String> {
    let t_crit = r.critical_time()?;
    let mu = r.mu()?;
    let length = r.tsp_length()?;
    let v = r.model_speed()?;
    let result = if two {
        optimize_two_robots(length, v, mu, t_crit)?
    } else {
        optimize_single_robot(length, v, mu, t_crit)?
    };
    Ok(json(&in_speed_units(result, r.scale()?)))
}

#[derive(Serialize)]
struct SpacingOut {
    period: f64,
    gaps: Vec<f64>,
    offsets: Vec<f64>,
}

fn spacing(r: &Resolved) -> CliResult<String> {
    let s = m_robot_spacing(r.tau()?, r.critical_time()?, r.cfg.robots.unwrap_or(2))?;
    Ok(json(&SpacingOut {
        period: s.period,
        offsets: s.offsets(),
        gaps: s.gaps,
    }))
}

/// Header of the `sweep-tau` CSV.
pub const SWEEP_TAU_HEADER: &str = "tau,p_single,p_two_equal,p_two_optlag";
/// Header of the `sweep-lag` CSV.
pub const SWEEP_LAG_HEADER: &str = "lag,p_two";

fn sweep_tau(r: &Resolved) -> CliResult<String> {
    let t_crit = r.critical_time()?;
    let mu = r.mu()?;
    let (from, to, steps) = r.sweep_range()?;
    let mut out = String::from(SWEEP_TAU_HEADER);
    out.push('\n');
    for i in 0..steps {
        let tau = from + (to - from) * i as f64 / (steps - 1) as f64;
        let single = confirm_prob_single(tau, mu, t_crit)?;
        let equal = confirm_prob_two_robots(tau, mu, t_crit, tau / 2.0)?;
        let (_, best) = best_two_robot_lag(tau, mu, t_crit)?;
        writeln!(out, "{tau},{single},{equal},{best}").expect("writing to a String");
    }
    Ok(out)
}

fn sweep_lag(r: &Resolved) -> CliResult<String> {
    let t_crit = r.critical_time()?;
    let mu = r.mu()?;
    let tau = r.tau()?;
    let steps = r.cfg.sweep.lag_steps.ok_or_else(|| invalid("missing lag_steps"))?;
    if steps == 0 {
        return Err(invalid("lag_steps must be at least 1"));
    }
    let mut out = String::from(SWEEP_LAG_HEADER);
    out.push('\n');
    for i in 1..=steps {
        let lag = tau * i as f64 / (steps + 1) as f64;
        let p = confirm_prob_two_robots(tau, mu, t_crit, lag)?;
        writeln!(out, "{lag},{p}").expect("writing to a String");
    }
    Ok(out)
}

fn offline_check(a: &FileArgs) -> CliResult<String> {
    let inst = InstanceFile::parse(&read(&a.input)?)?.build()?;
    match offline_feasible(&inst)? {
        Verdict::Infeasible => Err(CliError::Infeasible),
        Verdict::Feasible(s) => {
            let mut out = String::from("feasible\ntime,vertex,action,event\n");
            for v in &s.visits {
                let (action, event) = match v.action {
                    Action::Transit => ("transit", String::new()),
                    Action::Detect(id) => ("detect", id.to_string()),
                    Action::Confirm(id) => ("confirm", id.to_string()),
                };
                writeln!(out, "{},{},{action},{event}", v.time, inst.graph.id(v.vertex)).expect("writing to a String");
            }
            Ok(out)
        }
    }
}

fn reduce(a: &FileArgs) -> CliResult<String> {
    let t = TsptwFile::parse(&read(&a.input)?)?.build()?;
    let inst = reduce_tsptw(&t);
    toml::to_string(&InstanceFile::from_instance(&inst))
        .map_err(|e| CliError::Io(one_line(&e.to_string())))
}

fn dispatch(cmd: &Command) -> CliResult<(String, Option<&Path>)> {
    let run = |a: &RunArgs, f: fn(&Resolved) -> CliResult<String>| -> CliResult<String> { f(&a.resolve()?) };
    Ok(match cmd {
        Command::Analyze(a) => (run(a, analyze)?, a.out.as_deref()),
        Command::Simulate(a) => (run(a, simulate)?, a.out.as_deref()),
        Command::OptimizeSingle(a) => (run(a, |r| optimize(r, false))?, a.out.as_deref()),
        Command::OptimizeTwo(a) => (run(a, |r| optimize(r, true))?, a.out.as_deref()),
        Command::SpacingM(a) => (run(a, spacing)?, a.out.as_deref()),
        Command::SweepTau(a) => (run(a, sweep_tau)?, a.out.as_deref()),
        Command::SweepLag(a) => (run(a, sweep_lag)?, a.out.as_deref()),
        Command::OfflineCheck(a) => (offline_check(a)?, a.out.as_deref()),
        Command::ReduceTsptw(a) => (reduce(a)?, a.out.as_deref()),
    })
}

/// Runs the tool on `argv` (including the program name) and returns the
/// exit code.
pub fn run<I, S>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(stdout, "{e}");
                return 0;
            }
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("").trim_start_matches("error: ");
            let _ = writeln!(stderr, "{}", CliError::Usage(first.to_string()).line());
            return 1;
        }
    };
    let result = dispatch(&cli.command).and_then(|(text, out)| match out {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display()))),
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Io(e.to_string())),
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            // An infeasible verdict is an answer, so it also goes to stdout.
            if matches!(e, CliError::Infeasible) {
                let _ = writeln!(stdout, "infeasible");
            }
            let _ = writeln!(stderr, "{}", e.line());
            e.exit_code()
        }
    }
}

/// Entry point for the `edc` binary.
pub fn main_entry() -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
}
