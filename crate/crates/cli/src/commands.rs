//! Argument parsing and subcommand dispatch.

use std::fmt;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use ncbf_core::acc::{assemble_qp, feasibility_at, simulate, AccParams, AccState, Barrier, TrajectoryRecord};
use ncbf_core::cbf_clf::{ncbf_value, near_degenerate};
use ncbf_core::qp::solve;
use ncbf_core::{SolveStatus, SolverConfig};
use rayon::prelude::*;

use crate::config::{BarrierChoice, ConfigError, ScenarioConfig};
use crate::formats::{self, FeasibilityRow, FormatError, QpJson};
use crate::report::{gnuplot_script, ComparisonReport, RunSummary};

pub const EXIT_OK: u8 = 0;
pub const EXIT_IO: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_SOLVER: u8 = 3;
pub const EXIT_FEASIBILITY: u8 = 4;
pub const EXIT_QP: u8 = 5;

#[derive(Debug, Parser)]
#[command(name = "ncbf", version, about = "Adaptive cruise control with normalized control barrier functions")]
pub struct Cli {
    /// Print the default scenario configuration as JSON and exit.
    #[arg(long, global = true)]
    pub print_default_config: bool,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate every (barrier, v0) pair and write trajectory CSVs.
    Run(RunArgs),
    /// Same as `run`; sweeps the configured `v0_list`.
    Sweep(RunArgs),
    /// Run the NCBF against a baseline barrier and write a comparison report.
    Compare(CompareArgs),
    /// Evaluate the feasibility condition along simulated or recorded trajectories.
    CheckFeasibility(CheckArgs),
    /// Solve a QP given as JSON.
    SolveQp { path: PathBuf },
    /// Print the ACC step QP at one state as JSON.
    DumpQp(DumpArgs),
    /// Print the default scenario configuration as JSON.
    PrintDefaultConfig,
}

#[derive(Debug, Clone, Args)]
pub struct ScenarioArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Comma-separated initial speeds, overriding `v0_list`.
    #[arg(long, value_delimiter = ',')]
    pub v0: Option<Vec<f64>>,
    #[arg(long, allow_negative_numbers = true)]
    pub dt: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub horizon: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[arg(long, value_enum)]
    pub barrier: Option<BarrierChoice>,
    /// Also write a gnuplot script next to the CSVs.
    #[arg(long)]
    pub gnuplot: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SingleBarrier {
    Ncbf,
    Hocbf,
}

impl From<SingleBarrier> for Barrier {
    fn from(b: SingleBarrier) -> Self {
        match b {
            SingleBarrier::Ncbf => Barrier::Ncbf,
            SingleBarrier::Hocbf => Barrier::Hocbf,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[arg(long, value_enum, default_value = "hocbf")]
    pub baseline: SingleBarrier,
}

#[derive(Debug, Clone, Args)]
pub struct CheckArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    /// Recorded trajectory CSV to check instead of simulating.
    #[arg(long)]
    pub traj: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct DumpArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, allow_negative_numbers = true)]
    pub v: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub z: f64,
    #[arg(long, value_enum, default_value = "ncbf")]
    pub barrier: SingleBarrier,
}

/// A failure carrying its process exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn new(code: u8, message: impl Into<String>) -> Self {
        CliError { code, message: message.into() }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::new(EXIT_CONFIG, e.to_string())
    }
}

impl From<FormatError> for CliError {
    fn from(e: FormatError) -> Self {
        let code = match e {
            FormatError::Io(_) => EXIT_IO,
            _ => EXIT_CONFIG,
        };
        CliError::new(code, e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::new(EXIT_IO, e.to_string())
    }
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.code
        }
    }
}

pub fn execute(cli: Cli) -> Result<u8, CliError> {
    if cli.print_default_config {
        println!("{}", ScenarioConfig::default().to_json());
        return Ok(EXIT_OK);
    }
    let Some(command) = cli.command else {
        return Err(CliError::new(EXIT_CONFIG, "no subcommand given; see --help"));
    };
    match command {
        Command::Run(a) | Command::Sweep(a) => cmd_run(&a),
        Command::Compare(a) => cmd_compare(&a),
        Command::CheckFeasibility(a) => cmd_check(&a),
        Command::SolveQp { path } => cmd_solve_qp(&path),
        Command::DumpQp(a) => cmd_dump_qp(&a),
        Command::PrintDefaultConfig => {
            println!("{}", ScenarioConfig::default().to_json());
            Ok(EXIT_OK)
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<ScenarioConfig, CliError> {
    Ok(match path {
        Some(p) => ScenarioConfig::load(p)?,
        None => ScenarioConfig::default(),
    })
}

/// Config file with command-line overrides applied, validated.
pub fn resolve_config(args: &ScenarioArgs, barrier: Option<BarrierChoice>) -> Result<ScenarioConfig, CliError> {
    let mut cfg = load_config(args.config.as_deref())?;
    if let Some(v0) = &args.v0 {
        cfg.v0_list.clone_from(v0);
    }
    if let Some(dt) = args.dt {
        cfg.dt = dt;
    }
    if let Some(h) = args.horizon {
        cfg.horizon = h;
    }
    if let Some(out) = &args.out {
        cfg.output_dir.clone_from(out);
    }
    if let Some(b) = barrier {
        cfg.barrier = b;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub struct Run {
    pub barrier: Barrier,
    pub v0: f64,
    pub records: Vec<TrajectoryRecord>,
}

/// Simulates every `(barrier, v0)` pair in parallel; results keep the input order.
pub fn simulate_all(cfg: &ScenarioConfig, barriers: &[Barrier]) -> Vec<Run> {
    let prm = cfg.acc_params();
    let solver = cfg.solver_config();
    let pairs: Vec<(Barrier, f64)> = barriers.iter().flat_map(|b| cfg.v0_list.iter().map(move |v| (*b, *v))).collect();
    pairs
        .into_par_iter()
        .map(|(barrier, v0)| Run { barrier, v0, records: simulate(AccState::new(v0, cfg.z0), &prm, barrier, &solver) })
        .collect()
}

pub fn trajectory_file_name(barrier: Barrier, v0: f64) -> String {
    format!("traj_{}_v0_{v0}.csv", barrier.as_str())
}

pub fn feasibility_file_name(v0: f64) -> String {
    format!("feasibility_v0_{v0}.csv")
}

fn warn_degenerate(run: &Run, prm: &AccParams) {
    if run.barrier != Barrier::Ncbf {
        return;
    }
    if let Some(r) = run.records.iter().find(|r| near_degenerate(r.theta, &r.state.to_vector(), &prm.ncbf)) {
        eprintln!(
            "warning: {} v0={}: barrier near its degenerate region at t={} (theta={:.6})",
            run.barrier, run.v0, r.t, r.theta
        );
    }
}

fn report_failures(runs: &[Run]) -> usize {
    let mut total = 0;
    for run in runs {
        let flagged: Vec<f64> = run.records.iter().filter(|r| r.flagged()).map(|r| r.t).collect();
        if let Some(first) = flagged.first() {
            eprintln!("{} v0={}: {} QP steps not solved, first at t={first}", run.barrier, run.v0, flagged.len());
        }
        total += flagged.len();
    }
    total
}

fn cmd_run(args: &RunArgs) -> Result<u8, CliError> {
    let cfg = resolve_config(&args.scenario, args.barrier)?;
    let prm = cfg.acc_params();
    std::fs::create_dir_all(&cfg.output_dir)?;
    let runs = simulate_all(&cfg, &cfg.barrier.barriers());
    let mut plotted = Vec::new();
    println!(
        "{:>6} {:>6} {:>12} {:>10} {:>10} {:>8} {:>5} {:>5}",
        "barrier", "v0", "final_gap", "min_gap", "max|u|", "settle", "viol", "fail"
    );
    for run in &runs {
        let name = trajectory_file_name(run.barrier, run.v0);
        formats::write_trajectory_file(&cfg.output_dir.join(&name), &run.records)?;
        warn_degenerate(run, &prm);
        let s = RunSummary::from_records(run.barrier, run.v0, &run.records, &prm);
        println!(
            "{:>6} {:>6} {:>12.4} {:>10.4} {:>10.1} {:>8} {:>5} {:>5}",
            s.barrier,
            s.v0,
            s.steady_state_gap,
            s.min_gap,
            s.max_abs_u,
            s.settle_time.map_or_else(|| "-".into(), |t| format!("{t:.1}")),
            s.safety_violations,
            s.solver_failures
        );
        plotted.push((format!("{} v0={}", run.barrier, run.v0), name));
    }
    if args.gnuplot {
        std::fs::write(cfg.output_dir.join("trajectories.gp"), gnuplot_script(&plotted))?;
    }
    if report_failures(&runs) > 0 {
        return Err(CliError::new(EXIT_SOLVER, "one or more runs contain unsolved QP steps"));
    }
    Ok(EXIT_OK)
}

fn cmd_compare(args: &CompareArgs) -> Result<u8, CliError> {
    let cfg = resolve_config(&args.scenario, None)?;
    let prm = cfg.acc_params();
    let baseline: Barrier = args.baseline.into();
    std::fs::create_dir_all(&cfg.output_dir)?;
    let runs = simulate_all(&cfg, &[Barrier::Ncbf, baseline]);
    let n = cfg.v0_list.len();
    let summarize = |r: &Run| RunSummary::from_records(r.barrier, r.v0, &r.records, &prm);
    let pairs = runs[..n].iter().zip(&runs[n..]).map(|(p, b)| (summarize(p), summarize(b))).collect();
    let report = ComparisonReport::new(Barrier::Ncbf, baseline, pairs);
    let json = serde_json::to_string_pretty(&report).map_err(|e| CliError::new(EXIT_IO, e.to_string()))?;
    std::fs::write(cfg.output_dir.join("comparison.json"), json + "\n")?;
    let table = report.to_table();
    std::fs::write(cfg.output_dir.join("comparison.txt"), &table)?;
    print!("{table}");
    if report_failures(&runs) > 0 {
        return Err(CliError::new(EXIT_SOLVER, "one or more runs contain unsolved QP steps"));
    }
    Ok(EXIT_OK)
}

/// Feasibility row at one sampled state; rows outside the safe interior carry no report.
pub fn feasibility_row(t: f64, s: AccState, prm: &AccParams) -> FeasibilityRow {
    let theta = s.z - prm.a0;
    let big_theta = ncbf_value(theta, &s.to_vector(), &prm.ncbf);
    let report = if theta > 0.0 && big_theta > 0.0 { feasibility_at(s, prm).ok() } else { None };
    FeasibilityRow { t, big_theta, theta, report }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilitySummary {
    pub samples: usize,
    pub satisfied: usize,
    pub max_y: Option<f64>,
    pub min_margin: Option<f64>,
    pub violations: Vec<f64>,
}

impl FeasibilitySummary {
    pub fn from_rows(rows: &[FeasibilityRow]) -> Self {
        let reports = rows.iter().filter_map(|r| r.report.as_ref());
        FeasibilitySummary {
            samples: rows.len(),
            satisfied: rows.iter().filter(|r| r.satisfied()).count(),
            max_y: reports.clone().map(|r| r.y_value).reduce(f64::max),
            min_margin: reports.map(|r| r.margin).reduce(f64::min),
            violations: rows.iter().filter(|r| !r.satisfied()).map(|r| r.t).collect(),
        }
    }

    pub fn fraction(&self) -> f64 {
        if self.samples == 0 {
            1.0
        } else {
            self.satisfied as f64 / self.samples as f64
        }
    }
}

impl fmt::Display for FeasibilitySummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let opt = |x: Option<f64>| x.map_or_else(|| "n/a".to_string(), |v| format!("{v:.6e}"));
        write!(
            f,
            "satisfied {}/{} ({:.4}), max Y {}, min margin {}",
            self.satisfied,
            self.samples,
            self.fraction(),
            opt(self.max_y),
            opt(self.min_margin)
        )?;
        if !self.violations.is_empty() {
            let shown: Vec<String> =
                self.violations.iter().take(20).map(|t| format!("{}", (t * 1e9).round() / 1e9)).collect();
            let more = if self.violations.len() > 20 { ", ..." } else { "" };
            write!(f, "\n  violated at t = {}{more}", shown.join(", "))?;
        }
        Ok(())
    }
}

fn cmd_check(args: &CheckArgs) -> Result<u8, CliError> {
    let cfg = resolve_config(&args.scenario, None)?;
    let prm = cfg.acc_params();
    std::fs::create_dir_all(&cfg.output_dir)?;
    let mut sets: Vec<(String, Vec<FeasibilityRow>)> = Vec::new();
    if let Some(path) = &args.traj {
        let rows = formats::read_trajectory_file(path)?;
        let stem = path.file_stem().map_or_else(|| "traj".into(), |s| s.to_string_lossy().into_owned());
        let out = rows.iter().map(|r| feasibility_row(r.t, r.state, &prm)).collect();
        sets.push((format!("feasibility_{stem}.csv"), out));
    } else {
        for run in simulate_all(&cfg, &[Barrier::Ncbf]) {
            let out = run.records.iter().map(|r| feasibility_row(r.t, r.state, &prm)).collect();
            sets.push((feasibility_file_name(run.v0), out));
        }
    }
    let mut violated = false;
    for (name, rows) in &sets {
        formats::write_feasibility(std::fs::File::create(cfg.output_dir.join(name))?, rows)?;
        let summary = FeasibilitySummary::from_rows(rows);
        println!("{name}: {summary}");
        violated |= !summary.violations.is_empty();
    }
    if violated {
        return Err(CliError::new(EXIT_FEASIBILITY, "feasibility condition violated at one or more samples"));
    }
    Ok(EXIT_OK)
}

fn cmd_solve_qp(path: &Path) -> Result<u8, CliError> {
    let text = std::fs::read_to_string(path)?;
    let q: QpJson =
        serde_json::from_str(&text).map_err(|e| CliError::new(EXIT_CONFIG, format!("{}: {e}", path.display())))?;
    let problem = q.to_problem()?;
    let sol = solve(&problem, &SolverConfig::default());
    let join = |xs: &[f64]| xs.iter().map(|x| formats::fmt_f64(*x)).collect::<Vec<_>>().join(", ");
    let mut out = std::io::stdout().lock();
    writeln!(out, "status: {}", sol.status.as_str())?;
    writeln!(out, "iterations: {}", sol.iterations)?;
    writeln!(out, "v_star: [{}]", join(sol.v_star.as_slice()))?;
    writeln!(out, "multipliers: [{}]", join(sol.l_star.as_slice()))?;
    writeln!(out, "objective: {}", formats::fmt_f64(problem.objective(&sol.v_star)))?;
    writeln!(out, "final_mu: {}", formats::fmt_f64(sol.final_mu))?;
    writeln!(out, "kkt_residual: {}", formats::fmt_f64(sol.kkt_residual_norm))?;
    if sol.status != SolveStatus::Optimal {
        return Err(CliError::new(EXIT_QP, format!("QP solver returned {}", sol.status.as_str())));
    }
    Ok(EXIT_OK)
}

fn cmd_dump_qp(args: &DumpArgs) -> Result<u8, CliError> {
    let cfg = load_config(args.config.as_deref())?;
    cfg.validate()?;
    let problem = assemble_qp(AccState::new(args.v, args.z), &cfg.acc_params(), args.barrier.into())
        .map_err(|e| CliError::new(EXIT_CONFIG, e.to_string()))?;
    let json = serde_json::to_string_pretty(&QpJson::from_problem(&problem))
        .map_err(|e| CliError::new(EXIT_IO, e.to_string()))?;
    println!("{json}");
    Ok(EXIT_OK)
}
