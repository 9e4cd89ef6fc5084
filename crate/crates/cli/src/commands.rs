//! Subcommands. Each one reads and validates every input, builds all outputs
//! in memory, and only then writes them.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use discerr_core::demo::{run_demo, DemoConfig};
use discerr_core::ode::Method;
use discerr_core::quantify::{block_ellipse, coverage, AxisPair, QuantifyError, STANDARD_PAIRS};
use discerr_core::solver::{dual_objective, solve, SolveOptions};
use discerr_core::SymMatrix;

use crate::formats::{read_json, to_json, ProblemFileV1, SolutionFileV1};
use crate::tables::{
    block_boundaries, block_rows, coverage_rows, ellipse_row, parse_levels, parse_pairs, read_csv, series_rows,
    series_values, to_csv, to_csv_with_header, BlockRow, EllipseRow, SeriesRow,
};
use crate::{write_atomic, CliError, Outcome};

const ELLIPSE_HEADER: &[&str] =
    &["block_index", "t_start", "t_end", "pair", "level", "semi_major", "semi_minor", "angle_deg"];

#[derive(Debug, Parser)]
#[command(name = "discerr", version, about = "Loewner-ordered estimation of ODE discretization error")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve a problem file and write the solution file.
    Solve(SolveArgs),
    /// Run the Lorenz experiment end to end.
    DemoLorenz(DemoArgs),
    /// Confidence ellipses of each block's error covariance.
    Ellipses(EllipseArgs),
    /// Fraction of actual errors inside their block's ellipse.
    Coverage(CoverageArgs),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EpsInit {
    Auto,
    Value(f64),
}

fn parse_eps(s: &str) -> Result<EpsInit, String> {
    if s == "auto" {
        return Ok(EpsInit::Auto);
    }
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(EpsInit::Value(v)),
        _ => Err(format!("expected `auto` or a positive number, got `{s}`")),
    }
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    /// Relative dual increase per sweep below which the solver may stop.
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    /// Allowed order violation, relative to the problem scale.
    #[arg(long, default_value_t = 1e-8)]
    pub feas_tol: f64,
    #[arg(long, default_value_t = 10_000)]
    pub max_sweeps: usize,
    /// Initial dual slack, or `auto`.
    #[arg(long, default_value = "auto", value_parser = parse_eps)]
    pub eps_init: EpsInit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Euler,
    Rk4,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Method {
        match m {
            MethodArg::Euler => Method::Euler,
            MethodArg::Rk4 => Method::Rk4,
        }
    }
}

#[derive(Debug, Args)]
pub struct DemoArgs {
    #[arg(long, default_value_t = 0.05)]
    pub h: f64,
    #[arg(long, default_value_t = 300)]
    pub n_obs: usize,
    /// Observations per block.
    #[arg(long, default_value_t = 3)]
    pub block: usize,
    /// Coarse integrator.
    #[arg(long, value_enum, default_value_t = MethodArg::Rk4)]
    pub method: MethodArg,
    /// Coarse sub-steps per observation interval.
    #[arg(long, default_value_t = 2)]
    pub substeps: usize,
    /// RK4 sub-steps per interval for the reference trajectory.
    #[arg(long, default_value_t = 1000)]
    pub ref_substeps: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value = "0.68,0.95")]
    pub levels: String,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct EllipseArgs {
    #[arg(long)]
    pub solution: PathBuf,
    /// Semicolon-separated axis pairs, counted from 1.
    #[arg(long, default_value = "1,2;2,3;3,1")]
    pub pairs: String,
    #[arg(long, default_value = "0.68,0.95")]
    pub levels: String,
    /// blocks.csv from the demo; fills the t_start and t_end columns.
    #[arg(long)]
    pub blocks: Option<PathBuf>,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct CoverageArgs {
    #[arg(long)]
    pub solution: PathBuf,
    /// errors.csv: actual error per time point.
    #[arg(long)]
    pub errors: PathBuf,
    /// blocks.csv: block sizes in time order.
    #[arg(long)]
    pub blocks: PathBuf,
    #[arg(long, default_value = "1,2;2,3;3,1")]
    pub pairs: String,
    #[arg(long, default_value = "0.68,0.95")]
    pub levels: String,
    #[arg(long)]
    pub output: PathBuf,
}

pub fn run(cli: Cli) -> Result<Outcome, CliError> {
    match cli.command {
        Command::Solve(a) => cmd_solve(&a),
        Command::DemoLorenz(a) => cmd_demo_lorenz(&a),
        Command::Ellipses(a) => cmd_ellipses(&a),
        Command::Coverage(a) => cmd_coverage(&a),
    }
}

fn solve_error(e: impl std::fmt::Display) -> CliError {
    CliError::Input(format!("solver: {e}"))
}

fn outcome(converged: bool, sweeps: usize) -> Outcome {
    if converged {
        Outcome::Success
    } else {
        eprintln!("warning: not converged after {sweeps} sweeps; results written anyway");
        Outcome::NotConverged
    }
}

pub fn cmd_solve(a: &SolveArgs) -> Result<Outcome, CliError> {
    let problem: ProblemFileV1 = read_json(&a.input)?;
    let inst = problem.to_instance().map_err(|e| prefix(&a.input, e))?;
    let opts = SolveOptions {
        tol_rel: a.tol,
        tol_feas: a.feas_tol,
        max_sweeps: a.max_sweeps,
        eps_init: match a.eps_init {
            EpsInit::Auto => None,
            EpsInit::Value(v) => Some(v),
        },
        ..SolveOptions::default()
    };
    let rep = solve(&inst, &opts).map_err(solve_error)?;
    write_atomic(&a.output, to_json(&SolutionFileV1::from_report(&rep)).as_bytes())?;
    Ok(outcome(rep.converged, rep.sweeps))
}

fn prefix(path: &Path, e: CliError) -> CliError {
    match e {
        CliError::Input(m) => CliError::Input(format!("{}: {m}", path.display())),
        other => other,
    }
}

/// Re-evaluates the dual objective stored in a solution file.
pub fn recheck_dual_objective(problem: &ProblemFileV1, solution: &SolutionFileV1) -> Result<f64, CliError> {
    let inst = problem.to_instance()?;
    let y = solution.dual_state(inst.p())?;
    dual_objective(&inst, &y).map_err(solve_error)
}

/// A block and pair left out of the ellipse table, both 0-based.
pub type Skipped = (usize, AxisPair);

/// One row per block, pair and level; blocks whose marginal is singular are
/// left out and returned separately.
pub fn ellipse_table(
    sigma: &[SymMatrix],
    spans: Option<&[(f64, f64)]>,
    pairs: &[AxisPair],
    levels: &[f64],
) -> Result<(Vec<EllipseRow>, Vec<Skipped>), CliError> {
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for (b, s) in sigma.iter().enumerate() {
        let span = spans.map(|sp| sp[b]);
        for &pair in pairs {
            for &level in levels {
                match block_ellipse(s, b, pair, level) {
                    Ok(e) => rows.push(ellipse_row(&e, span)),
                    Err(QuantifyError::SingularMarginal { .. }) => {
                        skipped.push((b, pair));
                        break;
                    }
                    Err(QuantifyError::InvalidPair(..)) => {
                        return Err(CliError::Input(format!(
                            "--pairs: pair {pair} needs axes within 1..={}",
                            s.dim()
                        )))
                    }
                    Err(e) => return Err(CliError::Input(format!("Sigma[{b}]: {e}"))),
                }
            }
        }
    }
    Ok((rows, skipped))
}

fn report_skipped(skipped: &[Skipped]) {
    if !skipped.is_empty() {
        let list: Vec<String> = skipped.iter().map(|(b, p)| format!("{} ({p})", b + 1)).collect();
        eprintln!("note: singular marginals, no ellipse for block(s) {}", list.join(", "));
    }
}

pub fn cmd_demo_lorenz(a: &DemoArgs) -> Result<Outcome, CliError> {
    let cfg = DemoConfig {
        h: a.h,
        n_obs: a.n_obs,
        block: a.block,
        method: a.method.into(),
        substeps: a.substeps,
        ref_substeps: a.ref_substeps,
        seed: a.seed,
        levels: parse_levels(&a.levels)?,
        ..DemoConfig::default()
    };
    let run = run_demo(&cfg).map_err(|e| CliError::Input(format!("demo: {e}")))?;

    let times = &run.approx.times;
    let (ellipses, skipped) = ellipse_table(&run.sigma, Some(&run.stats.spans), &STANDARD_PAIRS, &cfg.levels)?;
    let outputs: Vec<(&str, Vec<u8>)> = vec![
        ("observations.csv", to_csv(&series_rows(&run.observations.times, &run.observations.y))?),
        ("residuals.csv", to_csv(&series_rows(times, &run.residuals))?),
        ("errors.csv", to_csv(&series_rows(times, &run.errors))?),
        ("blocks.csv", to_csv(&block_rows(&run.stats))?),
        ("problem.json", to_json(&ProblemFileV1::from_instance(&run.instance)).into_bytes()),
        ("solution.json", to_json(&SolutionFileV1::from_report(&run.report)).into_bytes()),
        ("ellipses.csv", to_csv_with_header(&ellipses, ELLIPSE_HEADER)?),
        ("coverage.csv", to_csv(&coverage_rows(&run.coverage))?),
    ];
    std::fs::create_dir_all(&a.out_dir).map_err(|e| CliError::io(&a.out_dir, e))?;
    for (name, bytes) in &outputs {
        write_atomic(&a.out_dir.join(name), bytes)?;
    }
    report_skipped(&skipped);
    Ok(outcome(run.report.converged, run.report.sweeps))
}

fn read_spans(path: &Path, n_blocks: usize) -> Result<Vec<(f64, f64)>, CliError> {
    let rows: Vec<BlockRow> = read_csv(path)?;
    block_boundaries(path, &rows)?;
    if rows.len() != n_blocks {
        return Err(CliError::Input(format!(
            "{}: {} blocks, but the solution has {n_blocks}",
            path.display(),
            rows.len()
        )));
    }
    Ok(rows.iter().map(|r| (r.t_start, r.t_end)).collect())
}

pub fn cmd_ellipses(a: &EllipseArgs) -> Result<Outcome, CliError> {
    let pairs = parse_pairs(&a.pairs)?;
    let levels = parse_levels(&a.levels)?;
    let solution: SolutionFileV1 = read_json(&a.solution)?;
    let sigma = solution.sigma_matrices().map_err(|e| prefix(&a.solution, e))?;
    let spans = a.blocks.as_deref().map(|p| read_spans(p, sigma.len())).transpose()?;
    let (rows, skipped) = ellipse_table(&sigma, spans.as_deref(), &pairs, &levels)?;
    write_atomic(&a.output, &to_csv_with_header(&rows, ELLIPSE_HEADER)?)?;
    report_skipped(&skipped);
    Ok(Outcome::Success)
}

pub fn cmd_coverage(a: &CoverageArgs) -> Result<Outcome, CliError> {
    let pairs = parse_pairs(&a.pairs)?;
    let levels = parse_levels(&a.levels)?;
    let solution: SolutionFileV1 = read_json(&a.solution)?;
    let sigma = solution.sigma_matrices().map_err(|e| prefix(&a.solution, e))?;
    let error_rows: Vec<SeriesRow> = read_csv(&a.errors)?;
    let errors = series_values(&a.errors, &error_rows)?;
    let block_rows: Vec<BlockRow> = read_csv(&a.blocks)?;
    let boundaries = block_boundaries(&a.blocks, &block_rows)?;
    if let Some(s) = sigma.first() {
        if s.dim() != 3 {
            return Err(CliError::Input(format!(
                "{}: coverage needs 3x3 Sigma blocks, got {}x{}",
                a.solution.display(),
                s.dim(),
                s.dim()
            )));
        }
    }
    let report = coverage(&sigma, &boundaries, &errors, &pairs, &levels).map_err(|e| match e {
        QuantifyError::InvalidPair(..) => CliError::Input("--pairs: axes must lie within 1..=3".into()),
        e => CliError::Input(format!("inputs disagree: {e}")),
    })?;
    write_atomic(&a.output, &to_csv(&coverage_rows(&report))?)?;
    Ok(Outcome::Success)
}
