//! End-to-end Lorenz experiment: simulate, observe, estimate, quantify.

use alloc::vec::Vec;

use thiserror::Error;

use crate::ode::{
    block_scatter, integrate, reference_solution, residuals, synth_observations, trajectory_errors, uniform_blocks,
    BlockStats, LorenzParams, Method, ObservationSeries, OdeError, State, Trajectory, REFERENCE_SUBSTEPS,
};
use crate::quantify::{build_chain_problem, coverage, sigma_tilde, CoverageReport, QuantifyError};
use crate::solver::{solve, ProblemInstance, SolveError, SolveOptions, SolveReport};
use crate::sym::SymMatrix;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DemoError {
    #[error(transparent)]
    Ode(#[from] OdeError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Quantify(#[from] QuantifyError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DemoConfig {
    pub params: LorenzParams,
    pub h: f64,
    pub n_obs: usize,
    pub block: usize,
    /// Coarse integrator and its sub-steps per observation interval.
    pub method: Method,
    pub substeps: usize,
    pub ref_substeps: usize,
    pub seed: u64,
    /// Observation noise covariance.
    pub gamma: SymMatrix,
    pub levels: Vec<f64>,
    pub solve: SolveOptions,
}

impl Default for DemoConfig {
    fn default() -> Self {
        DemoConfig {
            params: LorenzParams::default(),
            h: 0.05,
            n_obs: 300,
            block: 3,
            method: Method::Rk4,
            substeps: 2,
            ref_substeps: REFERENCE_SUBSTEPS,
            seed: 42,
            gamma: SymMatrix::from_diag(&[0.05 * 0.05, 0.01 * 0.01, 0.05 * 0.05]),
            levels: crate::quantify::STANDARD_LEVELS.to_vec(),
            solve: SolveOptions::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct DemoRun {
    pub approx: Trajectory,
    pub reference: Trajectory,
    pub observations: ObservationSeries,
    pub residuals: Vec<State>,
    /// `approx - reference`.
    pub errors: Vec<State>,
    pub stats: BlockStats,
    pub instance: ProblemInstance,
    pub report: SolveReport,
    pub sigma: Vec<SymMatrix>,
    pub coverage: CoverageReport,
}

/// Runs the pipeline with a custom solve driver (e.g. an instrumented one).
pub fn run_demo_with(
    cfg: &DemoConfig,
    solve_fn: impl FnOnce(&ProblemInstance, &SolveOptions) -> Result<SolveReport, SolveError>,
) -> Result<DemoRun, DemoError> {
    let approx = integrate(&cfg.params, cfg.method, cfg.h, cfg.n_obs, cfg.substeps)?;
    let reference = reference_for(cfg)?;
    let observations = synth_observations(&reference, &cfg.gamma, cfg.seed)?;
    let xi = residuals(&observations, &approx)?;
    let errors = trajectory_errors(&approx, &reference)?;
    let sizes = uniform_blocks(cfg.n_obs, cfg.block)?;
    let stats = block_scatter(&observations, &approx, &sizes)?;
    let instance = build_chain_problem(&stats, &cfg.gamma)?;
    let report = solve_fn(&instance, &cfg.solve)?;
    let sigma = sigma_tilde(&report, &cfg.gamma);
    let coverage = coverage(&sigma, &stats.boundaries, &errors, &crate::quantify::STANDARD_PAIRS, &cfg.levels)?;
    Ok(DemoRun { approx, reference, observations, residuals: xi, errors, stats, instance, report, sigma, coverage })
}

pub fn run_demo(cfg: &DemoConfig) -> Result<DemoRun, DemoError> {
    run_demo_with(cfg, solve)
}

/// Reference trajectory with the configured sub-step count, for callers
/// that only need ground truth.
pub fn reference_for(cfg: &DemoConfig) -> Result<Trajectory, OdeError> {
    if cfg.ref_substeps == REFERENCE_SUBSTEPS {
        reference_solution(&cfg.params, cfg.h, cfg.n_obs)
    } else {
        integrate(&cfg.params, Method::Rk4, cfg.h, cfg.n_obs, cfg.ref_substeps)
    }
}
