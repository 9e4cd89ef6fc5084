//! Lorenz benchmark data: coarse and reference trajectories, noisy
//! observations and per-block residual scatter matrices.

use alloc::vec::Vec;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::sym::{cholesky_lower, LinalgError, SymMatrix};

/// Sub-steps per observation interval used for the reference solution.
pub const REFERENCE_SUBSTEPS: usize = 1000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OdeError {
    #[error("non-finite state at step {index}")]
    NonFiniteState { index: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),
    #[error("{what}: expected length {expected}, got {got}")]
    LengthMismatch { what: &'static str, expected: usize, got: usize },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

pub type State = [f64; 3];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LorenzParams {
    pub sigma: f64,
    pub rho: f64,
    pub beta: f64,
    pub x0: State,
}

impl Default for LorenzParams {
    /// The classic chaotic regime started from `(-10, -1, 40)`.
    fn default() -> Self {
        LorenzParams { sigma: 10.0, rho: 28.0, beta: 8.0 / 3.0, x0: [-10.0, -1.0, 40.0] }
    }
}

pub fn lorenz_rhs(params: &LorenzParams, x: &State) -> State {
    [
        params.sigma * (-x[0] + x[1]),
        x[0] * (params.rho - x[2]) - x[1],
        x[0] * x[1] - params.beta * x[2],
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Euler,
    Rk4,
}

#[inline]
fn axpy<const N: usize>(x: &[f64; N], a: f64, d: &[f64; N]) -> [f64; N] {
    core::array::from_fn(|i| x[i] + a * d[i])
}

pub fn step_euler<const N: usize>(rhs: impl Fn(&[f64; N]) -> [f64; N], x: &[f64; N], h: f64) -> [f64; N] {
    axpy(x, h, &rhs(x))
}

/// Classical four-stage Runge–Kutta step.
pub fn step_rk4<const N: usize>(rhs: impl Fn(&[f64; N]) -> [f64; N], x: &[f64; N], h: f64) -> [f64; N] {
    let k1 = rhs(x);
    let k2 = rhs(&axpy(x, 0.5 * h, &k1));
    let k3 = rhs(&axpy(x, 0.5 * h, &k2));
    let k4 = rhs(&axpy(x, h, &k3));
    core::array::from_fn(|i| x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<const N: usize = 3> {
    pub times: Vec<f64>,
    pub states: Vec<[f64; N]>,
}

impl<const N: usize> Trajectory<N> {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

/// States at `t_i = i·h`, `i = 0..n_steps`, taking `substeps` equal steps
/// per observation interval.
pub fn integrate_fn<const N: usize>(
    rhs: impl Fn(&[f64; N]) -> [f64; N],
    x0: [f64; N],
    method: Method,
    h: f64,
    n_steps: usize,
    substeps: usize,
) -> Result<Trajectory<N>, OdeError> {
    if n_steps == 0 {
        return Err(OdeError::InvalidArgument("n_steps must be at least 1"));
    }
    if substeps == 0 {
        return Err(OdeError::InvalidArgument("substeps must be at least 1"));
    }
    if !(h > 0.0 && h.is_finite()) {
        return Err(OdeError::InvalidArgument("h must be positive and finite"));
    }
    let dt = h / substeps as f64;
    let mut times = Vec::with_capacity(n_steps);
    let mut states = Vec::with_capacity(n_steps);
    let mut x = x0;
    for i in 0..n_steps {
        if i > 0 {
            for _ in 0..substeps {
                x = match method {
                    Method::Euler => step_euler(&rhs, &x, dt),
                    Method::Rk4 => step_rk4(&rhs, &x, dt),
                };
            }
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(OdeError::NonFiniteState { index: i });
        }
        times.push(i as f64 * h);
        states.push(x);
    }
    Ok(Trajectory { times, states })
}

pub fn integrate(
    params: &LorenzParams,
    method: Method,
    h: f64,
    n_steps: usize,
    substeps: usize,
) -> Result<Trajectory, OdeError> {
    integrate_fn(|x| lorenz_rhs(params, x), params.x0, method, h, n_steps, substeps)
}

/// RK4 with [`REFERENCE_SUBSTEPS`] sub-steps per interval, standing in for
/// the exact solution.
pub fn reference_solution(params: &LorenzParams, h: f64, n_steps: usize) -> Result<Trajectory, OdeError> {
    integrate(params, Method::Rk4, h, n_steps, REFERENCE_SUBSTEPS)
}

/// `approx - reference`, pointwise.
pub fn trajectory_errors(approx: &Trajectory, reference: &Trajectory) -> Result<Vec<State>, OdeError> {
    if approx.len() != reference.len() {
        return Err(OdeError::LengthMismatch { what: "trajectory", expected: reference.len(), got: approx.len() });
    }
    Ok(approx.states.iter().zip(&reference.states).map(|(a, r)| core::array::from_fn(|i| a[i] - r[i])).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSeries {
    pub times: Vec<f64>,
    pub y: Vec<State>,
    pub gamma: SymMatrix,
}

/// `y_i = x_i + L z_i` with `L Lᵀ = Γ` and `z_i` standard normal.
///
/// The stream is ChaCha20 seeded with [`SeedableRng::seed_from_u64`];
/// normals come from `rand_distr::StandardNormal`, three draws per time in
/// component order.
pub fn synth_observations(reference: &Trajectory, gamma: &SymMatrix, seed: u64) -> Result<ObservationSeries, OdeError> {
    if gamma.dim() != 3 {
        return Err(OdeError::LengthMismatch { what: "gamma dimension", expected: 3, got: gamma.dim() });
    }
    let l = cholesky_lower(gamma)?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let y = reference
        .states
        .iter()
        .map(|x| {
            let z: [f64; 3] = core::array::from_fn(|_| StandardNormal.sample(&mut rng));
            core::array::from_fn(|i| x[i] + (0..=i).map(|j| l[i * 3 + j] * z[j]).sum::<f64>())
        })
        .collect();
    Ok(ObservationSeries { times: reference.times.clone(), y, gamma: gamma.clone() })
}

/// Piecewise-constant block layout and per-block scatter matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockStats {
    /// Block sizes `k_i`.
    pub sizes: Vec<usize>,
    /// Cumulative ends `k̃_i = k_1 + … + k_i`; the last equals the series length.
    pub boundaries: Vec<usize>,
    /// `S_i = (1/k_i) Σ ξ ξᵀ` over the block's residuals.
    pub scatter: Vec<SymMatrix>,
    /// `(t_start, t_end)` of each block.
    pub spans: Vec<(f64, f64)>,
}

impl BlockStats {
    pub fn len(&self) -> usize {
        self.sizes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sizes.is_empty()
    }

    /// Block containing time index `t` (0-based).
    pub fn block_of(&self, t: usize) -> Option<usize> {
        let b = self.boundaries.partition_point(|&end| end <= t);
        (b < self.boundaries.len()).then_some(b)
    }

    /// Half-open index range `[start, end)` of block `b`.
    pub fn range(&self, b: usize) -> core::ops::Range<usize> {
        let start = if b == 0 { 0 } else { self.boundaries[b - 1] };
        start..self.boundaries[b]
    }
}

/// Splits `len` observations into blocks of `block` (the last block takes
/// any remainder).
pub fn uniform_blocks(len: usize, block: usize) -> Result<Vec<usize>, OdeError> {
    if block == 0 || len == 0 {
        return Err(OdeError::InvalidArgument("block size and series length must be positive"));
    }
    let mut sizes: Vec<usize> = core::iter::repeat_n(block, len / block).collect();
    if !len.is_multiple_of(block) {
        sizes.push(len % block);
    }
    Ok(sizes)
}

/// Residuals `ξ_i = y_i - x̃_i`.
pub fn residuals(obs: &ObservationSeries, approx: &Trajectory) -> Result<Vec<State>, OdeError> {
    if obs.y.len() != approx.len() {
        return Err(OdeError::LengthMismatch { what: "approximation", expected: obs.y.len(), got: approx.len() });
    }
    Ok(obs.y.iter().zip(&approx.states).map(|(y, x)| core::array::from_fn(|i| y[i] - x[i])).collect())
}

pub fn block_scatter(obs: &ObservationSeries, approx: &Trajectory, k: &[usize]) -> Result<BlockStats, OdeError> {
    let xi = residuals(obs, approx)?;
    let total: usize = k.iter().sum();
    if total != xi.len() {
        return Err(OdeError::LengthMismatch { what: "block sizes sum", expected: xi.len(), got: total });
    }
    if k.contains(&0) {
        return Err(OdeError::InvalidArgument("block sizes must be positive"));
    }
    let mut boundaries = Vec::with_capacity(k.len());
    let mut scatter = Vec::with_capacity(k.len());
    let mut spans = Vec::with_capacity(k.len());
    let mut start = 0;
    for &ki in k {
        let end = start + ki;
        let mut s = SymMatrix::zeros(3);
        for r in &xi[start..end] {
            s.add_scaled(1.0, &SymMatrix::outer(r));
        }
        scatter.push(s.scale(1.0 / ki as f64));
        spans.push((obs.times[start], obs.times[end - 1]));
        boundaries.push(end);
        start = end;
    }
    Ok(BlockStats { sizes: k.to_vec(), boundaries, scatter, spans })
}
