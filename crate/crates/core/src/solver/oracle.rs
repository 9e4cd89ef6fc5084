//! Reference solvers that share no code path with the dual ascent.
//!
//! * [`pava_scalar`] solves the `p = 1` chain exactly. The per-vertex loss
//!   `log q + s/q` is a Bregman divergence in the mean parameter `q`, so the
//!   isotonic minimizer is the weighted pool-adjacent-violators fit of `s`,
//!   and the lower bound `γ` is enforced by clipping.
//! * [`projected_gradient`] minimizes the objective in precision space
//!   `P_i = Q_i⁻¹`, where it is convex and the order constraints become
//!   `P_i ⪰ P_j`. Each step is projected onto the constraint set with
//!   Dykstra's alternating projections. Slow; meant for tiny instances.

use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use super::{ProblemInstance, SolveError};
use crate::sym::{eig_sym, inverse_pd, logdet_pd, psd_project, SymMatrix};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("s and k must have equal, nonzero length")]
    Length,
    #[error("invalid input at position {0}")]
    InvalidInput(usize),
    #[error("gamma must be positive and finite")]
    InvalidGamma,
}

/// Exact minimizer of `Σ k_i (log q_i + s_i / q_i)` subject to
/// `γ ≤ q_1 ≤ … ≤ q_n`.
pub fn pava_scalar(s: &[f64], k: &[f64], gamma: f64) -> Result<Vec<f64>, OracleError> {
    if s.is_empty() || s.len() != k.len() {
        return Err(OracleError::Length);
    }
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(OracleError::InvalidGamma);
    }
    for (idx, (&si, &ki)) in s.iter().zip(k).enumerate() {
        if !(si >= 0.0 && si.is_finite() && ki >= 1.0 && ki.is_finite()) {
            return Err(OracleError::InvalidInput(idx));
        }
    }

    // (weighted sum, total weight, number of merged points)
    let mut blocks: Vec<(f64, f64, usize)> = Vec::with_capacity(s.len());
    for (&si, &ki) in s.iter().zip(k) {
        blocks.push((ki * si, ki, 1));
        while blocks.len() >= 2 {
            let (s1, w1, c1) = blocks[blocks.len() - 1];
            let (s0, w0, c0) = blocks[blocks.len() - 2];
            if s0 / w0 <= s1 / w1 {
                break;
            }
            blocks.pop();
            *blocks.last_mut().unwrap() = (s0 + s1, w0 + w1, c0 + c1);
        }
    }

    let mut q = Vec::with_capacity(s.len());
    for (sum, w, count) in blocks {
        let level = (sum / w).max(gamma);
        q.extend(core::iter::repeat_n(level, count));
    }
    Ok(q)
}

const DYKSTRA_MAX_ITERS: usize = 20_000;
const DYKSTRA_TOL: f64 = 1e-15;
const STATIONARITY_EVERY: usize = 20;
const BACKTRACK_FLOOR: f64 = 1e-12;

/// Euclidean projection of `(P_1, …, P_n)` onto `{Γ⁻¹ ⪰ P_j for root edges,
/// P_i ⪰ P_j for inner edges}`. `p[0]` holds `Γ⁻¹` and is never moved.
fn project_orders(inst: &ProblemInstance, p: &[SymMatrix]) -> Result<Vec<SymMatrix>, SolveError> {
    let edges = inst.dag().edges();
    let mut x = p.to_vec();
    let zero = SymMatrix::zeros(inst.p());
    // Dykstra increments, one pair (tail, head) per constraint set.
    let mut inc: Vec<(SymMatrix, SymMatrix)> = vec![(zero.clone(), zero); edges.len()];
    let scale = p.iter().map(SymMatrix::max_abs).fold(1.0, f64::max);

    for _ in 0..DYKSTRA_MAX_ITERS {
        let mut change = 0.0_f64;
        for (c, e) in edges.iter().enumerate() {
            let (ref mut di, ref mut dj) = inc[c];
            let zj = &x[e.to] + dj;
            if e.from == 0 {
                // {P_j : Γ⁻¹ - P_j ⪰ 0}
                let d = &x[0] - &zj;
                let pj = &x[0] - &psd_project(&d)?;
                let nj = &zj - &pj;
                change = change.max((&pj - &x[e.to]).max_abs()).max((&nj - dj).max_abs());
                *dj = nj;
                x[e.to] = pj;
            } else {
                // {(P_i, P_j) : P_i - P_j ⪰ 0}
                let zi = &x[e.from] + di;
                let d = &zi - &zj;
                let lift = &psd_project(&d)? - &d;
                let pi = zi.axpy(0.5, &lift);
                let pj = zj.axpy(-0.5, &lift);
                let (ni, nj) = (&zi - &pi, &zj - &pj);
                change = change.max((&pi - &x[e.from]).max_abs()).max((&pj - &x[e.to]).max_abs());
                change = change.max((&ni - di).max_abs()).max((&nj - dj).max_abs());
                *di = ni;
                *dj = nj;
                x[e.from] = pi;
                x[e.to] = pj;
            }
        }
        if change <= DYKSTRA_TOL * scale {
            break;
        }
    }
    Ok(x)
}

fn precision_objective(inst: &ProblemInstance, p: &[SymMatrix]) -> Option<f64> {
    let mut total = 0.0;
    for i in 1..=inst.n() {
        total += inst.k(i) * (-logdet_pd(&p[i]).ok()? + inst.s(i).dot(&p[i]));
    }
    Some(total)
}

/// Projected gradient descent with backtracking in precision space.
/// Returns vertex-indexed `Q` (`q[0] = Γ`).
pub fn projected_gradient(inst: &ProblemInstance, iters: usize, step: f64) -> Result<Vec<SymMatrix>, SolveError> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(SolveError::InvalidOption("step must be positive and finite"));
    }
    let n = inst.n();
    let gamma_inv = inverse_pd(inst.gamma())?;
    let c = inst.scale();
    let mut p = vec![SymMatrix::scaled_identity(inst.p(), 1.0 / c); n + 1];
    p[0] = gamma_inv;
    p = project_orders(inst, &p)?;
    let mut f = precision_objective(inst, &p).ok_or(SolveError::NotConverged { sweeps: 0 })?;
    let mut t = step;

    for it in 1..=iters {
        let mut grad = vec![SymMatrix::zeros(inst.p()); n + 1];
        for i in 1..=n {
            grad[i] = inst.s(i).axpy(-1.0, &inverse_pd(&p[i])?).scale(inst.k(i));
        }
        // Stationarity is measured at the fixed initial step: near the
        // optimum the backtracked step shrinks until the projection's own
        // rounding dominates the adaptive mapping.
        if it % STATIONARITY_EVERY == 1 {
            let probe: Vec<SymMatrix> = p.iter().zip(&grad).map(|(pi, gi)| pi.axpy(-step, gi)).collect();
            let moved = project_orders(inst, &probe)?;
            let sq: f64 = moved.iter().zip(&p).map(|(a, b)| (a - b).dot(&(a - b))).sum();
            if libm::sqrt(sq) / step <= 1e-9 * c {
                return to_covariances(inst, &p);
            }
        }
        loop {
            let trial: Vec<SymMatrix> = p.iter().zip(&grad).map(|(pi, gi)| pi.axpy(-t, gi)).collect();
            let cand = project_orders(inst, &trial)?;
            let diff: Vec<SymMatrix> = cand.iter().zip(&p).map(|(a, b)| a - b).collect();
            let lin: f64 = diff.iter().zip(&grad).map(|(d, g)| d.dot(g)).sum();
            let sq: f64 = diff.iter().map(|d| d.dot(d)).sum();
            match precision_objective(inst, &cand) {
                Some(fc) if fc <= f + lin + sq / (2.0 * t) => {
                    p = cand;
                    f = fc;
                    t = (t * 1.5).min(step);
                    break;
                }
                _ => {
                    t *= 0.5;
                    // With exact arithmetic any t below 1/L is accepted; a
                    // collapse this far means the decrease is below the
                    // rounding of the objective.
                    if t < BACKTRACK_FLOOR * step {
                        return to_covariances(inst, &p);
                    }
                }
            }
        }
    }
    Err(SolveError::NotConverged { sweeps: iters })
}

fn to_covariances(inst: &ProblemInstance, p: &[SymMatrix]) -> Result<Vec<SymMatrix>, SolveError> {
    let mut q = Vec::with_capacity(p.len());
    q.push(inst.gamma().clone());
    for pi in &p[1..] {
        q.push(inverse_pd(pi)?);
    }
    // Sanity: recovered covariances must be positive definite.
    for qi in &q {
        if eig_sym(qi)?.min() <= 0.0 {
            return Err(SolveError::NotConverged { sweeps: 0 });
        }
    }
    Ok(q)
}
