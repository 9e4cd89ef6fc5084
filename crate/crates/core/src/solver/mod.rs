//! Loewner-order constrained Wishart maximum likelihood on a DAG.
//!
//! The primal problem is
//!
//! ```text
//! min_Q  Σ_i k_i (log det Q_i + tr(S_i Q_i⁻¹))   s.t.  Q_0 = Γ,  Q_i ⪯ Q_j  ∀ (i,j) ∈ E
//! ```
//!
//! and is solved through its Fenchel dual, one PSD matrix `Y_e` per edge,
//!
//! ```text
//! max_Y  -tr(M_0 Γ⁻¹) - Σ_i k_i f*(M_i / k_i - S_i),   M_i = Σ_e b_ie Y_e,
//! ```
//!
//! with `f*(X) = -log det(-X) - p`. Each block update has a closed form, and
//! the primal optimum is read off the KKT condition `Q_i = S_i - M_i / k_i`.
//! Both objectives carry the same additive constant, so the duality gap is
//! exactly zero at the joint optimum.

pub mod oracle;

use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::graph::{Edge, GraphError, OrderDag};
use crate::sym::{
    eig_sym, f_conjugate, inverse_pd, logdet_pd, pd_floor, psd_project, sqrt_and_inv_sqrt_pd, LinalgError, SymMatrix,
};

/// Relative PSD slack accepted on scatter matrices.
const SCATTER_PSD_SLACK: f64 = 1e-10;
/// Degenerate-`A` threshold, in multiples of the eigenvalue floor.
const DEGENERATE_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("{what}: expected {expected} entries, got {got}")]
    LengthMismatch { what: &'static str, expected: usize, got: usize },
    #[error("{what} at vertex {vertex} has dimension {got}, expected {expected}")]
    DimensionMismatch { what: &'static str, vertex: usize, expected: usize, got: usize },
    #[error("weight k at vertex {vertex} must be at least 1")]
    InvalidWeight { vertex: usize },
    #[error("scatter matrix at vertex {vertex} is not positive semi-definite (min eigenvalue {min_eigenvalue:e})")]
    ScatterNotPsd { vertex: usize, min_eigenvalue: f64 },
    #[error("noise covariance is not positive definite")]
    GammaNotPd,
    #[error("dual state violates the feasibility constraint at vertex {vertex}")]
    Infeasible { vertex: usize },
    #[error("no dual-feasible starting point found (vertex {vertex})")]
    InfeasibleInstance { vertex: usize },
    #[error("edge #{edge} subproblem is degenerate (min eigenvalue of A {min_eigenvalue:e})")]
    DegenerateSubproblem { edge: usize, min_eigenvalue: f64 },
    #[error("not converged after {sweeps} sweeps")]
    NotConverged { sweeps: usize },
    #[error("invalid option: {0}")]
    InvalidOption(&'static str),
}

/// Full input of the constrained estimation problem.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    dag: OrderDag,
    p: usize,
    k: Vec<u32>,
    s: Vec<SymMatrix>,
    gamma: SymMatrix,
    gamma_inv: SymMatrix,
    scale: f64,
}

impl ProblemInstance {
    /// `k` and `s` are indexed by vertex `1..=n` (stored at `0..n`).
    pub fn new(dag: OrderDag, k: Vec<u32>, s: Vec<SymMatrix>, gamma: SymMatrix) -> Result<Self, SolveError> {
        dag.validate()?;
        let n = dag.n();
        let p = gamma.dim();
        if k.len() != n {
            return Err(SolveError::LengthMismatch { what: "k", expected: n, got: k.len() });
        }
        if s.len() != n {
            return Err(SolveError::LengthMismatch { what: "S", expected: n, got: s.len() });
        }
        let gamma_eig = eig_sym(&gamma)?;
        if p == 0 || gamma_eig.min() <= pd_floor(gamma_eig.max()) {
            return Err(SolveError::GammaNotPd);
        }
        let mut scale = gamma_eig.max().max(1.0);
        for (idx, (si, &ki)) in s.iter().zip(&k).enumerate() {
            let vertex = idx + 1;
            if ki == 0 {
                return Err(SolveError::InvalidWeight { vertex });
            }
            if si.dim() != p {
                return Err(SolveError::DimensionMismatch { what: "S", vertex, expected: p, got: si.dim() });
            }
            let e = eig_sym(si)?;
            if e.min() < -SCATTER_PSD_SLACK * e.spectral_scale().max(1.0) {
                return Err(SolveError::ScatterNotPsd { vertex, min_eigenvalue: e.min() });
            }
            scale = scale.max(e.max());
        }
        let gamma_inv = inverse_pd(&gamma)?;
        Ok(ProblemInstance { dag, p, k, s, gamma, gamma_inv, scale })
    }

    pub fn dag(&self) -> &OrderDag {
        &self.dag
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn n(&self) -> usize {
        self.dag.n()
    }

    /// Weight of vertex `i ∈ 1..=n`.
    pub fn k(&self, i: usize) -> f64 {
        self.k[i - 1] as f64
    }

    pub fn weights(&self) -> &[u32] {
        &self.k
    }

    /// Scatter matrix of vertex `i ∈ 1..=n`.
    pub fn s(&self, i: usize) -> &SymMatrix {
        &self.s[i - 1]
    }

    pub fn scatters(&self) -> &[SymMatrix] {
        &self.s
    }

    pub fn gamma(&self) -> &SymMatrix {
        &self.gamma
    }

    /// `max(1, λ_max(Γ), max_i λ_max(S_i))`; the reference magnitude for
    /// scale-relative tolerances.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Default initialization bump: `1e-6 · max(1, mean_i tr(S_i) / p)`.
    pub fn default_eps(&self) -> f64 {
        let mean_tr = self.s.iter().map(SymMatrix::trace).sum::<f64>() / (self.n() as f64 * self.p as f64);
        1e-6 * mean_tr.max(1.0)
    }
}

/// One PSD matrix per edge, in the DAG's edge order.
#[derive(Debug, Clone, PartialEq)]
pub struct DualState {
    pub y: Vec<SymMatrix>,
}

impl DualState {
    pub fn zeros(inst: &ProblemInstance) -> Self {
        DualState { y: vec![SymMatrix::zeros(inst.p()); inst.dag().edges().len()] }
    }

    /// `M_i = Σ_e b_ie Y_e` for every vertex, root included.
    pub fn vertex_sums(&self, inst: &ProblemInstance) -> Vec<SymMatrix> {
        let mut m = vec![SymMatrix::zeros(inst.p()); inst.dag().num_vertices()];
        for (e, y) in inst.dag().edges().iter().zip(&self.y) {
            m[e.from].add_scaled(1.0, y);
            m[e.to].add_scaled(-1.0, y);
        }
        m
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    /// Relative dual-objective increase per sweep below which ascent has stalled.
    pub tol_rel: f64,
    /// Allowed order violation, relative to [`ProblemInstance::scale`].
    pub tol_feas: f64,
    /// Allowed `|duality gap|`, relative to `1 + |dual objective|`.
    pub tol_gap: f64,
    pub max_sweeps: usize,
    /// Initialization bump; `None` picks [`ProblemInstance::default_eps`].
    pub eps_init: Option<f64>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { tol_rel: 1e-10, tol_feas: 1e-8, tol_gap: 1e-6, max_sweeps: 10_000, eps_init: None }
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    /// Vertex-indexed covariances; `q[0] = Γ`.
    pub q: Vec<SymMatrix>,
    /// `sigma[i - 1] = Q_i - Γ`.
    pub sigma: Vec<SymMatrix>,
    pub dual: DualState,
    pub dual_objective: f64,
    pub primal_objective: f64,
    pub duality_gap: f64,
    pub sweeps: usize,
    pub converged: bool,
    /// Most negative eigenvalue of `Q_j - Q_i` over all edges.
    pub max_order_violation: f64,
}

impl SolveReport {
    pub fn require_converged(self) -> Result<Self, SolveError> {
        if self.converged {
            Ok(self)
        } else {
            Err(SolveError::NotConverged { sweeps: self.sweeps })
        }
    }
}

/// One block update as seen by an observer of [`solve_observed`].
#[derive(Debug, Clone, Copy)]
pub struct BlockUpdate {
    pub sweep: usize,
    pub edge: usize,
    pub objective_before: f64,
    pub objective_after: f64,
}

fn check_vertex_list(inst: &ProblemInstance, q: &[SymMatrix]) -> Result<(), SolveError> {
    let nv = inst.dag().num_vertices();
    if q.len() != nv {
        return Err(SolveError::LengthMismatch { what: "Q", expected: nv, got: q.len() });
    }
    Ok(())
}

/// `Σ_i k_i (log det Q_i + tr(S_i Q_i⁻¹))` over vertices `1..=n`; `q[0]` is ignored.
pub fn primal_objective(inst: &ProblemInstance, q: &[SymMatrix]) -> Result<f64, SolveError> {
    check_vertex_list(inst, q)?;
    let mut total = 0.0;
    for i in 1..=inst.n() {
        let eig = eig_sym(&q[i])?;
        if eig.dim() > 0 && eig.min() <= pd_floor(eig.max()) {
            return Err(LinalgError::NotPositiveDefinite { min_eigenvalue: eig.min() }.into());
        }
        let logdet: f64 = eig.values.iter().map(|&l| libm::log(l)).sum();
        total += inst.k(i) * (logdet + inst.s(i).dot(&eig.map(|l| 1.0 / l)));
    }
    Ok(total)
}

fn vertex_dual_term(inst: &ProblemInstance, i: usize, m_i: &SymMatrix) -> Result<f64, SolveError> {
    let ki = inst.k(i);
    let arg = m_i.scale(1.0 / ki).axpy(-1.0, inst.s(i));
    match f_conjugate(&arg) {
        Ok(v) => Ok(-ki * v),
        Err(LinalgError::Infeasible { .. }) => Err(SolveError::Infeasible { vertex: i }),
        Err(e) => Err(e.into()),
    }
}

fn root_dual_term(inst: &ProblemInstance, m_0: &SymMatrix) -> f64 {
    -m_0.dot(&inst.gamma_inv)
}

/// Dual objective; `Infeasible` names the first vertex whose `f*` argument is
/// not negative definite.
pub fn dual_objective(inst: &ProblemInstance, y: &DualState) -> Result<f64, SolveError> {
    check_dual_len(inst, y)?;
    let m = y.vertex_sums(inst);
    let mut total = root_dual_term(inst, &m[0]);
    for (i, mi) in m.iter().enumerate().skip(1) {
        total += vertex_dual_term(inst, i, mi)?;
    }
    Ok(total)
}

fn dual_terms(inst: &ProblemInstance, m: &[SymMatrix]) -> Result<Vec<f64>, SolveError> {
    let mut terms = Vec::with_capacity(m.len());
    terms.push(root_dual_term(inst, &m[0]));
    for (i, mi) in m.iter().enumerate().skip(1) {
        terms.push(vertex_dual_term(inst, i, mi)?);
    }
    Ok(terms)
}

fn check_dual_len(inst: &ProblemInstance, y: &DualState) -> Result<(), SolveError> {
    let ne = inst.dag().edges().len();
    if y.y.len() != ne {
        return Err(SolveError::LengthMismatch { what: "Y", expected: ne, got: y.y.len() });
    }
    Ok(())
}

fn vertex_is_feasible(inst: &ProblemInstance, i: usize, m_i: &SymMatrix) -> Result<bool, SolveError> {
    let slack = inst.s(i).axpy(-1.0 / inst.k(i), m_i);
    let e = eig_sym(&slack)?;
    Ok(e.min() > pd_floor(e.max()))
}

/// Vertices violating `Σ_e b_ie Y_e ≺ k_i S_i`, ascending.
pub fn dual_violations(inst: &ProblemInstance, y: &DualState) -> Result<Vec<usize>, SolveError> {
    check_dual_len(inst, y)?;
    let m = y.vertex_sums(inst);
    let mut bad = Vec::new();
    for (i, mi) in m.iter().enumerate().skip(1) {
        if !vertex_is_feasible(inst, i, mi)? {
            bad.push(i);
        }
    }
    Ok(bad)
}

/// Per-vertex feasibility flags for vertices `1..=n` (index 0 is the root, always true).
pub fn is_dual_feasible(inst: &ProblemInstance, y: &DualState) -> Result<Vec<bool>, SolveError> {
    let bad = dual_violations(inst, y)?;
    let mut flags = vec![true; inst.dag().num_vertices()];
    for v in bad {
        flags[v] = false;
    }
    Ok(flags)
}

/// Starts from `Y = 0` and, for each violating vertex in ascending order,
/// adds `eps · I` along a root path to it. Bumps cancel at interior path
/// vertices, so each vertex is touched at most once.
pub fn init_feasible(inst: &ProblemInstance, eps: f64) -> Result<DualState, SolveError> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(SolveError::InvalidOption("eps_init must be positive and finite"));
    }
    let mut y = DualState::zeros(inst);
    let mut m = y.vertex_sums(inst);
    let bump = SymMatrix::scaled_identity(inst.p(), eps);
    for i in 1..=inst.n() {
        if vertex_is_feasible(inst, i, &m[i])? {
            continue;
        }
        for e in inst.dag().path_edge_indices(i)? {
            y.y[e].add_scaled(1.0, &bump);
            let edge = inst.dag().edges()[e];
            m[edge.from].add_scaled(1.0, &bump);
            m[edge.to].add_scaled(-1.0, &bump);
        }
    }
    Ok(y)
}

/// Maximizer of `k_i log det(A - Y/k_i) + k_j log det(B + Y/k_j)` over PSD `Y`:
/// `k_i k_j / (k_i + k_j) · A^{1/2} proj₊(I - A^{-1/2} B A^{-1/2}) A^{1/2}`.
pub fn inner_edge_closed_form(a: &SymMatrix, b: &SymMatrix, ki: f64, kj: f64) -> Result<SymMatrix, LinalgError> {
    let (a_half, a_inv_half) = sqrt_and_inv_sqrt_pd(a)?;
    inner_closed_form_with_roots(&a_half, &a_inv_half, b, ki, kj)
}

fn inner_closed_form_with_roots(
    a_half: &SymMatrix,
    a_inv_half: &SymMatrix,
    b: &SymMatrix,
    ki: f64,
    kj: f64,
) -> Result<SymMatrix, LinalgError> {
    let c = b.congruence(a_inv_half);
    let proj = psd_project(&SymMatrix::identity(b.dim()).axpy(-1.0, &c))?;
    Ok(proj.congruence(a_half).scale(ki * kj / (ki + kj)))
}

/// Maximizer of `-tr(Y Γ⁻¹) + k_j log det(B + Y/k_j)` over PSD `Y`:
/// `k_j Γ^{1/2} proj₊(I - Γ^{-1/2} B Γ^{-1/2}) Γ^{1/2}`.
pub fn root_edge_closed_form(
    gamma_half: &SymMatrix,
    gamma_inv_half: &SymMatrix,
    b: &SymMatrix,
    kj: f64,
) -> Result<SymMatrix, LinalgError> {
    let c = b.congruence(gamma_inv_half);
    let proj = psd_project(&SymMatrix::identity(b.dim()).axpy(-1.0, &c))?;
    Ok(proj.congruence(gamma_half).scale(kj))
}

/// Objective of the inner-edge subproblem, `None` outside its domain.
pub fn inner_subproblem_objective(a: &SymMatrix, b: &SymMatrix, ki: f64, kj: f64, y: &SymMatrix) -> Option<f64> {
    let left = logdet_pd(&a.axpy(-1.0 / ki, y)).ok()?;
    let right = logdet_pd(&b.axpy(1.0 / kj, y)).ok()?;
    Some(ki * left + kj * right)
}

/// Objective of the root-edge subproblem, `None` outside its domain.
pub fn root_subproblem_objective(gamma_inv: &SymMatrix, b: &SymMatrix, kj: f64, y: &SymMatrix) -> Option<f64> {
    let right = logdet_pd(&b.axpy(1.0 / kj, y)).ok()?;
    Some(-y.dot(gamma_inv) + kj * right)
}

/// `(A, B)` for edge `e` with every other block held fixed. For a root edge
/// `A` is `None`.
pub fn subproblem_matrices(
    inst: &ProblemInstance,
    y: &DualState,
    e: usize,
) -> Result<(Option<SymMatrix>, SymMatrix), SolveError> {
    check_dual_len(inst, y)?;
    let m = y.vertex_sums(inst);
    let edge = inst.dag().edge(e)?;
    Ok(edge_subproblem(inst, &m, &y.y[e], edge))
}

fn edge_subproblem(inst: &ProblemInstance, m: &[SymMatrix], ye: &SymMatrix, edge: Edge) -> (Option<SymMatrix>, SymMatrix) {
    let (i, j) = (edge.from, edge.to);
    // Remove this edge's own contribution: b_ie = +1, b_je = -1.
    let b = inst.s(j).axpy(-1.0 / inst.k(j), &m[j].axpy(1.0, ye));
    let a = (i != 0).then(|| inst.s(i).axpy(-1.0 / inst.k(i), &m[i].axpy(-1.0, ye)));
    (a, b)
}

/// Closed-form block update for an inner edge `(i, j)`, `i ≠ 0`.
pub fn update_inner_edge(inst: &ProblemInstance, y: &DualState, e: usize) -> Result<SymMatrix, SolveError> {
    let edge = inst.dag().edge(e)?;
    if edge.is_root() {
        return Err(SolveError::InvalidOption("update_inner_edge called on a root edge"));
    }
    let (a, b) = subproblem_matrices(inst, y, e)?;
    let a = a.expect("inner edge has an A block");
    inner_update(inst, e, edge, &a, &b)
}

fn inner_update(inst: &ProblemInstance, e: usize, edge: Edge, a: &SymMatrix, b: &SymMatrix) -> Result<SymMatrix, SolveError> {
    let eig = eig_sym(a)?;
    if eig.min() <= DEGENERATE_FACTOR * pd_floor(eig.max()) {
        return Err(SolveError::DegenerateSubproblem { edge: e, min_eigenvalue: eig.min() });
    }
    // The degeneracy check above is stricter than positive definiteness, so
    // the roots can come straight from this decomposition.
    let a_half = eig.map(libm::sqrt);
    let a_inv_half = eig.map(|l| 1.0 / libm::sqrt(l));
    Ok(inner_closed_form_with_roots(&a_half, &a_inv_half, b, inst.k(edge.from), inst.k(edge.to))?)
}

/// Closed-form block update for a root edge `(0, j)`.
pub fn update_root_edge(inst: &ProblemInstance, y: &DualState, e: usize) -> Result<SymMatrix, SolveError> {
    let edge = inst.dag().edge(e)?;
    if !edge.is_root() {
        return Err(SolveError::InvalidOption("update_root_edge called on an inner edge"));
    }
    let (_, b) = subproblem_matrices(inst, y, e)?;
    let (gh, gih) = sqrt_and_inv_sqrt_pd(inst.gamma())?;
    Ok(root_edge_closed_form(&gh, &gih, &b, inst.k(edge.to))?)
}

/// KKT recovery `Q_i = S_i - M_i / k_i`, with `Q_0 = Γ`.
pub fn recover_primal(inst: &ProblemInstance, y: &DualState) -> Result<Vec<SymMatrix>, SolveError> {
    check_dual_len(inst, y)?;
    Ok(recover_from_sums(inst, &y.vertex_sums(inst)))
}

fn recover_from_sums(inst: &ProblemInstance, m: &[SymMatrix]) -> Vec<SymMatrix> {
    let mut q = Vec::with_capacity(m.len());
    q.push(inst.gamma().clone());
    for (i, mi) in m.iter().enumerate().skip(1) {
        q.push(inst.s(i).axpy(-1.0 / inst.k(i), mi));
    }
    q
}

/// Most negative eigenvalue of `Q_j - Q_i` over all edges (positive when
/// every constraint is strictly slack).
pub fn max_order_violation(inst: &ProblemInstance, q: &[SymMatrix]) -> Result<f64, SolveError> {
    check_vertex_list(inst, q)?;
    let mut worst = f64::INFINITY;
    for e in inst.dag().edges() {
        worst = worst.min(eig_sym(&(&q[e.to] - &q[e.from]))?.min());
    }
    Ok(worst)
}

/// Primal objective at the KKT-recovered `Q` minus the dual objective at `y`.
pub fn duality_gap(inst: &ProblemInstance, y: &DualState) -> Result<f64, SolveError> {
    let q = recover_primal(inst, y)?;
    Ok(primal_objective(inst, &q)? - dual_objective(inst, y)?)
}

pub fn solve(inst: &ProblemInstance, opts: &SolveOptions) -> Result<SolveReport, SolveError> {
    run(inst, opts, None::<fn(&BlockUpdate)>)
}

/// Dual block coordinate ascent: root edges, then inner edges, each in
/// listed order, repeated until the sweep-level stopping rule holds. The
/// observer sees every block update with the dual objective before and after.
pub fn solve_observed(
    inst: &ProblemInstance,
    opts: &SolveOptions,
    observer: impl FnMut(&BlockUpdate),
) -> Result<SolveReport, SolveError> {
    run(inst, opts, Some(observer))
}

/// Without an observer the per-update objective is not needed, so the
/// vertex terms are only refreshed once per sweep.
fn run(
    inst: &ProblemInstance,
    opts: &SolveOptions,
    mut observer: Option<impl FnMut(&BlockUpdate)>,
) -> Result<SolveReport, SolveError> {
    if opts.max_sweeps == 0 {
        return Err(SolveError::InvalidOption("max_sweeps must be at least 1"));
    }
    let eps = opts.eps_init.unwrap_or_else(|| inst.default_eps());
    let mut y = init_feasible(inst, eps)?;
    if let Some(&vertex) = dual_violations(inst, &y)?.first() {
        return Err(SolveError::InfeasibleInstance { vertex });
    }

    let dag = inst.dag();
    let order: Vec<usize> = (0..dag.edges().len())
        .filter(|&e| dag.edges()[e].is_root())
        .chain((0..dag.edges().len()).filter(|&e| !dag.edges()[e].is_root()))
        .collect();
    let (gamma_half, gamma_inv_half) = sqrt_and_inv_sqrt_pd(inst.gamma())?;

    let mut sweeps = 0;
    let mut converged = false;
    let mut objective;
    let mut m;
    let mut q;
    let mut violation;
    let mut primal;
    let mut terms = Vec::new();
    let mut previous = None;
    loop {
        sweeps += 1;
        // Rebuild the vertex sums each sweep so rounding does not accumulate.
        m = y.vertex_sums(inst);
        let start = match (observer.is_some(), previous) {
            (false, Some(value)) => value,
            _ => {
                terms = dual_terms(inst, &m)?;
                terms.iter().sum()
            }
        };
        objective = start;

        for &e in &order {
            let edge = dag.edges()[e];
            let (a, b) = edge_subproblem(inst, &m, &y.y[e], edge);
            let new = match a {
                None => root_edge_closed_form(&gamma_half, &gamma_inv_half, &b, inst.k(edge.to))?,
                Some(a) => inner_update(inst, e, edge, &a, &b)?,
            };
            let delta = &new - &y.y[e];
            y.y[e] = new;
            m[edge.from].add_scaled(1.0, &delta);
            m[edge.to].add_scaled(-1.0, &delta);

            let Some(observer) = observer.as_mut() else { continue };
            let before = objective;
            terms[edge.from] = if edge.from == 0 {
                root_dual_term(inst, &m[0])
            } else {
                vertex_dual_term(inst, edge.from, &m[edge.from])?
            };
            terms[edge.to] = vertex_dual_term(inst, edge.to, &m[edge.to])?;
            objective = terms.iter().sum();
            observer(&BlockUpdate { sweep: sweeps, edge: e, objective_before: before, objective_after: objective });
        }

        if observer.is_none() {
            objective = dual_terms(inst, &m)?.iter().sum();
            previous = Some(objective);
        }
        q = recover_from_sums(inst, &m);
        violation = max_order_violation(inst, &q)?;
        primal = primal_objective(inst, &q)?;
        let gap = primal - objective;
        let rel_increase = (objective - start) / (1.0 + objective.abs());
        if rel_increase <= opts.tol_rel
            && violation >= -opts.tol_feas * inst.scale()
            && gap.abs() <= opts.tol_gap * (1.0 + objective.abs())
        {
            converged = true;
        }
        if converged || sweeps >= opts.max_sweeps {
            break;
        }
    }

    let gamma = inst.gamma();
    let sigma = q.iter().skip(1).map(|qi| qi - gamma).collect();
    Ok(SolveReport {
        sigma,
        q,
        dual: y,
        dual_objective: objective,
        primal_objective: primal,
        duality_gap: primal - objective,
        sweeps,
        converged,
        max_order_violation: violation,
    })
}
