//! JSON problem and solution files, version 1.
//!
//! Matrices are nested row-major arrays. Numbers are written with the
//! shortest representation that parses back to the same `f64`.

use std::path::Path;

use discerr_core::solver::DualState;
use discerr_core::{GraphError, OrderDag, ProblemInstance, SolveError, SolveReport, SymMatrix};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const FORMAT_VERSION: u32 = 1;

pub type Matrix = Vec<Vec<f64>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFileV1 {
    pub format_version: u32,
    pub p: usize,
    pub n: usize,
    pub edges: Vec<[usize; 2]>,
    pub k: Vec<u32>,
    pub gamma: Matrix,
    #[serde(rename = "S")]
    pub s: Vec<Matrix>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolutionFileV1 {
    pub format_version: u32,
    /// `Q[0] = Γ`, then one matrix per vertex.
    #[serde(rename = "Q")]
    pub q: Vec<Matrix>,
    #[serde(rename = "Sigma")]
    pub sigma: Vec<Matrix>,
    /// Edge matrices `Y_e` in edge order, so the dual objective can be
    /// re-evaluated from the file.
    pub dual: Vec<Matrix>,
    pub dual_objective: f64,
    pub primal_objective: f64,
    pub duality_gap: f64,
    pub sweeps: usize,
    pub converged: bool,
    pub max_order_violation: f64,
}

/// Parses JSON, reporting the failing field path and position.
pub fn parse_json<T: for<'de> Deserialize<'de>>(path: &Path, text: &str) -> Result<T, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let at = e.path().to_string();
        let inner = e.into_inner();
        CliError::Input(format!("{}: at `{at}`: {inner}", path.display()))
    })
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_json(path, &text)
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("plain data always serializes");
    s.push('\n');
    s
}

pub fn matrix_rows(m: &SymMatrix) -> Matrix {
    m.to_rows()
}

fn field(name: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Input(format!("field `{name}`: {msg}"))
}

pub fn parse_matrix(name: &str, rows: &Matrix, p: usize) -> Result<SymMatrix, CliError> {
    if rows.len() != p {
        return Err(field(name, format_args!("expected {p} rows, got {}", rows.len())));
    }
    let mut flat = Vec::with_capacity(p * p);
    for (r, row) in rows.iter().enumerate() {
        if row.len() != p {
            return Err(field(&format!("{name}[{r}]"), format_args!("expected {p} entries, got {}", row.len())));
        }
        flat.extend_from_slice(row);
    }
    SymMatrix::from_row_major(p, &flat).map_err(|e| field(name, e))
}

impl ProblemFileV1 {
    pub fn from_instance(inst: &ProblemInstance) -> Self {
        ProblemFileV1 {
            format_version: FORMAT_VERSION,
            p: inst.p(),
            n: inst.n(),
            edges: inst.dag().edges().iter().map(|e| [e.from, e.to]).collect(),
            k: inst.weights().to_vec(),
            gamma: matrix_rows(inst.gamma()),
            s: inst.scatters().iter().map(matrix_rows).collect(),
        }
    }

    /// Semantic validation; errors name the offending field.
    pub fn to_instance(&self) -> Result<ProblemInstance, CliError> {
        if self.format_version != FORMAT_VERSION {
            return Err(field("format_version", format_args!("unsupported version {}", self.format_version)));
        }
        if self.p == 0 {
            return Err(field("p", "must be at least 1"));
        }
        if self.n == 0 {
            return Err(field("n", "must be at least 1"));
        }
        if self.k.len() != self.n {
            return Err(field("k", format_args!("expected {} entries, got {}", self.n, self.k.len())));
        }
        if self.s.len() != self.n {
            return Err(field("S", format_args!("expected {} matrices, got {}", self.n, self.s.len())));
        }
        let gamma = parse_matrix("gamma", &self.gamma, self.p)?;
        let s = self
            .s
            .iter()
            .enumerate()
            .map(|(i, m)| parse_matrix(&format!("S[{i}]"), m, self.p))
            .collect::<Result<Vec<_>, _>>()?;
        let dag = OrderDag::new(self.n, self.edges.iter().map(|&[a, b]| (a, b))).map_err(|e| graph_error(&e))?;
        ProblemInstance::new(dag, self.k.clone(), s, gamma).map_err(|e| instance_error(&e))
    }
}

fn graph_error(e: &GraphError) -> CliError {
    match e {
        GraphError::MalformedEdge { index, .. } => field(&format!("edges[{index}]"), e),
        _ => field("edges", e),
    }
}

fn instance_error(e: &SolveError) -> CliError {
    match e {
        SolveError::Graph(g) => graph_error(g),
        SolveError::InvalidWeight { vertex } => field(&format!("k[{}]", vertex - 1), e),
        SolveError::ScatterNotPsd { vertex, .. } => field(&format!("S[{}]", vertex - 1), e),
        SolveError::DimensionMismatch { vertex, .. } if *vertex > 0 => field(&format!("S[{}]", vertex - 1), e),
        SolveError::GammaNotPd | SolveError::DimensionMismatch { .. } => field("gamma", e),
        _ => CliError::Input(e.to_string()),
    }
}

impl SolutionFileV1 {
    pub fn from_report(rep: &SolveReport) -> Self {
        SolutionFileV1 {
            format_version: FORMAT_VERSION,
            q: rep.q.iter().map(matrix_rows).collect(),
            sigma: rep.sigma.iter().map(matrix_rows).collect(),
            dual: rep.dual.y.iter().map(matrix_rows).collect(),
            dual_objective: rep.dual_objective,
            primal_objective: rep.primal_objective,
            duality_gap: rep.duality_gap,
            sweeps: rep.sweeps,
            converged: rep.converged,
            max_order_violation: rep.max_order_violation,
        }
    }

    fn check_version(&self) -> Result<(), CliError> {
        if self.format_version != FORMAT_VERSION {
            return Err(field("format_version", format_args!("unsupported version {}", self.format_version)));
        }
        Ok(())
    }

    /// `Σ̃` blocks; every matrix must share the dimension of the first.
    pub fn sigma_matrices(&self) -> Result<Vec<SymMatrix>, CliError> {
        self.check_version()?;
        let p = self.sigma.first().map_or(0, Vec::len);
        self.sigma.iter().enumerate().map(|(i, m)| parse_matrix(&format!("Sigma[{i}]"), m, p)).collect()
    }

    pub fn dual_state(&self, p: usize) -> Result<DualState, CliError> {
        self.check_version()?;
        let y = self
            .dual
            .iter()
            .enumerate()
            .map(|(i, m)| parse_matrix(&format!("dual[{i}]"), m, p))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(DualState { y })
    }
}
