//! From block statistics to error estimates: chain problem assembly,
//! discretization-error covariances `Σ̃_i = Q_i - Γ`, bivariate confidence
//! ellipses and their empirical coverage.
//!
//! Confidence regions are level sets of the 2-D Gaussian marginal, so the
//! squared Mahalanobis radius for probability `level` is the chi-square
//! (2 d.o.f.) quantile `-2 ln(1 - level)`.

use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

use crate::graph::OrderDag;
use crate::ode::{BlockStats, State};
use crate::solver::{ProblemInstance, SolveError, SolveReport};
use crate::sym::{eig_sym, pd_floor, LinalgError, SymMatrix};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuantifyError {
    #[error("2x2 marginal is singular (min eigenvalue {min_eigenvalue:e})")]
    SingularMarginal { min_eigenvalue: f64 },
    #[error("probability level {0} outside (0, 1)")]
    InvalidLevel(f64),
    #[error("{what}: expected {expected}, got {got}")]
    LengthMismatch { what: &'static str, expected: usize, got: usize },
    #[error("axis pair ({0}, {1}) is invalid")]
    InvalidPair(usize, usize),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Two distinct state components, 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AxisPair(pub usize, pub usize);

/// `(x1, x2)`, `(x2, x3)`, `(x3, x1)`.
pub const STANDARD_PAIRS: [AxisPair; 3] = [AxisPair(0, 1), AxisPair(1, 2), AxisPair(2, 0)];
pub const STANDARD_LEVELS: [f64; 2] = [0.68, 0.95];

impl AxisPair {
    fn check(self, dim: usize) -> Result<(), QuantifyError> {
        if self.0 == self.1 || self.0 >= dim || self.1 >= dim {
            return Err(QuantifyError::InvalidPair(self.0, self.1));
        }
        Ok(())
    }

    pub fn marginal(self, m: &SymMatrix) -> Result<SymMatrix, QuantifyError> {
        self.check(m.dim())?;
        Ok(m.submatrix(&[self.0, self.1]))
    }

    pub fn project(self, v: &State) -> [f64; 2] {
        [v[self.0], v[self.1]]
    }
}

/// Printed 1-based, e.g. `1,2`.
impl fmt::Display for AxisPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.0 + 1, self.1 + 1)
    }
}

/// Chi-square quantile with two degrees of freedom.
pub fn chi2_2_quantile(level: f64) -> Result<f64, QuantifyError> {
    if !(level > 0.0 && level < 1.0) {
        return Err(QuantifyError::InvalidLevel(level));
    }
    Ok(-2.0 * libm::log(1.0 - level))
}

/// Chain `Γ ⪯ Q_1 ⪯ … ⪯ Q_n` over the blocks.
pub fn build_chain_problem(stats: &BlockStats, gamma: &SymMatrix) -> Result<ProblemInstance, SolveError> {
    let n = stats.len();
    if stats.scatter.len() != n {
        return Err(SolveError::LengthMismatch { what: "S", expected: n, got: stats.scatter.len() });
    }
    let k = stats
        .sizes
        .iter()
        .map(|&s| u32::try_from(s).map_err(|_| SolveError::InvalidOption("block size too large")))
        .collect::<Result<Vec<_>, _>>()?;
    ProblemInstance::new(OrderDag::chain(n)?, k, stats.scatter.clone(), gamma.clone())
}

/// `Σ̃_i = Q_i - Γ` for every block.
pub fn sigma_tilde(report: &SolveReport, gamma: &SymMatrix) -> Vec<SymMatrix> {
    report.q.iter().skip(1).map(|q| q - gamma).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorEllipse {
    pub block_index: usize,
    pub pair: AxisPair,
    pub level: f64,
    pub semi_major: f64,
    pub semi_minor: f64,
    /// Direction of the major axis, radians in `(-π/2, π/2]`.
    pub angle: f64,
}

fn check_marginal(sigma2: &SymMatrix) -> Result<crate::sym::EigenDecomposition, QuantifyError> {
    if sigma2.dim() != 2 {
        return Err(QuantifyError::LengthMismatch { what: "marginal dimension", expected: 2, got: sigma2.dim() });
    }
    let eig = eig_sym(sigma2)?;
    if eig.min() <= pd_floor(eig.max()) {
        return Err(QuantifyError::SingularMarginal { min_eigenvalue: eig.min() });
    }
    Ok(eig)
}

/// Semi-axes `sqrt(λ q(level))` and orientation of the confidence ellipse of
/// a 2x2 covariance.
pub fn ellipse_params(sigma2: &SymMatrix, level: f64) -> Result<(f64, f64, f64), QuantifyError> {
    let q = chi2_2_quantile(level)?;
    let eig = check_marginal(sigma2)?;
    let v = eig.vector(0);
    let mut angle = libm::atan2(v[1], v[0]);
    let half_pi = core::f64::consts::FRAC_PI_2;
    if angle > half_pi {
        angle -= core::f64::consts::PI;
    } else if angle <= -half_pi {
        angle += core::f64::consts::PI;
    }
    Ok((libm::sqrt(eig.values[0] * q), libm::sqrt(eig.values[1] * q), angle))
}

pub fn block_ellipse(
    sigma: &SymMatrix,
    block_index: usize,
    pair: AxisPair,
    level: f64,
) -> Result<ErrorEllipse, QuantifyError> {
    let (semi_major, semi_minor, angle) = ellipse_params(&pair.marginal(sigma)?, level)?;
    Ok(ErrorEllipse { block_index, pair, level, semi_major, semi_minor, angle })
}

/// Squared Mahalanobis radius `pᵀ Σ⁻¹ p` of a point under a 2x2 covariance.
pub fn mahalanobis_sq(sigma2: &SymMatrix, point: [f64; 2]) -> Result<f64, QuantifyError> {
    let eig = check_marginal(sigma2)?;
    Ok(eig.map(|l| 1.0 / l).quadratic_form(&point))
}

/// Whether `point` lies in the `level` confidence ellipse of `sigma2`.
pub fn contains(sigma2: &SymMatrix, level: f64, point: [f64; 2]) -> Result<bool, QuantifyError> {
    let q = chi2_2_quantile(level)?;
    Ok(mahalanobis_sq(sigma2, point)? <= q)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairCoverage {
    pub pair: AxisPair,
    pub level: f64,
    /// Share of counted time points inside their block's ellipse; 0 when
    /// nothing was counted.
    pub fraction: f64,
    pub n_counted: usize,
    pub n_inside: usize,
    /// Blocks skipped because their marginal is singular.
    pub excluded_blocks: Vec<usize>,
}

impl PairCoverage {
    pub fn n_excluded(&self) -> usize {
        self.excluded_blocks.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageReport {
    pub entries: Vec<PairCoverage>,
}

impl CoverageReport {
    pub fn get(&self, pair: AxisPair, level: f64) -> Option<&PairCoverage> {
        self.entries.iter().find(|e| e.pair == pair && e.level == level)
    }
}

/// Fraction of actual errors inside their block's ellipse, per pair and
/// level. `boundaries` are cumulative block ends; `errors[t]` belongs to the
/// block whose range contains `t`.
pub fn coverage(
    sigma: &[SymMatrix],
    boundaries: &[usize],
    errors: &[State],
    pairs: &[AxisPair],
    levels: &[f64],
) -> Result<CoverageReport, QuantifyError> {
    if sigma.len() != boundaries.len() {
        return Err(QuantifyError::LengthMismatch { what: "blocks", expected: sigma.len(), got: boundaries.len() });
    }
    let total = boundaries.last().copied().unwrap_or(0);
    if total != errors.len() || boundaries.windows(2).any(|w| w[1] <= w[0]) {
        return Err(QuantifyError::LengthMismatch { what: "error series", expected: total, got: errors.len() });
    }
    let quantiles = levels.iter().map(|&l| chi2_2_quantile(l)).collect::<Result<Vec<_>, _>>()?;

    let mut entries = Vec::with_capacity(pairs.len() * levels.len());
    for &pair in pairs {
        let mut counted = 0;
        let mut inside = alloc::vec![0usize; levels.len()];
        let mut excluded = Vec::new();
        let mut start = 0;
        for (b, (s, &end)) in sigma.iter().zip(boundaries).enumerate() {
            let marginal = pair.marginal(s)?;
            match check_marginal(&marginal) {
                Ok(eig) => {
                    let inv = eig.map(|l| 1.0 / l);
                    for e in &errors[start..end] {
                        let r = inv.quadratic_form(&pair.project(e));
                        for (slot, q) in inside.iter_mut().zip(&quantiles) {
                            if r <= *q {
                                *slot += 1;
                            }
                        }
                    }
                    counted += end - start;
                }
                Err(QuantifyError::SingularMarginal { .. }) => excluded.push(b),
                Err(e) => return Err(e),
            }
            start = end;
        }
        for (&level, n_inside) in levels.iter().zip(inside) {
            let fraction = if counted == 0 { 0.0 } else { n_inside as f64 / counted as f64 };
            entries.push(PairCoverage {
                pair,
                level,
                fraction,
                n_counted: counted,
                n_inside,
                excluded_blocks: excluded.clone(),
            });
        }
    }
    Ok(CoverageReport { entries })
}
