//! Sparse linear solves: Jacobi-preconditioned conjugate gradients for the
//! symmetric systems (pressure, mass matrices, dual norms), BiCGStab for the
//! nonsymmetric transport matrices, and a dense LU used as a test oracle.

pub mod dense;
mod krylov;

use thiserror::Error;

use crate::operators::SparseOperator;

pub use krylov::{solve_nonsymmetric, solve_spd, solve_spd_semidefinite};

/// Largest system accepted by [`SolverMethod::Direct`].
pub const DIRECT_MAX_DIM: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Deserialize, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverMethod {
    SymmetricIterative,
    NonsymmetricIterative,
    Direct,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub rel_tolerance: f64,
    pub abs_tolerance: f64,
    /// Defaults to `10 n` when `None`.
    pub max_iterations: Option<usize>,
    pub method: SolverMethod,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            rel_tolerance: 1e-10,
            abs_tolerance: 1e-14,
            max_iterations: None,
            method: SolverMethod::SymmetricIterative,
        }
    }
}

impl SolverConfig {
    pub fn symmetric() -> Self {
        Self::default()
    }

    pub fn nonsymmetric() -> Self {
        SolverConfig {
            method: SolverMethod::NonsymmetricIterative,
            ..Self::default()
        }
    }

    pub fn direct() -> Self {
        SolverConfig {
            method: SolverMethod::Direct,
            ..Self::default()
        }
    }

    pub fn with_rel_tolerance(mut self, tol: f64) -> Self {
        self.rel_tolerance = tol;
        self
    }

    pub(crate) fn iteration_cap(&self, n: usize) -> usize {
        self.max_iterations.unwrap_or(10 * n.max(1))
    }

    pub(crate) fn validate(&self) -> Result<(), SolveError> {
        if self.rel_tolerance > 0.0 && self.abs_tolerance > 0.0 {
            Ok(())
        } else {
            Err(SolveError::InvalidConfig)
        }
    }
}

/// Outcome of a solve. `relative_residual` is always recomputed as
/// `|A x - b| / |b|` from the returned iterate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    pub relative_residual: f64,
    pub converged: bool,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("dimension mismatch: matrix is {rows}x{cols}, right-hand side has {rhs}")]
    DimensionMismatch { rows: usize, cols: usize, rhs: usize },
    #[error("iterative solver broke down after {iterations} iterations")]
    Breakdown { iterations: usize },
    #[error("non-finite value in right-hand side")]
    NonFinite,
    #[error("matrix is singular to working precision")]
    Singular,
    #[error("system of dimension {0} is too large for the dense direct solver")]
    TooLargeForDirect(usize),
    #[error("solver tolerances must be positive")]
    InvalidConfig,
}

/// Dispatches on `config.method`.
pub fn solve(a: &SparseOperator, b: &[f64], config: &SolverConfig) -> Result<(Vec<f64>, SolveReport), SolveError> {
    match config.method {
        SolverMethod::SymmetricIterative => solve_spd(a, b, config),
        SolverMethod::NonsymmetricIterative => solve_nonsymmetric(a, b, config),
        SolverMethod::Direct => solve_direct(a, b),
    }
}

pub fn solve_direct(a: &SparseOperator, b: &[f64]) -> Result<(Vec<f64>, SolveReport), SolveError> {
    check_dims(a, b)?;
    if a.nrows() > DIRECT_MAX_DIM {
        return Err(SolveError::TooLargeForDirect(a.nrows()));
    }
    let x = dense::lu_solve(&a.to_dense(), b)?;
    let relative_residual = relative_residual(a, &x, b);
    Ok((
        x,
        SolveReport {
            iterations: 1,
            relative_residual,
            converged: true,
        },
    ))
}

pub(crate) fn check_dims(a: &SparseOperator, b: &[f64]) -> Result<(), SolveError> {
    if a.nrows() != a.ncols() || a.nrows() != b.len() {
        return Err(SolveError::DimensionMismatch {
            rows: a.nrows(),
            cols: a.ncols(),
            rhs: b.len(),
        });
    }
    if b.iter().any(|v| !v.is_finite()) {
        return Err(SolveError::NonFinite);
    }
    Ok(())
}

pub(crate) fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub(crate) fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// `|A x - b| / |b|`, or `|A x|` when `b = 0`.
pub fn relative_residual(a: &SparseOperator, x: &[f64], b: &[f64]) -> f64 {
    let ax = a.apply(x);
    let r: Vec<f64> = ax.iter().zip(b).map(|(p, q)| p - q).collect();
    let nb = norm(b);
    if nb > 0.0 {
        norm(&r) / nb
    } else {
        norm(&r)
    }
}
