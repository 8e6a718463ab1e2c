//! Linear programming in standard equality form
//! `min c·x  s.t.  A x = b, x ≥ 0`, solved by a two-phase revised simplex
//! with a dense basis inverse and Bland's rule, plus the classical
//! finite-support transport problem and an optimal-face probe.

mod face;
mod ot;
mod simplex;

use thiserror::Error;

use crate::scalar::Scalar;

pub use face::{optimal_face_probe, UniquenessReport};
pub use ot::{classical_ot, transport_lp, ClassicalOt, TransportPlan};
pub use simplex::lp_solve;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("non-finite input data")]
    NonFinite,
    #[error("numerical failure during {stage}: residual {residual:e}")]
    NumericalFailure { stage: &'static str, residual: f64 },
}

/// Sparse column: `(row, coefficient)` pairs.
pub type Column<T> = Vec<(usize, T)>;

/// `min c·x  s.t.  A x = b, x ≥ 0`, stored by columns.
#[derive(Clone, Debug, PartialEq)]
pub struct LpProblem<T> {
    rows: usize,
    objective: Vec<T>,
    columns: Vec<Column<T>>,
    rhs: Vec<T>,
}

impl<T: Scalar> LpProblem<T> {
    /// Empty problem with the given right-hand side.
    pub fn new(rhs: Vec<T>) -> Self {
        LpProblem { rows: rhs.len(), objective: Vec::new(), columns: Vec::new(), rhs }
    }

    /// Appends a variable; returns its index.
    pub fn add_column(&mut self, cost: T, entries: Column<T>) -> usize {
        self.objective.push(cost);
        self.columns.push(entries);
        self.columns.len() - 1
    }

    pub fn from_dense(a: &[Vec<T>], b: &[T], c: &[T]) -> Result<Self, LpError> {
        if a.len() != b.len() || a.iter().any(|row| row.len() != c.len()) {
            return Err(LpError::DimensionMismatch(format!(
                "A is {}x?, b has {}, c has {}",
                a.len(),
                b.len(),
                c.len()
            )));
        }
        let mut p = LpProblem::new(b.to_vec());
        for (j, &cj) in c.iter().enumerate() {
            let col = a
                .iter()
                .enumerate()
                .filter(|(_, row)| row[j] != T::zero())
                .map(|(i, row)| (i, row[j]))
                .collect();
            p.add_column(cj, col);
        }
        Ok(p)
    }

    pub fn num_rows(&self) -> usize {
        self.rows
    }

    pub fn num_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn objective(&self) -> &[T] {
        &self.objective
    }

    pub fn column(&self, j: usize) -> &[(usize, T)] {
        &self.columns[j]
    }

    pub fn rhs(&self) -> &[T] {
        &self.rhs
    }

    pub fn set_objective(&mut self, objective: Vec<T>) -> Result<(), LpError> {
        if objective.len() != self.columns.len() {
            return Err(LpError::DimensionMismatch("objective length".into()));
        }
        self.objective = objective;
        Ok(())
    }

    /// Appends the equality row `Σ coeffs[j] x_j = rhs`.
    pub fn push_row(&mut self, coeffs: &[T], rhs: T) -> Result<(), LpError> {
        if coeffs.len() != self.columns.len() {
            return Err(LpError::DimensionMismatch("row length".into()));
        }
        let r = self.rows;
        for (col, &a) in self.columns.iter_mut().zip(coeffs) {
            if a != T::zero() {
                col.push((r, a));
            }
        }
        self.rows += 1;
        self.rhs.push(rhs);
        Ok(())
    }

    /// `A x`.
    pub fn apply(&self, x: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.rows];
        for (col, &xj) in self.columns.iter().zip(x) {
            if xj != T::zero() {
                for &(r, a) in col {
                    out[r] = out[r] + a * xj;
                }
            }
        }
        out
    }

    /// `c_j − yᵀ A_j` for every column.
    pub fn reduced_costs(&self, y: &[T]) -> Vec<T> {
        self.columns
            .iter()
            .zip(&self.objective)
            .map(|(col, &c)| col.iter().fold(c, |acc, &(r, a)| acc - y[r] * a))
            .collect()
    }

    pub(crate) fn check(&self) -> Result<(), LpError> {
        let finite = self.objective.iter().chain(&self.rhs).all(|v| v.is_finite())
            && self.columns.iter().flatten().all(|(_, a)| a.is_finite());
        if !finite {
            return Err(LpError::NonFinite);
        }
        if self.columns.iter().flatten().any(|&(r, _)| r >= self.rows) {
            return Err(LpError::DimensionMismatch("column entry beyond the last row".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

impl LpStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            LpStatus::Optimal => "optimal",
            LpStatus::Infeasible => "infeasible",
            LpStatus::Unbounded => "unbounded",
        }
    }
}

/// Post-solve residuals of an optimal solution.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Residuals<T> {
    /// `max |A x − b|`, including negativity of `x`.
    pub primal: T,
    /// `max(0, −min_j reduced cost)`.
    pub dual: T,
    /// `max_j |x_j · reduced cost_j|`.
    pub slackness: T,
    /// `|c·x − b·y|`.
    pub gap: T,
}

impl<T: Scalar> Residuals<T> {
    pub fn worst(&self) -> T {
        self.primal.max(self.dual).max(self.slackness).max(self.gap)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution<T> {
    pub status: LpStatus,
    pub primal: Vec<T>,
    /// One free multiplier per equality row (`yᵀ A ≤ c`).
    pub dual: Vec<T>,
    pub objective: T,
    /// Structural columns in the final basis, in row order.
    pub basis: Vec<usize>,
    pub iterations: usize,
    pub residuals: Residuals<T>,
}

impl<T: Scalar> LpSolution<T> {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }

    /// `bᵀ y`.
    pub fn dual_objective(&self, problem: &LpProblem<T>) -> T {
        problem.rhs().iter().zip(&self.dual).fold(T::zero(), |acc, (&b, &y)| acc + b * y)
    }
}
