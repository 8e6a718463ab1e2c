use serde::{Deserialize, Serialize};

use super::{lp_solve, LpError, LpProblem, LpSolution, LpStatus};
use crate::scalar::{compensated_sum, Scalar};

/// Sparse coupling: atoms `(x-cell, y-cell, mass)` and the value of the
/// objective it was solved for.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransportPlan<X, Y, T = f64> {
    pub atoms: Vec<(X, Y, T)>,
    pub value: T,
}

impl<X: PartialEq, Y: PartialEq, T: Scalar> TransportPlan<X, Y, T> {
    pub fn mass_at(&self, x: &X, y: &Y) -> T {
        compensated_sum(self.atoms.iter().filter(|(a, b, _)| a == x && b == y).map(|(_, _, m)| *m))
    }

    pub fn total_mass(&self) -> T {
        compensated_sum(self.atoms.iter().map(|(_, _, m)| *m))
    }
}

/// Classical transport between two finite measures.
#[derive(Clone, Debug)]
pub struct ClassicalOt<T> {
    /// Atoms indexed by position in `mu` and `nu`.
    pub plan: TransportPlan<usize, usize, T>,
    /// Row potentials (one per `mu` atom) and column potentials.
    pub u: Vec<T>,
    pub v: Vec<T>,
    pub lp: LpSolution<T>,
}

/// Assembles the Monge–Kantorovich LP: variables `π(i,j)` in row-major
/// order, row sums `= mu`, column sums `= nu`.
pub fn transport_lp<T: Scalar>(mu: &[T], nu: &[T], cost: &[Vec<T>]) -> Result<LpProblem<T>, LpError> {
    let (m, n) = (mu.len(), nu.len());
    if m == 0 || n == 0 || cost.len() != m || cost.iter().any(|r| r.len() != n) {
        return Err(LpError::DimensionMismatch(format!("cost must be {m} x {n}")));
    }
    let mut p = LpProblem::new(mu.iter().chain(nu).copied().collect());
    for (i, row) in cost.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            p.add_column(c, vec![(i, T::one()), (m + j, T::one())]);
        }
    }
    Ok(p)
}

/// Minimum-cost coupling of `mu` and `nu` at a vertex of the transport
/// polytope. Negate `cost` for a maximizing plan.
pub fn classical_ot<T: Scalar>(mu: &[T], nu: &[T], cost: &[Vec<T>]) -> Result<ClassicalOt<T>, LpError> {
    let p = transport_lp(mu, nu, cost)?;
    let lp = lp_solve(&p)?;
    if lp.status != LpStatus::Optimal {
        // Marginals with unequal mass.
        return Err(LpError::DimensionMismatch(format!("transport LP is {}", lp.status.as_str())));
    }
    let n = nu.len();
    let atoms = lp
        .primal
        .iter()
        .enumerate()
        .filter(|(_, &x)| x > T::zero())
        .map(|(k, &x)| (k / n, k % n, x))
        .collect();
    let (u, v) = lp.dual.split_at(mu.len());
    Ok(ClassicalOt {
        plan: TransportPlan { atoms, value: lp.objective },
        u: u.to_vec(),
        v: v.to_vec(),
        lp: lp.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dirac_source_is_forced() {
        let ot = classical_ot::<f64>(&[1.0], &[0.2, 0.3, 0.5], &[vec![4.0, 1.0, 2.0]]).unwrap();
        assert_eq!(ot.plan.atoms, vec![(0, 0, 0.2), (0, 1, 0.3), (0, 2, 0.5)]);
        assert!((ot.plan.value - 2.1).abs() < 1e-12);
    }

    #[test]
    fn anti_diagonal_cost() {
        let ot = classical_ot(&[0.5, 0.5], &[0.5, 0.5], &[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert_eq!(ot.plan.atoms, vec![(0, 0, 0.5), (1, 1, 0.5)]);
        assert_eq!(ot.plan.value, 0.0);
    }

    #[test]
    fn unequal_mass_is_rejected() {
        assert!(classical_ot(&[1.0], &[0.5], &[vec![0.0]]).is_err());
        assert!(classical_ot(&[1.0], &[1.0], &[vec![0.0, 1.0]]).is_err());
    }

    #[test]
    fn vertex_support_bound() {
        let mu = [0.1, 0.2, 0.3, 0.4];
        let nu = [0.25, 0.25, 0.5];
        let cost: Vec<Vec<f64>> = (0..4).map(|i| (0..3).map(|j| ((i * 7 + j * 3) % 5) as f64).collect()).collect();
        let ot = classical_ot(&mu, &nu, &cost).unwrap();
        assert!(ot.plan.atoms.len() <= mu.len() + nu.len() - 1);
        for (i, &m) in mu.iter().enumerate() {
            let row: f64 = ot.plan.atoms.iter().filter(|a| a.0 == i).map(|a| a.2).sum();
            assert!((row - m).abs() < 1e-12);
        }
    }
}
