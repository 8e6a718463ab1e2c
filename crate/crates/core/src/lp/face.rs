use super::{lp_solve, LpProblem, LpSolution, LpStatus};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct UniquenessReport<T> {
    pub unique: bool,
    /// A second optimal vertex, when one was found.
    pub witness: Option<Vec<T>>,
    /// Nonbasic columns with zero reduced cost (the directions probed).
    pub free_columns: Vec<usize>,
}

/// Probes whether `solution` is the only optimum of `problem`.
///
/// By complementary slackness every optimal point vanishes on columns with
/// positive reduced cost under the optimal duals, so the optimal face is
/// `{x ≥ 0 : A x = b, x_j = 0 for rc_j > tol}`. On that face the nonbasic
/// zero-reduced-cost coordinates are maximized jointly (their sum); the
/// optimum is unique exactly when this maximum is zero, because the
/// nonbasic coordinates determine the basic ones.
pub fn optimal_face_probe<T: Scalar>(problem: &LpProblem<T>, solution: &LpSolution<T>) -> UniquenessReport<T> {
    assert_eq!(solution.status, LpStatus::Optimal, "face probe needs an optimal solution");
    let scale = problem.objective().iter().fold(T::one(), |a, &c| a.max(c.abs()));
    let tol = T::target_tol() * scale;
    let rc = problem.reduced_costs(&solution.dual);
    let on_face: Vec<usize> = (0..problem.num_cols()).filter(|&j| rc[j] <= tol).collect();
    let free_columns: Vec<usize> = on_face.iter().copied().filter(|j| !solution.basis.contains(j)).collect();
    if free_columns.is_empty() {
        return UniquenessReport { unique: true, witness: None, free_columns };
    }

    let mut face = LpProblem::new(problem.rhs().to_vec());
    for &j in &on_face {
        let cost = if free_columns.binary_search(&j).is_ok() { -T::one() } else { T::zero() };
        face.add_column(cost, problem.column(j).to_vec());
    }
    let expand = |x: &[T]| {
        let mut full = vec![T::zero(); problem.num_cols()];
        for (&j, &v) in on_face.iter().zip(x) {
            full[j] = v;
        }
        full
    };
    match lp_solve(&face) {
        Ok(s) if s.status == LpStatus::Optimal => {
            let spread = -s.objective;
            if spread > tol {
                UniquenessReport { unique: false, witness: Some(expand(&s.primal)), free_columns }
            } else {
                UniquenessReport { unique: true, witness: None, free_columns }
            }
        }
        Ok(s) if s.status == LpStatus::Unbounded => UniquenessReport { unique: false, witness: None, free_columns },
        // The face contains the given solution, so infeasibility or a failed
        // solve means the probe could not decide; report it conservatively.
        _ => UniquenessReport { unique: false, witness: None, free_columns },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::transport_lp;

    fn tlp(mu: &[f64], nu: &[f64], c: &[Vec<f64>]) -> LpProblem<f64> {
        transport_lp(mu, nu, c).unwrap()
    }
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_cost_has_many_optima() {
        let p = tlp(&[0.5, 0.5], &[0.5, 0.5], &[vec![0.0, 0.0], vec![0.0, 0.0]]);
        let s = lp_solve(&p).unwrap();
        let r = optimal_face_probe(&p, &s);
        assert!(!r.unique);
        let w = r.witness.unwrap();
        assert_ne!(w, s.primal);
        assert!(p.apply(&w).iter().zip(p.rhs()).all(|(a, b)| (a - b).abs() < 1e-12));
    }

    #[test]
    fn generic_perturbation_splits_ties() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for n in 2..=5 {
            let mu = vec![1.0 / n as f64; n];
            let cost: Vec<Vec<f64>> = (0..n).map(|_| (0..n).map(|_| 1e-3 * rng.gen_range(0.0..1.0)).collect()).collect();
            let p = tlp(&mu, &mu, &cost);
            let s = lp_solve(&p).unwrap();
            assert!(optimal_face_probe(&p, &s).unique, "n = {n}");
        }
    }

    #[test]
    fn strictly_better_diagonal_is_unique() {
        let p = tlp(&[0.5, 0.5], &[0.5, 0.5], &[vec![0.0, 1.0], vec![1.0, 0.0]]);
        let s = lp_solve(&p).unwrap();
        assert!(optimal_face_probe(&p, &s).unique);
    }
}
