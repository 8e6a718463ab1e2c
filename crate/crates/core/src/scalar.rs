use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive};

/// Floating point type the LP layer is written against (f32 or f64).
///
/// The tolerance ladder scales with the precision of the type: the `target`
/// tolerance is what a clean solve is expected to reach, `hard` is where a
/// solve is declared a numerical failure.
pub trait Scalar: Float + FromPrimitive + Debug + Display + Default + Send + Sync + 'static {
    /// Pivot elements below this magnitude are treated as zero.
    fn pivot_tol() -> Self;
    /// Reduced costs above `-rc_tol` count as non-negative.
    fn rc_tol() -> Self;
    /// Residual target after iterative refinement.
    fn target_tol() -> Self;
    /// Residuals above this abort the solve.
    fn hard_tol() -> Self;

    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("finite constant")
    }
}

impl Scalar for f64 {
    fn pivot_tol() -> Self {
        1e-7
    }
    fn rc_tol() -> Self {
        1e-11
    }
    fn target_tol() -> Self {
        1e-9
    }
    fn hard_tol() -> Self {
        1e-6
    }
}

impl Scalar for f32 {
    fn pivot_tol() -> Self {
        1e-5
    }
    fn rc_tol() -> Self {
        1e-5
    }
    fn target_tol() -> Self {
        1e-4
    }
    fn hard_tol() -> Self {
        1e-2
    }
}

/// Neumaier compensated sum.
pub fn compensated_sum<T: Scalar>(values: impl IntoIterator<Item = T>) -> T {
    let mut sum = T::zero();
    let mut comp = T::zero();
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp = comp + ((sum - t) + v);
        } else {
            comp = comp + ((v - t) + sum);
        }
        sum = t;
    }
    sum + comp
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_cancelled_terms() {
        let v = [1.0f64, 1e100, 1.0, -1e100];
        assert_eq!(compensated_sum(v), 2.0);
        assert_eq!(compensated_sum::<f32>([0.1f32; 10]), 1.0);
    }
}
