//! Ergodic-optimization reduction, Birkhoff-sum diagnostics, and shift
//! closure of plan supports.

use serde::{Deserialize, Serialize};

use crate::cost::{CostSpec, XAtom};
use crate::error::{Error, Result};
use crate::shift::{enumerate_fix, EvPoint, Metric, PeriodMode, PeriodicOrbit, Word};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EoResult {
    /// Smallest orbit average found.
    pub value: f64,
    pub orbit: PeriodicOrbit,
    pub orbits_checked: usize,
}

/// Minimum of the orbit averages of a `y`-only cost over all periodic
/// orbits of period at most `n_max`. Ties keep the shortest, then
/// lexicographically least, orbit.
pub fn eo_min(cost: &CostSpec, metric: &Metric, alphabet: u8, n_max: usize, cap: u128) -> Result<EoResult> {
    let x = cost.sole_x()?;
    cost.validate(alphabet)?;
    if n_max == 0 {
        return Err(Error::DimensionMismatch("n_max must be at least 1".into()));
    }
    let mut best: Option<(f64, PeriodicOrbit)> = None;
    let mut checked = 0;
    for n in 1..=n_max {
        for orbit in enumerate_fix(n, alphabet, PeriodMode::Exact, cap)? {
            checked += 1;
            let points = orbit.points();
            let mut sum = 0.0;
            for p in &points {
                sum += cost.eval_point(metric, &x, p)?;
            }
            let avg = sum / points.len() as f64;
            let better = match &best {
                None => true,
                Some((b, _)) => avg < b - 1e-14 * b.abs().max(1.0),
            };
            if better {
                best = Some((avg, orbit));
            }
        }
    }
    let (value, orbit) = best.expect("n_max ≥ 1 yields at least one orbit");
    Ok(EoResult { value, orbit, orbits_checked: checked })
}

/// All ordered pairs of points fixed by `σ^n` (period dividing `n`).
pub fn periodic_pairs(alphabet: u8, n: usize, cap: u128) -> Result<Vec<(EvPoint, EvPoint)>> {
    let points: Vec<EvPoint> =
        enumerate_fix(n, alphabet, PeriodMode::Dividing, cap)?.iter().flat_map(|o| o.points()).collect();
    Ok(points.iter().flat_map(|x| points.iter().map(move |y| (x.clone(), y.clone()))).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BirkhoffScan {
    /// `min` over samples and `1 ≤ n ≤ N` of `Σ_{i<n} c(σ^i x, σ^i y) − n α`.
    pub deficiency: f64,
    /// Sample index and `n` attaining the minimum.
    pub argmin: (usize, usize),
}

/// Scans Birkhoff sums of `c − α` along the pair shift.
pub fn birkhoff_deficiency_scan(
    cost: &CostSpec,
    metric: &Metric,
    alpha: f64,
    horizon: usize,
    samples: &[(EvPoint, EvPoint)],
) -> Result<BirkhoffScan> {
    if horizon == 0 || samples.is_empty() {
        return Err(Error::DimensionMismatch("need a positive horizon and at least one sample".into()));
    }
    let mut out = BirkhoffScan { deficiency: f64::INFINITY, argmin: (0, 0) };
    for (s, (x, y)) in samples.iter().enumerate() {
        let (mut x, mut y) = (x.clone(), y.clone());
        let mut sum = 0.0;
        for n in 1..=horizon {
            sum += cost.eval_point(metric, &XAtom::Point(x.clone()), &y)? - alpha;
            if sum < out.deficiency {
                out = BirkhoffScan { deficiency: sum, argmin: (s, n) };
            }
            x = x.shift();
            y = y.shift();
        }
    }
    Ok(out)
}

fn tail(w: &Word) -> &[u8] {
    &w.symbols()[1..]
}

fn head(w: &Word) -> &[u8] {
    &w.symbols()[..w.len() - 1]
}

fn follows(a: &(Word, Word), b: &(Word, Word)) -> bool {
    tail(&a.0) == head(&b.0) && tail(&a.1) == head(&b.1)
}

/// Atoms whose pair-shift image meets no atom of the support.
pub fn shift_closure_defects(support: &[(Word, Word)]) -> Vec<usize> {
    (0..support.len()).filter(|&i| !support.iter().any(|b| follows(&support[i], b))).collect()
}

/// Largest subset of cylinder pairs in which every pair has a successor and
/// a predecessor under the pair shift. Any shift-invariant probability
/// carried by the support lives on cells of this core, so an empty core
/// rules one out.
pub fn invariant_core(support: &[(Word, Word)]) -> Vec<(Word, Word)> {
    let mut alive = vec![true; support.len()];
    loop {
        let mut changed = false;
        for i in 0..support.len() {
            if !alive[i] {
                continue;
            }
            let live = |f: &dyn Fn(usize) -> bool| (0..support.len()).any(|j| alive[j] && f(j));
            let has_next = live(&|j| follows(&support[i], &support[j]));
            let has_prev = live(&|j| follows(&support[j], &support[i]));
            if !(has_next && has_prev) {
                alive[i] = false;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    support.iter().zip(&alive).filter(|(_, &a)| a).map(|(p, _)| p.clone()).collect()
}
