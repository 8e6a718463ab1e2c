//! Instance builders and independent oracles shared by the integration tests.
#![allow(dead_code)]

use et_core::cost::{CostSpec, TableAxis, XAtom};
use et_core::measures::FiniteMeasure;
use et_core::shift::{EvPoint, Metric};
use et_core::transport::{P1Instance, P2Instance, XMarginal};

pub fn pt(s: &str) -> EvPoint {
    EvPoint::parse(s, 2).unwrap()
}

/// Two labels, `c(x0, y) = d(y, (01)^∞)²`, `c(x1, y) = d(y, (10)^∞)²`.
pub fn example_cost() -> CostSpec {
    CostSpec::SqDistToPoints { anchors: vec![("x0".into(), pt("|01")), ("x1".into(), pt("|10"))] }
}

pub fn labels(mu: &[(&str, f64)]) -> XMarginal {
    XMarginal::Labels(FiniteMeasure::new(mu.iter().map(|(l, m)| (l.to_string(), *m)).collect()).unwrap())
}

pub fn example_p1(depth: usize) -> P1Instance {
    P1Instance {
        alphabet: 2,
        metric: Metric::default(),
        mu: labels(&[("x0", 0.5), ("x1", 0.5)]),
        cost: example_cost(),
        depth,
    }
}

pub fn dirac_p1(depth: usize) -> P1Instance {
    P1Instance {
        alphabet: 2,
        metric: Metric::default(),
        mu: labels(&[("x0", 1.0)]),
        cost: CostSpec::SqDistToPoints { anchors: vec![("x0".into(), pt("|01"))] },
        depth,
    }
}

/// The period-2 / period-3 contact points `(x0,y0), (x1,y1), (x0,y2), (x1,y2)`.
pub fn contact_points() -> Vec<(EvPoint, EvPoint)> {
    let (x0, x1) = (pt("|01"), pt("|10"));
    let (y0, y1, y2) = (pt("|001"), pt("|010"), pt("|100"));
    vec![(x0.clone(), y0), (x1.clone(), y1), (x0, y2.clone()), (x1, y2)]
}

pub fn contact_p2(depth: usize) -> P2Instance {
    P2Instance {
        alphabet: 2,
        metric: Metric::default(),
        cost: CostSpec::MinSumSq { contacts: contact_points() },
        kx: depth,
        ky: depth,
    }
}

pub fn example_zeta_mu() -> FiniteMeasure<XAtom> {
    FiniteMeasure::new(vec![(XAtom::Label("x0".into()), 0.5), (XAtom::Label("x1".into()), 0.5)]).unwrap()
}

/// `2 − c` for the two-label example cost.
pub fn flipped_example_cost() -> CostSpec {
    example_cost().affine(-1.0, 2.0)
}

pub fn label_table(rows: Vec<Vec<f64>>, y_depth: usize) -> CostSpec {
    let names = (0..rows.len()).map(|i| format!("r{i}")).collect();
    CostSpec::Table { x: TableAxis::Labels(names), y_depth, values: rows }
}

/// Minimum of `Σ_i C[i][π(i)] / n` over all permutations (uniform square
/// marginals, whose transport polytope has the permutation matrices as
/// vertices).
pub fn permutation_oracle(c: &[Vec<f64>]) -> f64 {
    let n = c.len();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best = f64::INFINITY;
    permute(&mut perm, 0, &mut |p| {
        let v: f64 = p.iter().enumerate().map(|(i, &j)| c[i][j]).sum::<f64>() / n as f64;
        best = best.min(v);
    });
    best
}

fn permute(p: &mut Vec<usize>, k: usize, f: &mut dyn FnMut(&[usize])) {
    if k == p.len() {
        f(p);
        return;
    }
    for i in k..p.len() {
        p.swap(k, i);
        permute(p, k + 1, f);
        p.swap(k, i);
    }
}

/// Minimum of `c·x` over all basic feasible solutions of `A x = b, x ≥ 0`
/// (dense), by enumerating every column subset of size `rank`.
pub fn basis_oracle(a: &[Vec<f64>], b: &[f64], c: &[f64]) -> Option<f64> {
    let (rows, rank) = independent_rows(a);
    let a: Vec<Vec<f64>> = rows.iter().map(|&r| a[r].clone()).collect();
    let b: Vec<f64> = rows.iter().map(|&r| b[r]).collect();
    let n = c.len();
    let mut best: Option<f64> = None;
    let mut subset: Vec<usize> = (0..rank).collect();
    loop {
        if let Some(x) = solve_square(&a, &b, &subset) {
            if x.iter().all(|&v| v >= -1e-12) {
                let v: f64 = subset.iter().zip(&x).map(|(&j, &xj)| c[j] * xj).sum();
                best = Some(best.map_or(v, |b: f64| b.min(v)));
            }
        }
        // Next combination in lexicographic order.
        let mut i = rank;
        loop {
            if i == 0 {
                return best;
            }
            i -= 1;
            if subset[i] < n - rank + i {
                subset[i] += 1;
                for k in i + 1..rank {
                    subset[k] = subset[k - 1] + 1;
                }
                break;
            }
        }
    }
}

fn independent_rows(a: &[Vec<f64>]) -> (Vec<usize>, usize) {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut keep = Vec::new();
    for (r, row) in a.iter().enumerate() {
        let mut v = row.clone();
        for q in &basis {
            let p = q.iter().position(|x| x.abs() > 1e-12).unwrap();
            let f = v[p] / q[p];
            v.iter_mut().zip(q).for_each(|(x, y)| *x -= f * y);
        }
        if v.iter().any(|x| x.abs() > 1e-9) {
            basis.push(v);
            keep.push(r);
        }
    }
    let rank = keep.len();
    (keep, rank)
}

fn solve_square(a: &[Vec<f64>], b: &[f64], cols: &[usize]) -> Option<Vec<f64>> {
    let m = cols.len();
    let mut t: Vec<Vec<f64>> = (0..m).map(|r| cols.iter().map(|&j| a[r][j]).chain([b[r]]).collect()).collect();
    for k in 0..m {
        let p = (k..m).max_by(|&i, &j| t[i][k].abs().partial_cmp(&t[j][k].abs()).unwrap())?;
        if t[p][k].abs() < 1e-10 {
            return None;
        }
        t.swap(k, p);
        for i in 0..m {
            if i != k {
                let f = t[i][k] / t[k][k];
                for j in k..=m {
                    t[i][j] -= f * t[k][j];
                }
            }
        }
    }
    Some((0..m).map(|i| t[i][m] / t[i][i]).collect())
}

/// Dense constraint matrix of the transport problem with row sums `mu` and
/// column sums `nu`, variables in row-major order.
pub fn transport_matrix(m: usize, n: usize) -> Vec<Vec<f64>> {
    let mut a = vec![vec![0.0; m * n]; m + n];
    for i in 0..m {
        for j in 0..n {
            a[i][i * n + j] = 1.0;
            a[m + j][i * n + j] = 1.0;
        }
    }
    a
}

/// Number of binary necklaces of length dividing `n`: `(1/n) Σ_{d|n} φ(d) 2^{n/d}`.
pub fn necklaces(n: usize, alphabet: u64) -> u64 {
    let phi = |k: usize| (1..=k).filter(|&i| gcd(i, k) == 1).count() as u64;
    let total: u64 = (1..=n).filter(|d| n % d == 0).map(|d| phi(d) * alphabet.pow((n / d) as u32)).sum();
    total / n as u64
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}
