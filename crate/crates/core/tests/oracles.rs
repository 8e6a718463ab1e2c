//! Solver outputs against independent brute-force oracles.

mod common;

use common::*;
use et_core::lp::{classical_ot, lp_solve, LpProblem, LpStatus};
use et_core::shift::{enumerate_fix, enumerate_fix_fast, PeriodMode, DEFAULT_ENUM_CAP};
use et_core::transport::{eo_min, solve_p1};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn orbit_counts_match_burnside() {
    for (n, d) in [(1, 2u8), (4, 2), (6, 2), (12, 2), (4, 3), (6, 3)] {
        let orbits = enumerate_fix(n, d, PeriodMode::Dividing, DEFAULT_ENUM_CAP).unwrap();
        assert_eq!(orbits.len() as u64, necklaces(n, d as u64), "n={n} d={d}");
        let points: usize = orbits.iter().map(|o| o.period()).sum();
        assert_eq!(points, (d as usize).pow(n as u32));
        assert_eq!(orbits, enumerate_fix_fast(n, d, PeriodMode::Dividing).unwrap());
    }
    assert_eq!(enumerate_fix(12, 2, PeriodMode::Dividing, DEFAULT_ENUM_CAP).unwrap().len(), 352);
}

#[test]
fn exact_periods_partition_the_dividing_set() {
    for n in 1..=10 {
        let exact: usize = (1..=n)
            .filter(|p| n % p == 0)
            .map(|p| enumerate_fix(p, 2, PeriodMode::Exact, DEFAULT_ENUM_CAP).unwrap().len())
            .sum();
        assert_eq!(exact, enumerate_fix(n, 2, PeriodMode::Dividing, DEFAULT_ENUM_CAP).unwrap().len());
    }
}

#[test]
fn random_lps_match_vertex_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for case in 0..150 {
        let m = rng.gen_range(1..=4);
        let n = rng.gen_range(m..=8);
        let a: Vec<Vec<f64>> = (0..m).map(|_| (0..n).map(|_| rng.gen_range(-1.0..2.0)).collect()).collect();
        let x0: Vec<f64> = (0..n).map(|_| if rng.gen_bool(0.6) { rng.gen_range(0.0..1.0) } else { 0.0 }).collect();
        let b: Vec<f64> = a.iter().map(|r| r.iter().zip(&x0).map(|(u, v)| u * v).sum()).collect();
        let c: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..3.0)).collect();
        let s = lp_solve(&LpProblem::from_dense(&a, &b, &c).unwrap()).unwrap();
        let oracle = basis_oracle(&a, &b, &c).expect("x0 is feasible, so some vertex is");
        assert_eq!(s.status, LpStatus::Optimal, "case {case}");
        assert!((s.objective - oracle).abs() <= 1e-9, "case {case}: {} vs {oracle}", s.objective);
    }
}

#[test]
fn transport_lps_match_vertex_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for case in 0..60 {
        let (m, n) = (rng.gen_range(1..=3), rng.gen_range(1..=4));
        let raw = |k: usize, rng: &mut ChaCha8Rng| -> Vec<f64> {
            let w: Vec<f64> = (0..k).map(|_| rng.gen_range(1..=6) as f64).collect();
            let t: f64 = w.iter().sum();
            w.iter().map(|x| x / t).collect()
        };
        let (mu, nu) = (raw(m, &mut rng), raw(n, &mut rng));
        let cost: Vec<Vec<f64>> = (0..m).map(|_| (0..n).map(|_| rng.gen_range(0.0..1.0)).collect()).collect();
        let flat: Vec<f64> = cost.iter().flatten().copied().collect();
        let b: Vec<f64> = mu.iter().chain(&nu).copied().collect();
        let oracle = basis_oracle(&transport_matrix(m, n), &b, &flat).unwrap();
        let ot = classical_ot(&mu, &nu, &cost).unwrap();
        assert!((ot.plan.value - oracle).abs() <= 1e-9, "case {case}");
    }
}

#[test]
fn uniform_square_transport_matches_permutations() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for n in 1..=6 {
        let cost: Vec<Vec<f64>> = (0..n).map(|_| (0..n).map(|_| rng.gen_range(0.0..1.0)).collect()).collect();
        let u = vec![1.0 / n as f64; n];
        let ot = classical_ot(&u, &u, &cost).unwrap();
        assert!((ot.plan.value - permutation_oracle(&cost)).abs() <= 1e-9, "n={n}");
    }
}

#[test]
fn dirac_marginal_reduces_to_ergodic_minimum() {
    let eo = eo_min(&example_cost_y_only(), &Default::default(), 2, 8, DEFAULT_ENUM_CAP).unwrap();
    for k in 2..=7 {
        let s = solve_p1(&dirac_p1(k)).unwrap();
        assert!(s.bracket.lo <= eo.value + 1e-9, "k={k}");
        assert!((s.bracket.lo - 0.25).abs() <= 1e-9 && (s.bracket.hi - 0.25).abs() <= 1e-9, "k={k}");
    }
    assert_eq!(eo.value, 0.25);
}

fn example_cost_y_only() -> et_core::CostSpec {
    et_core::CostSpec::SqDistToPoints { anchors: vec![("x0".into(), pt("|01"))] }
}
