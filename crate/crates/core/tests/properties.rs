//! Structural properties of solved instances on random costs.

mod common;

use common::*;
use et_core::measures::CylinderMeasure;
use et_core::shift::Metric;
use et_core::transport::{
    certify_slackness, lax_oleinik_refine, lipschitz_violation, solve_p1, solve_p2, P1Instance, P2Instance,
    REFINE_TOL,
};
use et_core::zeta::{ZetaParams, ZetaTable};
use et_core::{CostSpec, TableAxis, XMarginal};
use proptest::prelude::*;

fn table_instance(rows: Vec<Vec<f64>>, weights: Vec<f64>, depth: usize) -> P1Instance {
    let total: f64 = weights.iter().sum();
    let names: Vec<String> = (0..rows.len()).map(|i| format!("r{i}")).collect();
    let mu: Vec<(&str, f64)> = names.iter().zip(&weights).map(|(n, w)| (n.as_str(), w / total)).collect();
    P1Instance { alphabet: 2, metric: Metric::default(), mu: labels(&mu), cost: label_table(rows, 3), depth }
}

fn arb_table() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<f64>)> {
    (1usize..=3).prop_flat_map(|r| {
        (
            prop::collection::vec(prop::collection::vec(0.0f64..1.0, 8), r),
            prop::collection::vec(1.0f64..5.0, r),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn p1_duality_and_certificates((rows, weights) in arb_table(), depth in 3usize..=5) {
        let s = solve_p1(&table_instance(rows, weights, depth)).unwrap();
        let g = &s.grid;
        prop_assert!(s.bracket.lo <= s.bracket.hi + 1e-12);
        prop_assert!(g.dual_objective(&s.dual) <= s.bracket.lo + 1e-9);
        prop_assert!((g.dual_objective(&s.dual) - s.bracket.lo).abs() <= 1e-9);
        prop_assert!(certify_slackness(g, &s.bracket.plan_lo, &s.dual, 1e-9).unwrap().is_certified());
        let xm = g.x_marginal(&s.bracket.plan_lo).unwrap();
        for (a, b) in xm.iter().zip(g.mu()) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
        let ym = CylinderMeasure::new(depth, 2, g.y_marginal(&s.bracket.plan_lo).unwrap()).unwrap();
        prop_assert!(ym.stationarity_residual() <= 1e-9);
    }

    #[test]
    fn refinement_is_calibrated((rows, weights) in arb_table()) {
        let s = solve_p1(&table_instance(rows, weights, 4)).unwrap();
        let r = lax_oleinik_refine(&s.grid, &s.dual, None).unwrap();
        prop_assert!(r.residual <= REFINE_TOL);
        prop_assert!(s.grid.admissibility_violation(&r.dual).unwrap() <= 1e-9);
        prop_assert!(lipschitz_violation(&s.grid, &r.dual).unwrap() <= 1e-9);
        prop_assert!((s.grid.dual_objective(&r.dual) - s.bracket.lo).abs() <= 1e-9);
    }

    #[test]
    fn zeta_value_is_monotone_in_beta(rows in prop::collection::vec(prop::collection::vec(0.1f64..1.0, 8), 2)) {
        let mu = et_core::FiniteMeasure::new(vec![
            (et_core::XAtom::Label("r0".into()), 0.5),
            (et_core::XAtom::Label("r1".into()), 0.5),
        ]).unwrap();
        let cost = label_table(rows, 3);
        let table = ZetaTable::p1(&mu, &cost, &Metric::default(), 2, &ZetaParams::new(0.0, 4)).unwrap();
        let mut prev = f64::NEG_INFINITY;
        for beta in [0.0, 0.5, 2.0, 10.0, 100.0, 1000.0] {
            let v = table.gibbs(beta, 3).unwrap().value;
            prop_assert!(v >= prev - 1e-12);
            prop_assert!(v <= table.max_integral() + 1e-12);
            prev = v;
        }
    }
}

#[test]
fn brackets_shrink_with_depth_on_a_distance_cost() {
    let inst = |k| P2Instance { alphabet: 2, metric: Metric::default(), cost: CostSpec::PairSqDist, kx: k, ky: k };
    let mut prev: Option<(f64, f64)> = None;
    for k in 2..=5 {
        let s = solve_p2(&inst(k)).unwrap();
        let (lo, hi) = (s.bracket.lo, s.bracket.hi);
        assert!(hi - lo <= 2.0 * s.grid.lipschitz() * 0.5f64.powi(k as i32 - 1) + 1e-9, "k={k}");
        if let Some((plo, phi)) = prev {
            assert!(lo >= plo - 1e-9 && hi <= phi + 1e-9, "k={k}");
        }
        // The diagonal measure on any fixed point has zero cost.
        assert!(lo.abs() <= 1e-12);
        prev = Some((lo, hi));
    }
}

#[test]
fn cylinder_marginal_matches_label_marginal() {
    // Splitting each label into eight equal x-cylinders with the same cost
    // row leaves the value unchanged.
    let rows = vec![vec![0.3, 0.9, 0.1, 0.5, 0.7, 0.2, 0.8, 0.4], vec![0.6, 0.2, 0.9, 0.1, 0.3, 0.8, 0.5, 0.7]];
    let by_label = solve_p1(&table_instance(rows.clone(), vec![1.0, 1.0], 4)).unwrap();
    let by_cyl = solve_p1(&P1Instance {
        alphabet: 2,
        metric: Metric::default(),
        mu: XMarginal::Cylinders(CylinderMeasure::uniform(4, 2)),
        cost: CostSpec::Table { x: TableAxis::Depth(1), y_depth: 3, values: rows },
        depth: 4,
    })
    .unwrap();
    assert!((by_label.bracket.lo - by_cyl.bracket.lo).abs() <= 1e-12);
    assert!((by_label.bracket.hi - by_cyl.bracket.hi).abs() <= 1e-12);
}
