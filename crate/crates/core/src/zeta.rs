//! Zeta-measure approximations: Gibbs-weighted mixtures of classical
//! maximizing plans between periodic-orbit measures.
//!
//! For `P1` the mixture runs over orbit measures `ν` of `σ^n`-fixed points,
//! each coupled with the fixed `μ`; for `P2` it runs over ordered pairs of
//! orbit measures. The weight of a plan `π` is proportional to
//! `exp(β · n · ∫c dπ)`. Every mixture component has shift-invariant orbit
//! marginals, so the mixture is admissible exactly, for every `β` and `n`.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cost::{CostSpec, XAtom, XCell};
use crate::error::{Error, Result};
use crate::lp::{classical_ot, TransportPlan};
use crate::measures::{flow_balance_residual, orbit_measure, FiniteMeasure};
use crate::scalar::compensated_sum;
use crate::shift::{cells, enumerate_fix, EvPoint, Metric, PeriodMode, PeriodicOrbit, Word, DEFAULT_ENUM_CAP};
use crate::transport::{solve_p1, solve_p2, P1Instance, P2Instance, ValueBracket, XMarginal};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZetaParams {
    pub beta: f64,
    pub n: usize,
    pub period_mode: PeriodMode,
    /// Cap on `d^n`.
    pub cap: u128,
}

impl ZetaParams {
    pub fn new(beta: f64, n: usize) -> Self {
        ZetaParams { beta, n, period_mode: PeriodMode::Dividing, cap: DEFAULT_ENUM_CAP }
    }
}

/// One mixture component.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitRow {
    /// `x` orbit (`P2` only).
    pub x_orbit: Option<PeriodicOrbit>,
    pub y_orbit: PeriodicOrbit,
    /// `∫c dπ` of the maximizing plan.
    pub integral: f64,
    /// `β · n · ∫c dπ`.
    pub log_weight: f64,
    /// Normalized weight.
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZetaResult {
    pub beta: f64,
    pub n: usize,
    /// The mixture, pushed onto cells of the report depth.
    pub measure: TransportPlan<XCell, Word>,
    /// `∫c dζ`.
    pub value: f64,
    pub table: Vec<OrbitRow>,
    /// Largest `x`-marginal error: against `μ` for `P1`, flow balance for `P2`.
    pub res_x: f64,
    /// Flow-balance residual of the `y`-marginal.
    pub res_y: f64,
}

/// A per-`n` table of maximizing plans, reusable across `β`.
#[derive(Clone, Debug)]
pub struct ZetaTable {
    alphabet: u8,
    n: usize,
    /// `P1` marginal (`None` for `P2`).
    mu: Option<Vec<(XAtom, f64)>>,
    rows: Vec<Component>,
}

#[derive(Clone, Debug)]
struct Component {
    x_orbit: Option<PeriodicOrbit>,
    y_orbit: PeriodicOrbit,
    integral: f64,
    atoms: Vec<(XAtom, EvPoint, f64)>,
}

fn maximizing_plan(
    cost: &CostSpec,
    metric: &Metric,
    xs: &[(XAtom, f64)],
    ys: &FiniteMeasure<EvPoint>,
) -> Result<(f64, Vec<(XAtom, EvPoint, f64)>)> {
    let c: Vec<Vec<f64>> = xs
        .iter()
        .map(|(x, _)| ys.atoms().iter().map(|(y, _)| cost.eval_point(metric, x, y)).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    let neg: Vec<Vec<f64>> = c.iter().map(|r| r.iter().map(|v| -v).collect()).collect();
    let mu: Vec<f64> = xs.iter().map(|(_, m)| *m).collect();
    let ot = classical_ot(&mu, &ys.masses(), &neg)?;
    let integral = compensated_sum(ot.plan.atoms.iter().map(|&(i, j, m)| m * c[i][j]));
    let atoms = ot.plan.atoms.iter().map(|&(i, j, m)| (xs[i].0.clone(), ys.atoms()[j].0.clone(), m)).collect();
    Ok((integral, atoms))
}

fn orbits(alphabet: u8, params: &ZetaParams) -> Result<Vec<PeriodicOrbit>> {
    if params.n == 0 {
        return Err(Error::DimensionMismatch("orbit length n must be at least 1".into()));
    }
    enumerate_fix(params.n, alphabet, params.period_mode, params.cap)
}

impl ZetaTable {
    /// `P1` table over every orbit of `enumerate_fix(n, d)`.
    pub fn p1(
        mu: &FiniteMeasure<XAtom>,
        cost: &CostSpec,
        metric: &Metric,
        alphabet: u8,
        params: &ZetaParams,
    ) -> Result<Self> {
        Self::p1_from_orbits(mu, cost, metric, alphabet, params.n, orbits(alphabet, params)?)
    }

    /// `P1` table over the given orbits, aggregated in canonical order.
    pub fn p1_from_orbits(
        mu: &FiniteMeasure<XAtom>,
        cost: &CostSpec,
        metric: &Metric,
        alphabet: u8,
        n: usize,
        mut orbits: Vec<PeriodicOrbit>,
    ) -> Result<Self> {
        cost.validate(alphabet)?;
        orbits.sort();
        orbits.dedup();
        let xs = mu.atoms().to_vec();
        let rows = orbits
            .into_par_iter()
            .map(|o| {
                let (integral, atoms) = maximizing_plan(cost, metric, &xs, &orbit_measure(&o))?;
                Ok(Component { x_orbit: None, y_orbit: o, integral, atoms })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ZetaTable { alphabet, n, mu: Some(xs), rows })
    }

    /// `P2` table over ordered pairs of orbits of `enumerate_fix(n, d)`.
    pub fn p2(cost: &CostSpec, metric: &Metric, alphabet: u8, params: &ZetaParams) -> Result<Self> {
        Self::p2_from_orbits(cost, metric, alphabet, params.n, orbits(alphabet, params)?)
    }

    pub fn p2_from_orbits(
        cost: &CostSpec,
        metric: &Metric,
        alphabet: u8,
        n: usize,
        mut orbits: Vec<PeriodicOrbit>,
    ) -> Result<Self> {
        cost.validate(alphabet)?;
        orbits.sort();
        orbits.dedup();
        let pairs: Vec<(PeriodicOrbit, PeriodicOrbit)> =
            orbits.iter().flat_map(|a| orbits.iter().map(move |b| (a.clone(), b.clone()))).collect();
        let rows = pairs
            .into_par_iter()
            .map(|(a, b)| {
                let xs: Vec<(XAtom, f64)> =
                    orbit_measure(&a).atoms().iter().map(|(p, m)| (XAtom::Point(p.clone()), *m)).collect();
                let (integral, atoms) = maximizing_plan(cost, metric, &xs, &orbit_measure(&b))?;
                Ok(Component { x_orbit: Some(a), y_orbit: b, integral, atoms })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ZetaTable { alphabet, n, mu: None, rows })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Largest `∫c dπ` in the table, the `β → ∞` limit of the value.
    pub fn max_integral(&self) -> f64 {
        self.rows.iter().map(|r| r.integral).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Gibbs mixture at inverse temperature `beta`, reported on cells of
    /// depth `report_depth`.
    pub fn gibbs(&self, beta: f64, report_depth: usize) -> Result<ZetaResult> {
        if !(beta >= 0.0 && beta.is_finite()) {
            return Err(Error::DimensionMismatch(format!("beta must be finite and non-negative, got {beta}")));
        }
        if report_depth == 0 {
            return Err(Error::DimensionMismatch("report depth must be at least 1".into()));
        }
        let scale = beta * self.n as f64;
        let log_w: Vec<f64> = self.rows.iter().map(|r| scale * r.integral).collect();
        let top = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let raw: Vec<f64> = log_w.iter().map(|l| (l - top).exp()).collect();
        let total = compensated_sum(raw.iter().copied());
        let weights: Vec<f64> = raw.iter().map(|r| r / total).collect();

        let value = compensated_sum(weights.iter().zip(&self.rows).map(|(w, r)| w * r.integral));
        let mut cellwise: BTreeMap<(XCell, Word), Vec<f64>> = BTreeMap::new();
        for (w, r) in weights.iter().zip(&self.rows) {
            for (x, y, m) in &r.atoms {
                let xc = match x {
                    XAtom::Label(l) => XCell::Label(l.clone()),
                    XAtom::Point(p) => XCell::Cyl(p.prefix(report_depth)),
                };
                cellwise.entry((xc, y.prefix(report_depth))).or_default().push(w * m);
            }
        }
        let atoms: Vec<(XCell, Word, f64)> = cellwise
            .into_iter()
            .map(|((x, y), parts)| (x, y, compensated_sum(parts)))
            .filter(|a| a.2 > 0.0)
            .collect();

        let (res_x, res_y) = self.residuals(&atoms, report_depth);
        let table = self
            .rows
            .iter()
            .zip(log_w.iter().zip(&weights))
            .map(|(r, (&log_weight, &weight))| OrbitRow {
                x_orbit: r.x_orbit.clone(),
                y_orbit: r.y_orbit.clone(),
                integral: r.integral,
                log_weight,
                weight,
            })
            .collect();
        Ok(ZetaResult {
            beta,
            n: self.n,
            measure: TransportPlan { atoms, value },
            value,
            table,
            res_x,
            res_y,
        })
    }

    fn residuals(&self, atoms: &[(XCell, Word, f64)], k: usize) -> (f64, f64) {
        let d = self.alphabet;
        let mut ym = vec![Vec::new(); cells(d, k)];
        for (_, y, m) in atoms {
            ym[y.index()].push(*m);
        }
        let ym: Vec<f64> = ym.into_iter().map(compensated_sum).collect();
        let res_y = flow_balance_residual(&ym, d, k);
        let res_x = match &self.mu {
            Some(mu) => {
                let mut target: BTreeMap<XCell, f64> = BTreeMap::new();
                for (x, m) in mu {
                    let c = match x {
                        XAtom::Label(l) => XCell::Label(l.clone()),
                        XAtom::Point(p) => XCell::Cyl(p.prefix(k)),
                    };
                    *target.entry(c).or_default() += m;
                }
                let mut got: BTreeMap<XCell, Vec<f64>> = BTreeMap::new();
                for (x, _, m) in atoms {
                    got.entry(x.clone()).or_default().push(*m);
                }
                let keys: Vec<&XCell> = target.keys().chain(got.keys()).collect();
                keys.into_iter()
                    .map(|c| {
                        let g = got.get(c).map(|v| compensated_sum(v.iter().copied())).unwrap_or(0.0);
                        (g - target.get(c).copied().unwrap_or(0.0)).abs()
                    })
                    .fold(0.0, f64::max)
            }
            None => {
                let mut xm = vec![Vec::new(); cells(d, k)];
                for (x, _, m) in atoms {
                    if let XCell::Cyl(w) = x {
                        xm[w.index()].push(*m);
                    }
                }
                let xm: Vec<f64> = xm.into_iter().map(compensated_sum).collect();
                flow_balance_residual(&xm, d, k)
            }
        };
        (res_x, res_y)
    }
}

/// Rejects costs whose lower bound is not positive on some cell pair of the
/// report grid; the error names the first such pair in grid order.
pub fn check_positive(
    cost: &CostSpec,
    metric: &Metric,
    alphabet: u8,
    x_labels: Option<&[String]>,
    report_depth: usize,
) -> Result<()> {
    let (rx, ry) = cost.min_resolution();
    let ky = report_depth.max(ry).max(1);
    let xs: Vec<XCell> = match x_labels {
        Some(l) => l.iter().cloned().map(XCell::Label).collect(),
        None => {
            let kx = report_depth.max(rx).max(1);
            (0..cells(alphabet, kx)).map(|i| XCell::Cyl(Word::from_index(i, kx, alphabet))).collect()
        }
    };
    for u in &xs {
        for j in 0..cells(alphabet, ky) {
            let v = Word::from_index(j, ky, alphabet);
            let b = cost.cost_bracket(metric, u, &v)?;
            if b.lo <= 0.0 {
                return Err(Error::NonPositiveCost { x: u.to_string(), y: v.to_string(), lo: b.lo });
            }
        }
    }
    Ok(())
}

fn labels_of(mu: &FiniteMeasure<XAtom>) -> Option<Vec<String>> {
    mu.atoms()
        .iter()
        .map(|(x, _)| match x {
            XAtom::Label(l) => Some(l.clone()),
            XAtom::Point(_) => None,
        })
        .collect()
}

/// Zeta mixture for the fixed marginal `μ`; the cost must be positive.
pub fn zeta_p1(
    mu: &FiniteMeasure<XAtom>,
    cost: &CostSpec,
    metric: &Metric,
    alphabet: u8,
    params: &ZetaParams,
    report_depth: usize,
) -> Result<ZetaResult> {
    check_positive(cost, metric, alphabet, labels_of(mu).as_deref(), report_depth)?;
    ZetaTable::p1(mu, cost, metric, alphabet, params)?.gibbs(params.beta, report_depth)
}

/// Zeta mixture over ordered pairs of orbit measures; the cost must be
/// positive.
pub fn zeta_p2(
    cost: &CostSpec,
    metric: &Metric,
    alphabet: u8,
    params: &ZetaParams,
    report_depth: usize,
) -> Result<ZetaResult> {
    check_positive(cost, metric, alphabet, None, report_depth)?;
    ZetaTable::p2(cost, metric, alphabet, params)?.gibbs(params.beta, report_depth)
}

/// Problem a sweep runs on.
#[derive(Clone, Debug, PartialEq)]
pub enum ZetaProblem {
    P1 { mu: FiniteMeasure<XAtom>, cost: CostSpec },
    P2 { cost: CostSpec },
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub problem: ZetaProblem,
    pub alphabet: u8,
    pub metric: Metric,
    pub betas: Vec<f64>,
    pub ns: Vec<usize>,
    pub period_mode: PeriodMode,
    pub cap: u128,
    pub report_depth: usize,
    /// Grid depth of the reference bracket.
    pub bracket_depth: usize,
}

/// One row of a convergence table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub beta: f64,
    pub n: usize,
    pub value: f64,
    pub res_x: f64,
    pub res_y: f64,
    /// Distance from `value` to the enclosure of the maximal value.
    pub gap: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTable {
    /// Enclosure `[lo, hi]` of `sup ∫c dπ` over admissible plans.
    pub max_bracket: (f64, f64),
    pub rows: Vec<ConvergenceRow>,
}

/// Enclosure of the maximal value: the negated bracket of minimizing `−c`.
pub fn max_value_bracket(spec: &SweepSpec) -> Result<ValueBracket> {
    let flipped = |c: &CostSpec| c.clone().affine(-1.0, 0.0);
    let s = match &spec.problem {
        ZetaProblem::P1 { mu, cost } => {
            let marginal = match labels_of(mu) {
                Some(_) => XMarginal::Labels(FiniteMeasure::new(
                    mu.atoms().iter().map(|(x, m)| (x.to_string(), *m)).collect(),
                )?),
                None => XMarginal::Points(FiniteMeasure::new(
                    mu.atoms()
                        .iter()
                        .map(|(x, m)| match x {
                            XAtom::Point(p) => Ok((p.clone(), *m)),
                            XAtom::Label(l) => Err(Error::IncompatibleCell(format!("mixed label `{l}`"))),
                        })
                        .collect::<Result<_>>()?,
                )?),
            };
            solve_p1(&P1Instance {
                alphabet: spec.alphabet,
                metric: spec.metric,
                mu: marginal,
                cost: flipped(cost),
                depth: spec.bracket_depth,
            })?
        }
        ZetaProblem::P2 { cost } => solve_p2(&P2Instance {
            alphabet: spec.alphabet,
            metric: spec.metric,
            cost: flipped(cost),
            kx: spec.bracket_depth,
            ky: spec.bracket_depth,
        })?,
    };
    let b = s.bracket;
    Ok(ValueBracket { lo: -b.hi, hi: -b.lo, plan_lo: b.plan_hi, plan_hi: b.plan_lo })
}

/// Runs every `(β, n)` pair, `n` outer and `β` inner, each per-`n` table
/// computed once.
pub fn zeta_sweep(spec: &SweepSpec) -> Result<ConvergenceTable> {
    if spec.betas.is_empty() || spec.ns.is_empty() {
        return Err(Error::DimensionMismatch("sweep needs at least one beta and one n".into()));
    }
    let labels = match &spec.problem {
        ZetaProblem::P1 { mu, .. } => labels_of(mu),
        ZetaProblem::P2 { .. } => None,
    };
    let cost = match &spec.problem {
        ZetaProblem::P1 { cost, .. } | ZetaProblem::P2 { cost } => cost,
    };
    check_positive(cost, &spec.metric, spec.alphabet, labels.as_deref(), spec.report_depth)?;
    let bracket = max_value_bracket(spec)?;
    let (lo, hi) = (bracket.lo, bracket.hi);
    let mut rows = Vec::new();
    for &n in &spec.ns {
        let params = ZetaParams { beta: 0.0, n, period_mode: spec.period_mode, cap: spec.cap };
        let table = match &spec.problem {
            ZetaProblem::P1 { mu, cost } => ZetaTable::p1(mu, cost, &spec.metric, spec.alphabet, &params)?,
            ZetaProblem::P2 { cost } => ZetaTable::p2(cost, &spec.metric, spec.alphabet, &params)?,
        };
        for &beta in &spec.betas {
            let r = table.gibbs(beta, spec.report_depth)?;
            let gap = if r.value < lo {
                lo - r.value
            } else if r.value > hi {
                r.value - hi
            } else {
                0.0
            };
            rows.push(ConvergenceRow { beta, n, value: r.value, res_x: r.res_x, res_y: r.res_y, gap });
        }
    }
    Ok(ConvergenceTable { max_bracket: (lo, hi), rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(s: &str) -> EvPoint {
        EvPoint::parse(s, 2).unwrap()
    }

    fn flipped_example() -> (FiniteMeasure<XAtom>, CostSpec) {
        let mu = FiniteMeasure::new(vec![(XAtom::Label("x0".into()), 0.5), (XAtom::Label("x1".into()), 0.5)]).unwrap();
        let c = CostSpec::SqDistToPoints { anchors: vec![("x0".into(), pt("|01")), ("x1".into(), pt("|10"))] };
        (mu, c.affine(-1.0, 2.0))
    }

    #[test]
    fn fixed_points_tie() {
        let (mu, c) = flipped_example();
        for beta in [0.0, 1.0, 40.0] {
            let r = zeta_p1(&mu, &c, &Metric::default(), 2, &ZetaParams::new(beta, 1), 3).unwrap();
            assert_eq!(r.value, 1.375);
            assert!(r.table.iter().all(|row| row.weight == 0.5));
            assert!(r.res_x <= 1e-12 && r.res_y <= 1e-12);
        }
    }

    #[test]
    fn large_beta_selects_the_matching() {
        let (mu, c) = flipped_example();
        let r = zeta_p1(&mu, &c, &Metric::default(), 2, &ZetaParams::new(200.0, 2), 2).unwrap();
        assert!((r.value - 2.0).abs() < 1e-9);
        let w = |s: &str| Word::parse(s, 2).unwrap();
        assert!((r.measure.mass_at(&XCell::Label("x0".into()), &w("01")) - 0.5).abs() < 1e-9);
    }

    #[test]
    fn p2_pair_average() {
        let c = CostSpec::PairSqDist.affine(-1.0, 2.0);
        let r = zeta_p2(&c, &Metric::default(), 2, &ZetaParams::new(0.0, 1), 2).unwrap();
        assert_eq!(r.value, 1.5);
        assert_eq!(r.table.len(), 4);
        let hot = zeta_p2(&c, &Metric::default(), 2, &ZetaParams::new(100.0, 1), 2).unwrap();
        assert!((hot.value - 2.0).abs() < 1e-12);
    }

    #[test]
    fn positivity_is_enforced() {
        let c = CostSpec::SqDistToPoints { anchors: vec![("x0".into(), pt("|01"))] };
        let mu = FiniteMeasure::new(vec![(XAtom::Label("x0".into()), 1.0)]).unwrap();
        match zeta_p1(&mu, &c, &Metric::default(), 2, &ZetaParams::new(1.0, 2), 3) {
            Err(Error::NonPositiveCost { x, y, lo }) => {
                assert_eq!((x.as_str(), y.as_str(), lo), ("x0", "010", 0.0));
            }
            other => panic!("expected a positivity error, got {other:?}"),
        }
    }

    #[test]
    fn order_of_orbits_does_not_matter() {
        let (mu, c) = flipped_example();
        let m = Metric::default();
        let mut orbits = enumerate_fix(4, 2, PeriodMode::Dividing, DEFAULT_ENUM_CAP).unwrap();
        let a = ZetaTable::p1_from_orbits(&mu, &c, &m, 2, 4, orbits.clone()).unwrap().gibbs(3.0, 3).unwrap();
        orbits.reverse();
        orbits.rotate_left(2);
        let b = ZetaTable::p1_from_orbits(&mu, &c, &m, 2, 4, orbits).unwrap().gibbs(3.0, 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn extreme_beta_does_not_overflow() {
        let (mu, c) = flipped_example();
        let r = zeta_p1(&mu, &c, &Metric::default(), 2, &ZetaParams::new(1e5, 4), 2).unwrap();
        assert!(r.value.is_finite());
        let total: f64 = r.table.iter().map(|t| t.weight).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }
}
