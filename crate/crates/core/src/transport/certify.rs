use serde::{Deserialize, Serialize};

use super::{CellPlan, DualPair, Grid};
use crate::error::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CertificateStatus {
    Certified,
    GapReported,
}

/// Slackness check of a plan against a dual pair on the same grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub status: CertificateStatus,
    /// `|plan value − dual objective|`, both on the lower costs.
    pub duality_gap: f64,
    pub max_admissibility_violation: f64,
    /// Largest `|c_lo − dual term|` over atoms heavier than the tolerance.
    pub max_support_slack: f64,
    /// Largest violation of the plan's own constraints.
    pub marginal_residual: f64,
}

impl Certificate {
    pub fn is_certified(&self) -> bool {
        self.status == CertificateStatus::Certified
    }
}

/// Certifies joint optimality of `plan` and `dp` for the lower-cost problem
/// on `grid`: the pair is admissible, tight on the plan's support, and the
/// plan is feasible, so both are optimal and the values agree.
pub fn certify_slackness(grid: &Grid, plan: &CellPlan, dp: &DualPair, tol: f64) -> Result<Certificate> {
    let x = grid.plan_vector(plan)?;
    let violation = grid.admissibility_violation(dp)?;
    let lo = grid.lo_costs();
    let mut slack = 0.0f64;
    let mut value = 0.0;
    for (j, &m) in x.iter().enumerate() {
        value += m * lo[j];
        if m > tol {
            slack = slack.max((lo[j] - grid.dual_term(dp, j)).abs());
        }
    }
    let gap = (value - grid.dual_objective(dp)).abs();
    let marginal_residual = grid.marginal_residual(plan)?;
    let ok = violation <= tol && slack <= tol && gap <= tol && marginal_residual <= tol;
    Ok(Certificate {
        status: if ok { CertificateStatus::Certified } else { CertificateStatus::GapReported },
        duality_gap: gap,
        max_admissibility_violation: violation,
        max_support_slack: slack,
        marginal_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::{CostSpec, XCell};
    use crate::measures::FiniteMeasure;
    use crate::shift::{EvPoint, Metric, Word};
    use crate::transport::{solve_p1, P1Instance, TransportPlan, XMarginal};

    fn example_one() -> P1Instance {
        let pt = |s: &str| EvPoint::parse(s, 2).unwrap();
        P1Instance {
            alphabet: 2,
            metric: Metric::default(),
            mu: XMarginal::Labels(FiniteMeasure::new(vec![("x0".into(), 0.5), ("x1".into(), 0.5)]).unwrap()),
            cost: CostSpec::SqDistToPoints { anchors: vec![("x0".into(), pt("|01")), ("x1".into(), pt("|10"))] },
            depth: 4,
        }
    }

    #[test]
    fn zero_pair_certifies_the_contact_plan() {
        let s = solve_p1(&example_one()).unwrap();
        let zero = DualPair::zeros(&s.grid);
        let c = certify_slackness(&s.grid, &s.bracket.plan_lo, &zero, 1e-9).unwrap();
        assert!(c.is_certified());
        assert_eq!(c.duality_gap, 0.0);
        let own = certify_slackness(&s.grid, &s.bracket.plan_lo, &s.dual, 1e-9).unwrap();
        assert!(own.is_certified(), "{own:?}");
    }

    #[test]
    fn perturbed_psi_breaks_admissibility() {
        let s = solve_p1(&example_one()).unwrap();
        let mut dp = DualPair::zeros(&s.grid);
        dp.psi[5] += 1.0;
        let c = certify_slackness(&s.grid, &s.bracket.plan_lo, &dp, 1e-9).unwrap();
        assert!(!c.is_certified());
        assert!(c.max_admissibility_violation >= 1.0 - 1e-12);
    }

    #[test]
    fn suboptimal_plan_shows_support_slack() {
        let s = solve_p1(&example_one()).unwrap();
        let w = |t: &str| Word::parse(t, 2).unwrap();
        // Both rows on the fixed point 1^∞: feasible, cost 1/2 · 1 + 1/2 · 1/4.
        let plan = TransportPlan {
            atoms: vec![(XCell::Label("x0".into()), w("1111"), 0.5), (XCell::Label("x1".into()), w("1111"), 0.5)],
            value: 0.625,
        };
        let c = certify_slackness(&s.grid, &plan, &s.dual, 1e-9).unwrap();
        assert!(!c.is_certified());
        assert!(c.max_support_slack > 0.1);
        assert!(c.marginal_residual < 1e-15);
    }

    #[test]
    fn foreign_cells_are_rejected() {
        let s = solve_p1(&example_one()).unwrap();
        let plan = TransportPlan { atoms: vec![(XCell::Label("x9".into()), Word::parse("0000", 2).unwrap(), 1.0)], value: 0.0 };
        assert!(certify_slackness(&s.grid, &plan, &s.dual, 1e-9).is_err());
    }
}
