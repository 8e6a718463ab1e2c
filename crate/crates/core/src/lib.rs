//! Ergodic transport on one-sided Bernoulli shifts.
//!
//! Cylinder discretizations of the shift-constrained transport problems,
//! their dual potentials and slackness certificates, ergodic-optimization
//! bounds, and zeta-measure approximations built from periodic orbits.

pub mod cost;
pub mod error;
pub mod lp;
pub mod measures;
pub mod scalar;
pub mod shift;
pub mod transport;
pub mod zeta;

pub use cost::{CostBracket, CostSpec, TableAxis, XAtom, XCell};
pub use error::{Error, Result};
pub use measures::{orbit_measure, CylinderMeasure, FiniteMeasure};
pub use scalar::{compensated_sum, Scalar};
pub use shift::{
    canonical_orbit, enumerate_fix, enumerate_fix_fast, Cylinder, EvPoint, Metric, PeriodMode, PeriodicOrbit, Word,
};

pub use transport::{
    assemble_p1, assemble_p2, birkhoff_deficiency_scan, certify_slackness, eo_min, invariant_core,
    lax_oleinik_refine, solve_p1, solve_p2, Bound, Certificate, CertificateStatus, DualPair, Grid, P1Instance,
    P2Instance, ProblemKind, TransportSolution, ValueBracket, XMarginal,
};
pub use zeta::{
    zeta_p1, zeta_p2, zeta_sweep, ConvergenceRow, ConvergenceTable, SweepSpec, ZetaParams, ZetaProblem, ZetaResult,
    ZetaTable,
};

pub type LpProblem = lp::LpProblem<f64>;
pub type LpSolution = lp::LpSolution<f64>;
pub type ClassicalOt = lp::ClassicalOt<f64>;
pub type UniquenessReport = lp::UniquenessReport<f64>;
