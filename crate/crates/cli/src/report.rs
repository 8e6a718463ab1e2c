//! Run reports and CSV dumps.
//!
//! Floats are written in the shortest form that parses back to the same
//! `f64`, so a stored report reproduces every certificate check exactly.

use std::path::Path;

use et_core::transport::{Certificate, DualPair, Grid, ProblemKind};
use et_core::shift::Word;
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::error::RunError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub command: String,
    pub config: Config,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bracket: Option<Bracket>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plan: Option<Vec<PlanAtom>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dual: Option<DualReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<Certificate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eo: Option<EoReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zeta: Option<ZetaReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<Diagnostics>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timings: Option<Timings>,
}

impl Report {
    pub fn new(command: &str, config: &Config) -> Self {
        Report {
            command: command.to_string(),
            config: config.clone(),
            bracket: None,
            plan: None,
            dual: None,
            certificate: None,
            eo: None,
            zeta: None,
            diagnostics: None,
            timings: None,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanAtom {
    pub x: String,
    pub y: String,
    pub mass: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Potential {
    pub cell: String,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualReport {
    pub phi: Vec<Potential>,
    pub psi: Vec<Potential>,
    pub alpha: f64,
}

impl DualReport {
    pub fn new(grid: &Grid, dp: &DualPair) -> Self {
        let phi_names = phi_names(grid);
        let psi_names = psi_names(grid);
        let pot = |names: Vec<String>, v: &[f64]| {
            names.into_iter().zip(v).map(|(cell, &value)| Potential { cell, value }).collect()
        };
        DualReport { phi: pot(phi_names, &dp.phi), psi: pot(psi_names, &dp.psi), alpha: dp.alpha }
    }
}

/// Names of the cells `φ` lives on: `x` cells (`P1`) or `x` nodes (`P2`).
pub fn phi_names(grid: &Grid) -> Vec<String> {
    match grid.kind() {
        ProblemKind::P1 => grid.x_cells().iter().map(|c| c.to_string()).collect(),
        ProblemKind::P2 => {
            let k = grid.x_depth().expect("P2 grids have an x depth") - 1;
            (0..grid.x_nodes()).map(|i| Word::from_index(i, k, grid.alphabet()).to_string()).collect()
        }
    }
}

/// Names of the `y` nodes `ψ` lives on.
pub fn psi_names(grid: &Grid) -> Vec<String> {
    let k = grid.y_depth() - 1;
    (0..grid.y_nodes()).map(|i| Word::from_index(i, k, grid.alphabet()).to_string()).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EoReport {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub orbit: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub orbits_checked: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub birkhoff: Option<BirkhoffReport>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BirkhoffReport {
    pub alpha: f64,
    pub horizon: usize,
    pub samples: usize,
    pub seed: u64,
    pub deficiency: f64,
    pub argmin_x: String,
    pub argmin_y: String,
    pub argmin_n: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZetaReport {
    /// `max c + margin` when the run minimized `c` through `c′ = shift − c`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shift: Option<f64>,
    /// Enclosure of the optimal value of `c′` (of `c` when not flipped).
    pub max_bracket: Bracket,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub original_bracket: Option<Bracket>,
    pub rows: Vec<ZetaRow>,
    pub table_csv: String,
}

/// One row of the convergence table; `value` is on the scale the zeta
/// mixture maximizes, `original_value` on the configured cost.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZetaRow {
    pub beta: f64,
    pub n: usize,
    pub value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub original_value: Option<f64>,
    pub res_x: f64,
    pub res_y: f64,
    pub gap: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub columns: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rows: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lp_iterations: Option<[usize; 2]>,
    /// Worst residual of the lower LP (primal, dual, slackness, gap).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lp_residual: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unique: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lipschitz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub refine_iterations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub refine_residual: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lipschitz_violation: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub total_seconds: f64,
}

fn write_csv<R: Serialize>(path: &Path, rows: impl IntoIterator<Item = R>) -> Result<(), RunError> {
    let fail = |e: &dyn std::fmt::Display| RunError::Output { path: path.to_path_buf(), message: e.to_string() };
    let mut w = csv::Writer::from_path(path).map_err(|e| fail(&e))?;
    for r in rows {
        w.serialize(r).map_err(|e| fail(&e))?;
    }
    w.flush().map_err(|e| fail(&e))
}

/// `x,y,mass`.
pub fn write_plan_csv(path: &Path, plan: &[PlanAtom]) -> Result<(), RunError> {
    write_csv(path, plan)
}

#[derive(Serialize)]
struct TableRow {
    beta: f64,
    n: usize,
    value: f64,
    res_x: f64,
    res_y: f64,
    gap: f64,
}

/// `beta,n,value,res_x,res_y,gap`.
pub fn write_table_csv(path: &Path, rows: &[ZetaRow]) -> Result<(), RunError> {
    write_csv(
        path,
        rows.iter().map(|r| TableRow { beta: r.beta, n: r.n, value: r.value, res_x: r.res_x, res_y: r.res_y, gap: r.gap }),
    )
}
