//! The two shift-constrained transport problems on cylinder grids.
//!
//! `P1` fixes the `x`-marginal `μ` and asks the `y`-marginal to be
//! shift-invariant; `P2` asks both marginals to be shift-invariant. Both are
//! discretized over depth-`k` cylinders, with the stationary polytope
//! written as flow-balance rows. Solving once with the lower cost bounds
//! and once with the upper bounds encloses the continuum optimum: every
//! stationary cylinder measure extends to an invariant one (Markov
//! extension), and gluing the extended marginals along the optimal cylinder
//! plan stays admissible while costing at most the upper value.
//!
//! Dual sign convention: an admissible pair satisfies
//! `φ(u) + ψ(suffix v) − ψ(prefix v) ≤ c(u, v)` for `P1`, and
//! `α + φ(suffix u) − φ(prefix u) + ψ(suffix v) − ψ(prefix v) ≤ c(u, v)`
//! for `P2`, which is the coboundary form with `ψ` replaced by `−ψ`.

mod certify;
mod ergodic;
mod refine;

use serde::{Deserialize, Serialize};

use crate::cost::{CostSpec, XCell};
use crate::error::{Error, Result};
use crate::lp::{lp_solve, optimal_face_probe, LpProblem, LpSolution, TransportPlan, UniquenessReport};
use crate::measures::{flow_balance_residual, CylinderMeasure, FiniteMeasure};
use crate::shift::{checked_pow, prefix_index, suffix_index, EvPoint, Metric, Word};

pub use certify::{certify_slackness, Certificate, CertificateStatus};
pub use ergodic::{
    birkhoff_deficiency_scan, eo_min, invariant_core, periodic_pairs, shift_closure_defects, BirkhoffScan, EoResult,
};
pub use refine::{lax_oleinik_refine, lipschitz_violation, Refined, REFINE_TOL};

/// Masses below this are dropped when reading a plan off an LP vertex.
pub const PLAN_ATOM_TOL: f64 = 1e-14;

/// Default cap on the number of LP columns.
pub const DEFAULT_COLUMN_CAP: u128 = 1 << 20;

/// The fixed marginal of a `P1` instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum XMarginal {
    /// Finite labelled `X`.
    Labels(FiniteMeasure<String>),
    /// Atoms at eventually periodic points of the shift space.
    Points(FiniteMeasure<EvPoint>),
    /// Cylinder masses on the shift space (depth ≥ the grid depth).
    Cylinders(CylinderMeasure),
}

#[derive(Clone, Debug, PartialEq)]
pub struct P1Instance {
    pub alphabet: u8,
    pub metric: Metric,
    pub mu: XMarginal,
    pub cost: CostSpec,
    /// `y` depth, and `x` depth when `X` is the shift space.
    pub depth: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct P2Instance {
    pub alphabet: u8,
    pub metric: Metric,
    pub cost: CostSpec,
    pub kx: usize,
    pub ky: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bound {
    Lo,
    Hi,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    P1,
    P2,
}

/// Cylinder grid of an instance with per-column cost bounds.
///
/// Columns are the pairs `(x cell, y cell)` in lexicographic order,
/// `column = xi · ny + yi`.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    kind: ProblemKind,
    alphabet: u8,
    metric: Metric,
    x_cells: Vec<XCell>,
    /// Depth of the `x` cylinders (`P2`, or `P1` over the shift space).
    x_depth: Option<usize>,
    y_depth: usize,
    /// `P1` masses per `x` cell.
    mu: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    lipschitz: f64,
}

fn check_depth(k: usize, what: &str) -> Result<()> {
    if k < 2 {
        return Err(Error::DimensionMismatch(format!("{what} depth must be at least 2, got {k}")));
    }
    Ok(())
}

fn cylinder_cells(d: u8, k: usize, cap: u128) -> Result<usize> {
    match checked_pow(d, k) {
        Some(n) if (n as u128) <= cap => Ok(n),
        _ => Err(Error::ResourceCap { what: "cylinder grid", needed: (d as u128).saturating_pow(k as u32), cap }),
    }
}

impl Grid {
    pub fn p1(inst: &P1Instance) -> Result<Self> {
        Self::p1_capped(inst, DEFAULT_COLUMN_CAP)
    }

    pub fn p1_capped(inst: &P1Instance, cap: u128) -> Result<Self> {
        let d = inst.alphabet;
        check_depth(inst.depth, "y")?;
        inst.cost.validate(d)?;
        let k = inst.depth;
        let (x_cells, x_depth, mu) = match &inst.mu {
            XMarginal::Labels(m) => {
                if !inst.cost.has_label_x() {
                    return Err(Error::IncompatibleCell("labelled marginal for a shift-space cost".into()));
                }
                let labels = inst.cost.labels();
                let mut mu = vec![0.0; labels.len()];
                for (l, mass) in m.atoms() {
                    let i = labels.iter().position(|s| s == l).ok_or_else(|| Error::UnknownLabel(l.clone()))?;
                    mu[i] += mass;
                }
                (labels.into_iter().map(XCell::Label).collect(), None, mu)
            }
            XMarginal::Points(m) => {
                if m.atoms().iter().any(|(p, _)| p.alphabet() != d) {
                    return Err(Error::DimensionMismatch("marginal points use another alphabet".into()));
                }
                let projected = m.project(k)?;
                Self::shift_x(d, k, projected.masses().to_vec(), cap)?
            }
            XMarginal::Cylinders(m) => {
                if m.alphabet() != d {
                    return Err(Error::DimensionMismatch("marginal cylinders use another alphabet".into()));
                }
                let projected = m.project(k)?;
                Self::shift_x(d, k, projected.masses().to_vec(), cap)?
            }
        };
        let mut grid = Grid {
            kind: ProblemKind::P1,
            alphabet: d,
            metric: inst.metric,
            x_cells,
            x_depth,
            y_depth: k,
            mu,
            lo: Vec::new(),
            hi: Vec::new(),
            lipschitz: inst.cost.lipschitz_bound(&inst.metric),
        };
        grid.fill_costs(&inst.cost, cap)?;
        Ok(grid)
    }

    fn shift_x(d: u8, k: usize, mu: Vec<f64>, cap: u128) -> Result<(Vec<XCell>, Option<usize>, Vec<f64>)> {
        let n = cylinder_cells(d, k, cap)?;
        Ok(((0..n).map(|i| XCell::Cyl(Word::from_index(i, k, d))).collect(), Some(k), mu))
    }

    pub fn p2(inst: &P2Instance) -> Result<Self> {
        Self::p2_capped(inst, DEFAULT_COLUMN_CAP)
    }

    pub fn p2_capped(inst: &P2Instance, cap: u128) -> Result<Self> {
        let d = inst.alphabet;
        check_depth(inst.kx, "x")?;
        check_depth(inst.ky, "y")?;
        inst.cost.validate(d)?;
        if inst.cost.has_label_x() {
            return Err(Error::IncompatibleCell("P2 needs a cost on the shift space in both variables".into()));
        }
        let (x_cells, ..) = Self::shift_x(d, inst.kx, Vec::new(), cap)?;
        let mut grid = Grid {
            kind: ProblemKind::P2,
            alphabet: d,
            metric: inst.metric,
            x_cells,
            x_depth: Some(inst.kx),
            y_depth: inst.ky,
            mu: Vec::new(),
            lo: Vec::new(),
            hi: Vec::new(),
            lipschitz: inst.cost.lipschitz_bound(&inst.metric),
        };
        grid.fill_costs(&inst.cost, cap)?;
        Ok(grid)
    }

    fn fill_costs(&mut self, cost: &CostSpec, cap: u128) -> Result<()> {
        let ny = cylinder_cells(self.alphabet, self.y_depth, cap)?;
        let total = (self.x_cells.len() as u128) * (ny as u128);
        if total > cap {
            return Err(Error::ResourceCap { what: "LP columns", needed: total, cap });
        }
        let ys: Vec<Word> = (0..ny).map(|i| Word::from_index(i, self.y_depth, self.alphabet)).collect();
        self.lo.reserve(total as usize);
        self.hi.reserve(total as usize);
        for u in &self.x_cells {
            for v in &ys {
                let b = cost.cost_bracket(&self.metric, u, v)?;
                self.lo.push(b.lo);
                self.hi.push(b.hi);
            }
        }
        Ok(())
    }

    pub fn kind(&self) -> ProblemKind {
        self.kind
    }

    pub fn alphabet(&self) -> u8 {
        self.alphabet
    }

    pub fn metric(&self) -> &Metric {
        &self.metric
    }

    pub fn x_cells(&self) -> &[XCell] {
        &self.x_cells
    }

    pub fn x_depth(&self) -> Option<usize> {
        self.x_depth
    }

    pub fn y_depth(&self) -> usize {
        self.y_depth
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn lo_costs(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi_costs(&self) -> &[f64] {
        &self.hi
    }

    pub fn costs(&self, bound: Bound) -> &[f64] {
        match bound {
            Bound::Lo => &self.lo,
            Bound::Hi => &self.hi,
        }
    }

    pub fn nx(&self) -> usize {
        self.x_cells.len()
    }

    pub fn ny(&self) -> usize {
        self.lo.len() / self.x_cells.len()
    }

    /// de Bruijn nodes on the `y` side (`d^{ky−1}`).
    pub fn y_nodes(&self) -> usize {
        self.ny() / self.alphabet as usize
    }

    /// de Bruijn nodes on the `x` side (`P2` only, else 0).
    pub fn x_nodes(&self) -> usize {
        match self.kind {
            ProblemKind::P2 => self.nx() / self.alphabet as usize,
            ProblemKind::P1 => 0,
        }
    }

    pub fn num_columns(&self) -> usize {
        self.lo.len()
    }

    pub fn split(&self, column: usize) -> (usize, usize) {
        (column / self.ny(), column % self.ny())
    }

    pub fn y_word(&self, yi: usize) -> Word {
        Word::from_index(yi, self.y_depth, self.alphabet)
    }

    /// `(prefix, suffix)` node of a `y` cell.
    pub fn y_frame(&self, yi: usize) -> (usize, usize) {
        (prefix_index(yi, self.alphabet as usize), suffix_index(yi, self.y_nodes()))
    }

    /// `(prefix, suffix)` node of an `x` cell (`P2`).
    pub fn x_frame(&self, xi: usize) -> (usize, usize) {
        (prefix_index(xi, self.alphabet as usize), suffix_index(xi, self.x_nodes()))
    }

    /// Assembles the LP for the chosen cost bound.
    ///
    /// `P1` rows: one `x`-marginal row per `x` cell, then one flow-balance
    /// row per `y` node. `P2` rows: `x` flow balance, `y` flow balance,
    /// total mass.
    pub fn assemble(&self, bound: Bound) -> LpProblem<f64> {
        let (nx, ny) = (self.nx(), self.ny());
        let yn = self.y_nodes();
        let mut rhs = match self.kind {
            ProblemKind::P1 => self.mu.clone(),
            ProblemKind::P2 => vec![0.0; self.x_nodes()],
        };
        let y_base = rhs.len();
        rhs.extend(std::iter::repeat(0.0).take(yn));
        if self.kind == ProblemKind::P2 {
            rhs.push(1.0);
        }
        let total_row = rhs.len() - 1;
        let mut p = LpProblem::new(rhs);
        let costs = self.costs(bound);
        for xi in 0..nx {
            let mut x_part = Vec::with_capacity(3);
            match self.kind {
                ProblemKind::P1 => x_part.push((xi, 1.0)),
                ProblemKind::P2 => {
                    let (pre, suf) = self.x_frame(xi);
                    if pre != suf {
                        x_part.push((suf.min(pre), if suf < pre { 1.0 } else { -1.0 }));
                        x_part.push((suf.max(pre), if suf < pre { -1.0 } else { 1.0 }));
                    }
                }
            }
            for yi in 0..ny {
                let mut col = x_part.clone();
                let (pre, suf) = self.y_frame(yi);
                if pre != suf {
                    col.push((y_base + suf.min(pre), if suf < pre { 1.0 } else { -1.0 }));
                    col.push((y_base + suf.max(pre), if suf < pre { -1.0 } else { 1.0 }));
                }
                if self.kind == ProblemKind::P2 {
                    col.push((total_row, 1.0));
                }
                p.add_column(costs[xi * ny + yi], col);
            }
        }
        p
    }

    /// Splits LP row multipliers into a dual pair, `ψ` shifted to minimum 0.
    pub fn dual_from_lp(&self, y: &[f64]) -> DualPair {
        let (phi, rest) = match self.kind {
            ProblemKind::P1 => y.split_at(self.nx()),
            ProblemKind::P2 => y.split_at(self.x_nodes()),
        };
        let psi = rest[..self.y_nodes()].to_vec();
        let alpha = match self.kind {
            ProblemKind::P1 => 0.0,
            ProblemKind::P2 => rest[self.y_nodes()],
        };
        let mut dp = DualPair { phi: phi.to_vec(), psi, alpha };
        dp.normalize(self.kind);
        dp
    }

    /// Left-hand side of the admissibility constraint on `column`.
    pub fn dual_term(&self, dp: &DualPair, column: usize) -> f64 {
        let (xi, yi) = self.split(column);
        let (yp, ys) = self.y_frame(yi);
        let y_part = dp.psi[ys] - dp.psi[yp];
        match self.kind {
            ProblemKind::P1 => dp.phi[xi] + y_part,
            ProblemKind::P2 => {
                let (xp, xs) = self.x_frame(xi);
                dp.alpha + dp.phi[xs] - dp.phi[xp] + y_part
            }
        }
    }

    /// `Σ μ φ` for `P1`, `α` for `P2`.
    pub fn dual_objective(&self, dp: &DualPair) -> f64 {
        match self.kind {
            ProblemKind::P1 => self.mu.iter().zip(&dp.phi).map(|(m, p)| m * p).sum(),
            ProblemKind::P2 => dp.alpha,
        }
    }

    /// `max(0, max_column dual_term − c_lo)`.
    pub fn admissibility_violation(&self, dp: &DualPair) -> Result<f64> {
        self.check_dual(dp)?;
        Ok((0..self.num_columns()).map(|j| self.dual_term(dp, j) - self.lo[j]).fold(0.0, f64::max))
    }

    pub(crate) fn check_dual(&self, dp: &DualPair) -> Result<()> {
        let phi_len = match self.kind {
            ProblemKind::P1 => self.nx(),
            ProblemKind::P2 => self.x_nodes(),
        };
        if dp.phi.len() != phi_len || dp.psi.len() != self.y_nodes() {
            return Err(Error::DimensionMismatch(format!(
                "dual pair has {} + {} potentials, grid needs {} + {}",
                dp.phi.len(),
                dp.psi.len(),
                phi_len,
                self.y_nodes()
            )));
        }
        Ok(())
    }

    /// Reads a plan off a primal vector.
    pub fn plan_from_primal(&self, x: &[f64], bound: Bound) -> CellPlan {
        let costs = self.costs(bound);
        let mut value = 0.0;
        let mut atoms = Vec::new();
        for (j, &m) in x.iter().enumerate() {
            if m > PLAN_ATOM_TOL {
                let (xi, yi) = self.split(j);
                atoms.push((self.x_cells[xi].clone(), self.y_word(yi), m));
                value += m * costs[j];
            }
        }
        TransportPlan { atoms, value }
    }

    /// Column of a plan atom.
    pub fn column_of(&self, x: &XCell, y: &Word) -> Result<usize> {
        let xi = self
            .x_cells
            .iter()
            .position(|c| c == x)
            .ok_or_else(|| Error::DimensionMismatch(format!("x cell `{x}` is not on the grid")))?;
        if y.len() != self.y_depth || y.alphabet() != self.alphabet {
            return Err(Error::DimensionMismatch(format!("y cell `{y}` is not on the grid")));
        }
        Ok(xi * self.ny() + y.index())
    }

    /// Dense column masses of a plan.
    pub fn plan_vector(&self, plan: &CellPlan) -> Result<Vec<f64>> {
        let mut x = vec![0.0; self.num_columns()];
        for (u, v, m) in &plan.atoms {
            x[self.column_of(u, v)?] += m;
        }
        Ok(x)
    }

    /// Masses of the `x` cells.
    pub fn x_marginal(&self, plan: &CellPlan) -> Result<Vec<f64>> {
        let x = self.plan_vector(plan)?;
        Ok(x.chunks(self.ny()).map(|row| row.iter().sum()).collect())
    }

    /// Masses of the `y` cells.
    pub fn y_marginal(&self, plan: &CellPlan) -> Result<Vec<f64>> {
        let x = self.plan_vector(plan)?;
        let mut out = vec![0.0; self.ny()];
        for row in x.chunks(self.ny()) {
            for (o, m) in out.iter_mut().zip(row) {
                *o += m;
            }
        }
        Ok(out)
    }

    /// Largest violation of the plan's marginal constraints: `x` masses
    /// against `μ` (`P1`) or flow balance (`P2`), `y` flow balance, total
    /// mass, and negativity.
    pub fn marginal_residual(&self, plan: &CellPlan) -> Result<f64> {
        let xm = self.x_marginal(plan)?;
        let ym = self.y_marginal(plan)?;
        let x_res = match self.kind {
            ProblemKind::P1 => xm.iter().zip(&self.mu).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max),
            ProblemKind::P2 => flow_balance_residual(&xm, self.alphabet, self.x_depth.unwrap_or(0)),
        };
        let y_res = flow_balance_residual(&ym, self.alphabet, self.y_depth);
        let total: f64 = ym.iter().sum();
        let neg = plan.atoms.iter().map(|a| -a.2).fold(0.0, f64::max);
        Ok(x_res.max(y_res).max((total - 1.0).abs()).max(neg))
    }
}

/// Sparse plan over grid cells.
pub type CellPlan = TransportPlan<XCell, Word>;

/// Lower and upper values of the discretized problem with their plans.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValueBracket {
    pub lo: f64,
    pub hi: f64,
    pub plan_lo: CellPlan,
    pub plan_hi: CellPlan,
}

/// Dual potentials: `phi` per `x` cell (`P1`) or per `x` node (`P2`), `psi`
/// per `y` node, `alpha` the total-mass multiplier (`P2`; 0 for `P1`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualPair {
    pub phi: Vec<f64>,
    pub psi: Vec<f64>,
    pub alpha: f64,
}

impl DualPair {
    pub fn zeros(grid: &Grid) -> Self {
        let phi_len = match grid.kind() {
            ProblemKind::P1 => grid.nx(),
            ProblemKind::P2 => grid.x_nodes(),
        };
        DualPair { phi: vec![0.0; phi_len], psi: vec![0.0; grid.y_nodes()], alpha: 0.0 }
    }

    /// Shifts `ψ` (and `φ` for `P2`) to minimum 0; admissibility and the
    /// dual objective are unchanged.
    pub fn normalize(&mut self, kind: ProblemKind) {
        shift_to_zero(&mut self.psi);
        if kind == ProblemKind::P2 {
            shift_to_zero(&mut self.phi);
        }
    }

    /// `(max φ − min φ) + (max ψ − min ψ)`.
    pub fn oscillation(&self) -> f64 {
        osc(&self.phi) + osc(&self.psi)
    }
}

fn shift_to_zero(v: &mut [f64]) {
    let m = v.iter().copied().fold(f64::INFINITY, f64::min);
    if m.is_finite() {
        v.iter_mut().for_each(|x| *x -= m);
    }
}

fn osc(v: &[f64]) -> f64 {
    let (lo, hi) = v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    if v.is_empty() {
        0.0
    } else {
        hi - lo
    }
}

/// Result of a bracketed solve.
#[derive(Clone, Debug)]
pub struct TransportSolution {
    pub bracket: ValueBracket,
    /// Duals of the lower LP.
    pub dual: DualPair,
    pub grid: Grid,
    pub lo_lp: LpSolution<f64>,
    pub hi_lp: LpSolution<f64>,
}

impl TransportSolution {
    /// Probes whether the lower LP has a unique optimal plan.
    pub fn uniqueness(&self) -> UniquenessReport<f64> {
        optimal_face_probe(&self.grid.assemble(Bound::Lo), &self.lo_lp)
    }
}

pub fn assemble_p1(inst: &P1Instance, bound: Bound) -> Result<LpProblem<f64>> {
    Ok(Grid::p1(inst)?.assemble(bound))
}

pub fn assemble_p2(inst: &P2Instance, bound: Bound) -> Result<LpProblem<f64>> {
    Ok(Grid::p2(inst)?.assemble(bound))
}

pub fn solve_p1(inst: &P1Instance) -> Result<TransportSolution> {
    solve_grid(Grid::p1(inst)?)
}

pub fn solve_p2(inst: &P2Instance) -> Result<TransportSolution> {
    solve_grid(Grid::p2(inst)?)
}

fn optimal(grid: &Grid, bound: Bound) -> Result<LpSolution<f64>> {
    let s = lp_solve(&grid.assemble(bound))?;
    if !s.is_optimal() {
        return Err(Error::LpStatus { status: s.status.as_str() });
    }
    Ok(s)
}

/// Solves both cost bounds of a prepared grid.
pub fn solve_grid(grid: Grid) -> Result<TransportSolution> {
    let lo_lp = optimal(&grid, Bound::Lo)?;
    let hi_lp = optimal(&grid, Bound::Hi)?;
    let bracket = ValueBracket {
        lo: lo_lp.objective,
        hi: hi_lp.objective,
        plan_lo: grid.plan_from_primal(&lo_lp.primal, Bound::Lo),
        plan_hi: grid.plan_from_primal(&hi_lp.primal, Bound::Hi),
    };
    let dual = grid.dual_from_lp(&lo_lp.dual);
    Ok(TransportSolution { bracket, dual, grid, lo_lp, hi_lp })
}
