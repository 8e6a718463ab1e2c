//! Min-plus (Lax–Oleinik) refinement of dual pairs on the de Bruijn graph.
//!
//! Given `φ`, the largest `ψ ≤ 0` with `ψ(suffix v) ≤ ψ(prefix v) + e(v)`,
//! `e(v) = min_u [c(u, v) − φ(u)]`, is a shortest-path potential from a
//! virtual source joined to every node; it is the discrete backward-orbit
//! infimum. `φ` is then raised to the largest value the constraints allow.

use super::{DualPair, Grid, ProblemKind};
use crate::error::{Error, Result};

/// Fixed-point residual target.
pub const REFINE_TOL: f64 = 1e-10;

/// Strict-improvement threshold in the shortest-path relaxation.
const RELAX_EPS: f64 = 1e-13;

#[derive(Clone, Debug, PartialEq)]
pub struct Refined {
    pub dual: DualPair,
    pub iterations: usize,
    /// Largest potential change in the last sweep.
    pub residual: f64,
}

/// Largest `ψ ≤ 0` with `ψ(suffix v) ≤ ψ(prefix v) + weights[v]` on the
/// `nodes`-node de Bruijn graph of `d` symbols.
fn shortest_potential(weights: &[f64], d: usize, nodes: usize) -> Result<Vec<f64>> {
    let mut psi = vec![0.0; nodes];
    for round in 0..=nodes {
        let mut changed = 0.0f64;
        for (v, &w) in weights.iter().enumerate() {
            let (p, s) = (v / d, v % nodes);
            let cand = psi[p] + w;
            if cand < psi[s] - RELAX_EPS {
                changed = changed.max(psi[s] - cand);
                psi[s] = cand;
            }
        }
        if changed == 0.0 {
            return Ok(psi);
        }
        if round == nodes {
            // Still improving after every simple path was relaxed.
            return Err(Error::NoConvergence { iterations: round + 1, residual: changed });
        }
    }
    unreachable!()
}

fn normalized(v: &[f64]) -> Vec<f64> {
    let m = v.iter().copied().fold(f64::INFINITY, f64::min);
    v.iter().map(|x| x - m).collect()
}

fn max_change(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Refines `seed` into an admissible, discretely Lipschitz dual pair whose
/// dual objective is at least the seed's minus its admissibility violation.
///
/// `max_iters` defaults to `10 · d^k` with `k` the `y` depth.
pub fn lax_oleinik_refine(grid: &Grid, seed: &DualPair, max_iters: Option<usize>) -> Result<Refined> {
    let violation = grid.admissibility_violation(seed)?;
    if seed.phi.iter().chain(&seed.psi).any(|v| !v.is_finite()) || !seed.alpha.is_finite() {
        return Err(Error::DimensionMismatch("seed potentials must be finite".into()));
    }
    let cap = max_iters.unwrap_or(10 * grid.ny());
    match grid.kind() {
        ProblemKind::P1 => refine_p1(grid, seed, violation, cap),
        ProblemKind::P2 => refine_p2(grid, seed, violation, cap),
    }
}

fn refine_p1(grid: &Grid, seed: &DualPair, violation: f64, cap: usize) -> Result<Refined> {
    let (nx, ny, yn) = (grid.nx(), grid.ny(), grid.y_nodes());
    let d = grid.alphabet() as usize;
    let lo = grid.lo_costs();
    let mut phi: Vec<f64> = seed.phi.iter().map(|p| p - violation).collect();
    let mut psi = normalized(&seed.psi);
    let mut residual = f64::INFINITY;
    for it in 1..=cap {
        let e: Vec<f64> =
            (0..ny).map(|yi| (0..nx).map(|xi| lo[xi * ny + yi] - phi[xi]).fold(f64::INFINITY, f64::min)).collect();
        let new_psi = shortest_potential(&e, d, yn)?;
        let new_phi: Vec<f64> = (0..nx)
            .map(|xi| {
                (0..ny)
                    .map(|yi| {
                        let (p, s) = grid.y_frame(yi);
                        lo[xi * ny + yi] - new_psi[s] + new_psi[p]
                    })
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        let new_norm = normalized(&new_psi);
        residual = max_change(&new_phi, &phi).max(max_change(&new_norm, &psi));
        phi = new_phi;
        psi = new_norm;
        if residual <= REFINE_TOL {
            return Ok(Refined { dual: DualPair { phi, psi, alpha: 0.0 }, iterations: it, residual });
        }
    }
    Err(Error::NoConvergence { iterations: cap, residual })
}

fn refine_p2(grid: &Grid, seed: &DualPair, violation: f64, cap: usize) -> Result<Refined> {
    let (nx, ny) = (grid.nx(), grid.ny());
    let (xn, yn) = (grid.x_nodes(), grid.y_nodes());
    let d = grid.alphabet() as usize;
    let lo = grid.lo_costs();
    let mut alpha = seed.alpha - violation;
    let mut phi = normalized(&seed.phi);
    let mut psi = normalized(&seed.psi);
    let mut residual = f64::INFINITY;
    for it in 1..=cap {
        let x_term = |phi: &[f64], xi: usize| {
            let (p, s) = grid.x_frame(xi);
            phi[s] - phi[p]
        };
        let y_term = |psi: &[f64], yi: usize| {
            let (p, s) = grid.y_frame(yi);
            psi[s] - psi[p]
        };
        let ey: Vec<f64> = (0..ny)
            .map(|yi| (0..nx).map(|xi| lo[xi * ny + yi] - alpha - x_term(&phi, xi)).fold(f64::INFINITY, f64::min))
            .collect();
        let new_psi = normalized(&shortest_potential(&ey, d, yn)?);
        let ex: Vec<f64> = (0..nx)
            .map(|xi| {
                (0..ny).map(|yi| lo[xi * ny + yi] - alpha - y_term(&new_psi, yi)).fold(f64::INFINITY, f64::min)
            })
            .collect();
        let new_phi = normalized(&shortest_potential(&ex, d, xn)?);
        let slack = (0..nx * ny)
            .map(|j| lo[j] - alpha - x_term(&new_phi, j / ny) - y_term(&new_psi, j % ny))
            .fold(f64::INFINITY, f64::min);
        residual = slack.abs().max(max_change(&new_phi, &phi)).max(max_change(&new_psi, &psi));
        alpha += slack;
        phi = new_phi;
        psi = new_psi;
        if residual <= REFINE_TOL {
            return Ok(Refined { dual: DualPair { phi, psi, alpha }, iterations: it, residual });
        }
    }
    Err(Error::NoConvergence { iterations: cap, residual })
}

/// Largest excess of `|ψ(v) − ψ(v')|` over `L · λ^m`, `m` the common prefix
/// length of the nodes `v`, `v'` (and the same for `φ` on `P2` grids).
/// Non-positive when the discrete Lipschitz bound holds.
pub fn lipschitz_violation(grid: &Grid, dp: &DualPair) -> Result<f64> {
    grid.check_dual(dp)?;
    let d = grid.alphabet() as usize;
    let l = grid.lipschitz();
    let metric = grid.metric();
    let check = |pot: &[f64], len: usize| {
        let mut worst = f64::NEG_INFINITY;
        for a in 0..pot.len() {
            for b in a + 1..pot.len() {
                let m = common_prefix(a, b, d, len);
                worst = worst.max((pot[a] - pot[b]).abs() - l * metric.pow(m));
            }
        }
        worst
    };
    let mut worst = check(&dp.psi, grid.y_depth() - 1);
    if grid.kind() == ProblemKind::P2 {
        worst = worst.max(check(&dp.phi, grid.x_depth().unwrap_or(1) - 1));
    }
    Ok(worst)
}

/// Common prefix length of two length-`len` words given by index.
fn common_prefix(a: usize, b: usize, d: usize, len: usize) -> usize {
    let mut m = 0;
    let mut scale = d.pow(len as u32);
    while m < len {
        scale /= d;
        if a / scale != b / scale {
            break;
        }
        m += 1;
    }
    m
}
