//! Probability measures on finite point sets and on cylinder partitions, the
//! flow-balance description of shift-invariant cylinder masses, and the
//! Markov extension of a stationary cylinder measure.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::shift::{cells, EvPoint, PeriodicOrbit, Word};

/// Default tolerance for membership checks (stationarity, total mass).
pub const MEMBERSHIP_TOL: f64 = 1e-9;

/// Tolerance on the total mass of a finitely supported measure.
pub const ATOM_SUM_TOL: f64 = 1e-12;

/// Finitely supported probability `Σ a_i δ_{p_i}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiniteMeasure<P> {
    atoms: Vec<(P, f64)>,
}

impl<P> FiniteMeasure<P> {
    pub fn new(atoms: Vec<(P, f64)>) -> Result<Self> {
        let sum: f64 = atoms.iter().map(|(_, m)| m).sum();
        if atoms.iter().any(|(_, m)| !(m.is_finite() && *m >= 0.0)) || (sum - 1.0).abs() > ATOM_SUM_TOL {
            return Err(Error::NotProbability { sum });
        }
        Ok(Self { atoms })
    }

    pub fn atoms(&self) -> &[(P, f64)] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn masses(&self) -> Vec<f64> {
        self.atoms.iter().map(|(_, m)| *m).collect()
    }
}

impl FiniteMeasure<EvPoint> {
    /// Pushes the atoms onto the depth-`k` cylinder partition.
    pub fn project(&self, k: usize) -> Result<CylinderMeasure> {
        let d = self.atoms.first().map(|(p, _)| p.alphabet()).ok_or(Error::NotProbability { sum: 0.0 })?;
        let mut masses = vec![0.0; cells(d, k)];
        for (p, m) in &self.atoms {
            masses[p.cell_index(k)] += m;
        }
        Ok(CylinderMeasure { depth: k, alphabet: d, masses })
    }
}

/// Uniform measure `(1/p) Σ δ_{σ^j x}` on a periodic orbit.
pub fn orbit_measure(orbit: &PeriodicOrbit) -> FiniteMeasure<EvPoint> {
    let points = orbit.points();
    let m = 1.0 / points.len() as f64;
    FiniteMeasure { atoms: points.into_iter().map(|p| (p, m)).collect() }
}

/// Masses of the `d^k` depth-`k` cylinders, indexed by [`Word::index`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CylinderMeasure {
    depth: usize,
    alphabet: u8,
    masses: Vec<f64>,
}

impl CylinderMeasure {
    pub fn new(depth: usize, alphabet: u8, masses: Vec<f64>) -> Result<Self> {
        if masses.len() != cells(alphabet, depth) {
            return Err(Error::DimensionMismatch(format!(
                "depth {depth} over {alphabet} symbols needs {} masses, got {}",
                cells(alphabet, depth),
                masses.len()
            )));
        }
        let sum: f64 = masses.iter().sum();
        if masses.iter().any(|m| !(m.is_finite() && *m >= -ATOM_SUM_TOL)) || (sum - 1.0).abs() > MEMBERSHIP_TOL {
            return Err(Error::NotProbability { sum });
        }
        Ok(Self { depth, alphabet, masses })
    }

    /// Uniform Bernoulli measure: every depth-`k` cell has mass `d^{-k}`.
    pub fn uniform(depth: usize, alphabet: u8) -> Self {
        let n = cells(alphabet, depth);
        Self { depth, alphabet, masses: vec![1.0 / n as f64; n] }
    }

    /// Unit mass on a single cylinder.
    pub fn dirac(word: &Word) -> Self {
        let mut masses = vec![0.0; cells(word.alphabet(), word.len())];
        masses[word.index()] = 1.0;
        Self { depth: word.len(), alphabet: word.alphabet(), masses }
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn alphabet(&self) -> u8 {
        self.alphabet
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn mass(&self, w: &Word) -> f64 {
        debug_assert_eq!(w.len(), self.depth);
        self.masses[w.index()]
    }

    /// Sums cells down to depth `k ≤ depth`.
    pub fn project(&self, k: usize) -> Result<CylinderMeasure> {
        if k > self.depth {
            return Err(Error::DimensionMismatch(format!("cannot refine depth {} to {k}", self.depth)));
        }
        let block = cells(self.alphabet, self.depth - k);
        let masses = self.masses.chunks(block).map(|c| c.iter().sum()).collect();
        Ok(CylinderMeasure { depth: k, alphabet: self.alphabet, masses })
    }

    /// Largest flow-balance violation
    /// `max_w |Σ_a m([a·w]) − Σ_a m([w·a])|` over words `w` of length `k−1`.
    /// Zero exactly on depth-`k` marginals of shift-invariant probabilities.
    /// Depth-1 measures are always such marginals, so they report 0.
    pub fn stationarity_residual(&self) -> f64 {
        flow_balance_residual(&self.masses, self.alphabet, self.depth)
    }

    /// Mass of `[w]`, `|w| > depth`, under the `(k−1)`-step Markov extension.
    pub fn markov_extension_mass(&self, w: &Word, tol: f64) -> Result<f64> {
        if w.len() <= self.depth {
            return Err(Error::DimensionMismatch(format!(
                "extension word must be longer than depth {}, got `{w}`",
                self.depth
            )));
        }
        let residual = self.stationarity_residual();
        if residual > tol {
            return Err(Error::NotStationary { residual, tolerance: tol });
        }
        let k = self.depth;
        let s = w.symbols();
        let window = |start: usize| Word::new(s[start..start + k].to_vec(), self.alphabet).unwrap().index();
        let mut mass = self.masses[window(0)];
        for start in 1..=(s.len() - k) {
            if mass == 0.0 {
                break;
            }
            mass *= self.transition(window(start));
        }
        Ok(mass)
    }

    /// Conditional mass of the last symbol of cell `index` given the
    /// preceding `k−1`; 0 on dead branches.
    fn transition(&self, index: usize) -> f64 {
        let d = self.alphabet as usize;
        let base = index - index % d;
        let denom: f64 = self.masses[base..base + d].iter().sum();
        if denom > 0.0 {
            self.masses[index] / denom
        } else {
            0.0
        }
    }

    /// Depth `k+1` Markov extension.
    pub fn markov_extend(&self) -> CylinderMeasure {
        let d = self.alphabet as usize;
        let nodes = self.masses.len() / d;
        let mut masses = vec![0.0; self.masses.len() * d];
        for (i, &m) in self.masses.iter().enumerate() {
            if m == 0.0 {
                continue;
            }
            let tail = i % nodes;
            for a in 0..d {
                masses[i * d + a] = m * self.transition(tail * d + a);
            }
        }
        CylinderMeasure { depth: self.depth + 1, alphabet: self.alphabet, masses }
    }
}

/// Flow-balance residual of raw depth-`k` cell masses.
pub fn flow_balance_residual(masses: &[f64], alphabet: u8, depth: usize) -> f64 {
    if depth < 2 {
        return 0.0;
    }
    let d = alphabet as usize;
    let nodes = masses.len() / d;
    (0..nodes)
        .map(|w| {
            let into: f64 = (0..d).map(|a| masses[a * nodes + w]).sum();
            let out: f64 = masses[w * d..w * d + d].iter().sum();
            (into - out).abs()
        })
        .fold(0.0, f64::max)
}
