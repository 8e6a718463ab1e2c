use super::{LpError, LpProblem, LpSolution, LpStatus, Residuals};
use crate::scalar::Scalar;

/// Pivots between refactorizations of the basis inverse.
const REFACTOR_EVERY: usize = 64;

/// Size of the phase-two perturbation relative to the right-hand side.
const PERTURBATION: f64 = 1e-7;

/// splitmix64 of `i`, mapped to `[0, 1)`.
fn unit_hash(i: u64) -> f64 {
    let mut z = i.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^= z >> 31;
    (z >> 11) as f64 / (1u64 << 53) as f64
}

/// Solves `min c·x, A x = b, x ≥ 0`.
///
/// Two-phase revised simplex over a dense `m × m` basis inverse, with
/// Devex pricing and a lexicographic ratio test relative to the basis each
/// phase starts from. Phase two runs on a right-hand side shifted by a fixed
/// pseudo-random perturbation of the basic values; the shift is removed
/// afterwards and any remaining negative basic values are repaired by dual
/// simplex pivots. Ties go to the lowest column id, so the result is a
/// deterministic function of the input. The final primal and dual basic
/// solutions get one round of iterative refinement; an optimal solve whose
/// residuals stay above [`Scalar::hard_tol`] (relative to the data scale) is
/// reported as [`LpError::NumericalFailure`].
pub fn lp_solve<T: Scalar>(problem: &LpProblem<T>) -> Result<LpSolution<T>, LpError> {
    problem.check()?;
    let mut s = Revised::new(problem);

    s.run(Phase::One)?;
    let infeasibility = s.artificial_mass();
    if infeasibility > T::target_tol() * s.rhs_scale {
        return Ok(s.finish_without_duals(LpStatus::Infeasible));
    }
    s.drive_out_artificials()?;

    // Phase two on a perturbed right-hand side, then restore it and repair
    // the small primal infeasibility this leaves with dual simplex steps.
    s.perturb();
    let outcome = s.run(Phase::Two)?;
    s.restore_rhs()?;
    if outcome == Outcome::Unbounded {
        return Ok(s.finish_without_duals(LpStatus::Unbounded));
    }
    s.dual_cleanup()?;
    if s.run(Phase::Two)? == Outcome::Unbounded {
        return Ok(s.finish_without_duals(LpStatus::Unbounded));
    }
    s.finish_optimal()
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Phase {
    One,
    Two,
}

#[derive(PartialEq, Eq)]
enum Outcome {
    Optimal,
    Unbounded,
}

struct Revised<'a, T> {
    p: &'a LpProblem<T>,
    m: usize,
    n: usize,
    /// Row sign flips making the right-hand side non-negative.
    sign: Vec<T>,
    b: Vec<T>,
    /// Right-hand side the basic values are computed from (`b`, or `b`
    /// plus the phase-two perturbation).
    b_active: Vec<T>,
    /// Column ids; `n + r` is the artificial of row `r`.
    basis: Vec<usize>,
    is_basic: Vec<bool>,
    /// Row-major `B⁻¹`.
    binv: Vec<T>,
    xb: Vec<T>,
    /// Devex reference weights of the structural columns.
    weights: Vec<T>,
    iterations: usize,
    since_refactor: usize,
    max_iterations: usize,
    rhs_scale: T,
    cost_scale: T,
}

impl<'a, T: Scalar> Revised<'a, T> {
    fn new(p: &'a LpProblem<T>) -> Self {
        let m = p.num_rows();
        let n = p.num_cols();
        let sign: Vec<T> = p.rhs().iter().map(|&b| if b < T::zero() { -T::one() } else { T::one() }).collect();
        let b: Vec<T> = p.rhs().iter().map(|v| v.abs()).collect();
        let mut binv = vec![T::zero(); m * m];
        for i in 0..m {
            binv[i * m + i] = T::one();
        }
        let mut is_basic = vec![false; n + m];
        is_basic[n..].iter_mut().for_each(|f| *f = true);
        let rhs_scale = b.iter().fold(T::one(), |a, &v| a.max(v));
        let cost_scale = p.objective().iter().fold(T::one(), |a, &v| a.max(v.abs()));
        Revised {
            p,
            m,
            n,
            sign,
            xb: b.clone(),
            b_active: b.clone(),
            b,
            basis: (n..n + m).collect(),
            is_basic,
            binv,
            weights: vec![T::one(); n],
            iterations: 0,
            since_refactor: 0,
            max_iterations: 50 * (n + m) + 10_000,
            rhs_scale,
            cost_scale,
        }
    }

    fn cost(&self, phase: Phase, j: usize) -> T {
        match (phase, j >= self.n) {
            (Phase::One, true) => T::one(),
            (Phase::One, false) => T::zero(),
            (Phase::Two, true) => T::zero(),
            (Phase::Two, false) => self.p.objective()[j],
        }
    }

    /// `yᵀ = c_Bᵀ B⁻¹`.
    fn duals(&self, phase: Phase) -> Vec<T> {
        let m = self.m;
        let mut y = vec![T::zero(); m];
        for (i, &col) in self.basis.iter().enumerate() {
            let c = self.cost(phase, col);
            if c == T::zero() {
                continue;
            }
            let row = &self.binv[i * m..(i + 1) * m];
            for (yr, &v) in y.iter_mut().zip(row) {
                *yr = *yr + c * v;
            }
        }
        y
    }

    /// `yᵀ a'_j` for a structural column (row signs applied).
    fn col_dot(&self, y: &[T], j: usize) -> T {
        self.p.column(j).iter().fold(T::zero(), |acc, &(r, a)| acc + y[r] * self.sign[r] * a)
    }

    /// `B⁻¹ a'_j`.
    fn ftran(&self, j: usize) -> Vec<T> {
        let m = self.m;
        let mut d = vec![T::zero(); m];
        if j >= self.n {
            let r = j - self.n;
            for (i, di) in d.iter_mut().enumerate() {
                *di = self.binv[i * m + r];
            }
            return d;
        }
        for &(r, a) in self.p.column(j) {
            let a = a * self.sign[r];
            for (i, di) in d.iter_mut().enumerate() {
                *di = *di + self.binv[i * m + r] * a;
            }
        }
        d
    }

    fn pivot(&mut self, r: usize, j: usize, d: &[T]) -> Result<(), LpError> {
        let m = self.m;
        let piv = d[r];
        let theta = self.xb[r] / piv;
        for i in 0..m {
            if i != r {
                self.xb[i] = self.xb[i] - theta * d[i];
            }
        }
        self.xb[r] = theta;
        let (before, rest) = self.binv.split_at_mut(r * m);
        let (prow, after) = rest.split_at_mut(m);
        for v in prow.iter_mut() {
            *v = *v / piv;
        }
        for (i, row) in before.chunks_mut(m).chain(after.chunks_mut(m)).enumerate() {
            let i = if i < r { i } else { i + 1 };
            let f = d[i];
            if f != T::zero() {
                for (v, &pv) in row.iter_mut().zip(prow.iter()) {
                    *v = *v - f * pv;
                }
            }
        }
        self.is_basic[self.basis[r]] = false;
        self.is_basic[j] = true;
        self.basis[r] = j;
        self.iterations += 1;
        self.since_refactor += 1;
        if self.since_refactor >= REFACTOR_EVERY {
            self.refactor()?;
        }
        Ok(())
    }

    /// Rebuilds `B⁻¹` by Gauss–Jordan elimination with partial pivoting and
    /// recomputes the basic solution from it.
    fn refactor(&mut self) -> Result<(), LpError> {
        let m = self.m;
        let mut a = vec![T::zero(); m * m];
        for (i, &col) in self.basis.iter().enumerate() {
            if col >= self.n {
                a[(col - self.n) * m + i] = T::one();
            } else {
                for &(r, v) in self.p.column(col) {
                    a[r * m + i] = v * self.sign[r];
                }
            }
        }
        let mut inv = vec![T::zero(); m * m];
        for i in 0..m {
            inv[i * m + i] = T::one();
        }
        for c in 0..m {
            let (pr, pv) = (c..m)
                .map(|r| (r, a[r * m + c].abs()))
                .fold((c, T::zero()), |best, cand| if cand.1 > best.1 { cand } else { best });
            if pv <= T::epsilon() {
                return Err(LpError::NumericalFailure { stage: "refactorization", residual: 0.0 });
            }
            if pr != c {
                for k in 0..m {
                    a.swap(pr * m + k, c * m + k);
                    inv.swap(pr * m + k, c * m + k);
                }
            }
            let piv = a[c * m + c];
            for k in 0..m {
                a[c * m + k] = a[c * m + k] / piv;
                inv[c * m + k] = inv[c * m + k] / piv;
            }
            for r in 0..m {
                if r == c {
                    continue;
                }
                let f = a[r * m + c];
                if f == T::zero() {
                    continue;
                }
                for k in 0..m {
                    a[r * m + k] = a[r * m + k] - f * a[c * m + k];
                    inv[r * m + k] = inv[r * m + k] - f * inv[c * m + k];
                }
            }
        }
        self.binv = inv;
        self.xb = self.mul_binv(&self.b_active);
        let noise = T::epsilon() * T::of(1e3) * self.rhs_scale;
        for v in self.xb.iter_mut() {
            if *v < T::zero() && *v > -noise {
                *v = T::zero();
            }
        }
        self.since_refactor = 0;
        Ok(())
    }

    fn mul_binv(&self, v: &[T]) -> Vec<T> {
        let m = self.m;
        (0..m)
            .map(|i| self.binv[i * m..(i + 1) * m].iter().zip(v).fold(T::zero(), |acc, (&a, &b)| acc + a * b))
            .collect()
    }

    /// `B x_B` in the sign-flipped row space.
    fn basis_times(&self, xb: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.m];
        for (&col, &v) in self.basis.iter().zip(xb) {
            if col >= self.n {
                out[col - self.n] = out[col - self.n] + v;
            } else {
                for &(r, a) in self.p.column(col) {
                    out[r] = out[r] + a * self.sign[r] * v;
                }
            }
        }
        out
    }

    /// Entry `c` of row `r` of `B⁻¹ Q`, `Q` the columns of `reference`
    /// (the identity when `None`).
    fn lex_entry(&self, r: usize, c: usize, reference: Option<&[usize]>) -> T {
        let m = self.m;
        let row = &self.binv[r * m..(r + 1) * m];
        match reference.map(|q| q[c]) {
            None => row[c],
            Some(col) if col >= self.n => row[col - self.n],
            Some(col) => self.p.column(col).iter().fold(T::zero(), |acc, &(i, a)| acc + row[i] * a * self.sign[i]),
        }
    }

    /// Lexicographic comparison of the rows `(B⁻¹ Q)_r / d_r` and
    /// `(B⁻¹ Q)_s / d_s`.
    fn lex_less(&self, r: usize, s: usize, d: &[T], reference: Option<&[usize]>) -> bool {
        let tol = T::epsilon() * T::of(1e3);
        for c in 0..self.m {
            let a = self.lex_entry(r, c, reference) / d[r];
            let b = self.lex_entry(s, c, reference) / d[s];
            if (a - b).abs() > tol * (T::one() + a.abs().max(b.abs())) {
                return a < b;
            }
        }
        self.basis[r] < self.basis[s]
    }

    /// Devex update for entering column `q` and leaving row `r`, before the
    /// basis change.
    fn update_weights(&mut self, r: usize, q: usize, d: &[T]) {
        let m = self.m;
        let alpha_q = d[r];
        let wq = self.weights[q];
        let rho: Vec<T> = self.binv[r * m..(r + 1) * m].to_vec();
        for j in 0..self.n {
            if self.is_basic[j] || j == q {
                continue;
            }
            let a = self.col_dot(&rho, j);
            if a != T::zero() {
                let ratio = a / alpha_q;
                self.weights[j] = self.weights[j].max(ratio * ratio * wq);
            }
        }
        let leaving = self.basis[r];
        if leaving < self.n {
            self.weights[leaving] = (wq / (alpha_q * alpha_q)).max(T::one());
        }
    }

    fn run(&mut self, phase: Phase) -> Result<Outcome, LpError> {
        let rc_tol = T::rc_tol() * self.cost_scale;
        let piv_tol = T::pivot_tol();
        let tie_tol = T::epsilon() * T::of(1e3) * self.rhs_scale;
        let reference: Option<Vec<usize>> = match phase {
            Phase::One => None,
            Phase::Two => Some(self.basis.clone()),
        };
        loop {
            if self.iterations > self.max_iterations {
                return Err(LpError::NumericalFailure { stage: "iteration limit", residual: f64::NAN });
            }
            let y = self.duals(phase);
            // Devex pricing, largest rc² / w_j; artificials never re-enter.
            let mut entering: Option<(usize, T)> = None;
            for j in 0..self.n {
                if self.is_basic[j] {
                    continue;
                }
                let rc = self.cost(phase, j) - self.col_dot(&y, j);
                if rc < -rc_tol {
                    let score = rc * rc / self.weights[j];
                    if entering.map_or(true, |(_, b)| score > b) {
                        entering = Some((j, score));
                    }
                }
            }
            let Some((j, _)) = entering else {
                return Ok(Outcome::Optimal);
            };
            let d = self.ftran(j);
            // Basic artificials sitting at zero block any move in their row
            // and leave first.
            let mut forced: Option<usize> = None;
            let mut leave: Option<(usize, T)> = None;
            for r in 0..self.m {
                let dr = d[r];
                if self.basis[r] >= self.n && phase == Phase::Two && dr.abs() > piv_tol {
                    if forced.map_or(true, |f| self.basis[r] < self.basis[f]) {
                        forced = Some(r);
                    }
                    continue;
                }
                if dr <= piv_tol {
                    continue;
                }
                let ratio = self.xb[r].max(T::zero()) / dr;
                leave = match leave {
                    None => Some((r, ratio)),
                    Some((br, bratio)) => {
                        let better = if (ratio - bratio).abs() <= tie_tol {
                            self.lex_less(r, br, &d, reference.as_deref())
                        } else {
                            ratio < bratio
                        };
                        if better {
                            Some((r, ratio))
                        } else {
                            Some((br, bratio))
                        }
                    }
                };
            }
            let r = match (forced, leave) {
                (Some(f), _) => {
                    self.xb[f] = T::zero();
                    f
                }
                (None, Some((r, _))) => r,
                (None, None) => return Ok(Outcome::Unbounded),
            };
            self.update_weights(r, j, &d);
            self.pivot(r, j, &d)?;
        }
    }

    /// Raises every structural basic value by a distinct pseudo-random
    /// amount and moves the right-hand side along with it.
    fn perturb(&mut self) {
        let scale = T::of(PERTURBATION) * self.rhs_scale;
        for (r, v) in self.xb.iter_mut().enumerate() {
            if self.basis[r] < self.n {
                *v = *v + scale * (T::of(0.5) + T::of(unit_hash(r as u64)));
            }
        }
        self.b_active = self.basis_times(&self.xb);
    }

    fn restore_rhs(&mut self) -> Result<(), LpError> {
        self.b_active = self.b.clone();
        self.refactor()
    }

    /// Dual simplex pivots (phase-two costs) until the basic solution is
    /// non-negative. The leaving row is the most negative basic value.
    fn dual_cleanup(&mut self) -> Result<(), LpError> {
        let feas_tol = T::target_tol() * T::of(1e-3) * self.rhs_scale;
        let piv_tol = T::pivot_tol();
        let m = self.m;
        loop {
            if self.iterations > self.max_iterations {
                return Err(LpError::NumericalFailure { stage: "iteration limit", residual: f64::NAN });
            }
            let mut leave: Option<(usize, T)> = None;
            for (r, &v) in self.xb.iter().enumerate() {
                if self.basis[r] < self.n && v < -feas_tol && leave.map_or(true, |(_, b)| v < b) {
                    leave = Some((r, v));
                }
            }
            let Some((r, _)) = leave else {
                return Ok(());
            };
            let y = self.duals(Phase::Two);
            let row: Vec<T> = self.binv[r * m..(r + 1) * m].to_vec();
            // Ratio test on the pivot row: smallest rc_j / −α_j over α_j < 0,
            // ties to the larger |α_j|, then the lower index.
            let mut entering: Option<(usize, T, T)> = None;
            for j in 0..self.n {
                if self.is_basic[j] {
                    continue;
                }
                let alpha = self.col_dot(&row, j);
                if alpha >= -piv_tol {
                    continue;
                }
                let rc = (self.cost(Phase::Two, j) - self.col_dot(&y, j)).max(T::zero());
                let ratio = rc / -alpha;
                let better = match entering {
                    None => true,
                    Some((_, br, ba)) => {
                        let tie = (ratio - br).abs() <= T::epsilon() * T::of(1e3) * (T::one() + br.abs());
                        if tie {
                            alpha.abs() > ba.abs()
                        } else {
                            ratio < br
                        }
                    }
                };
                if better {
                    entering = Some((j, ratio, alpha));
                }
            }
            let Some((j, _, _)) = entering else {
                return Err(LpError::NumericalFailure {
                    stage: "restoring the right-hand side",
                    residual: self.xb[r].to_f64().unwrap_or(f64::NAN),
                });
            };
            let d = self.ftran(j);
            self.pivot(r, j, &d)?;
        }
    }

    fn artificial_mass(&self) -> T {
        self.basis
            .iter()
            .zip(&self.xb)
            .filter(|(&c, _)| c >= self.n)
            .fold(T::zero(), |acc, (_, &v)| acc + v.abs())
    }

    /// Pivots zero-level artificials out of the basis where some structural
    /// column has a usable entry in their row; the rest mark redundant rows.
    fn drive_out_artificials(&mut self) -> Result<(), LpError> {
        let m = self.m;
        for r in 0..m {
            if self.basis[r] < self.n {
                continue;
            }
            let row: Vec<T> = self.binv[r * m..(r + 1) * m].to_vec();
            let mut best: Option<(usize, T)> = None;
            for j in 0..self.n {
                if self.is_basic[j] {
                    continue;
                }
                let alpha = self.col_dot(&row, j).abs();
                if alpha > T::pivot_tol().sqrt() * T::of(1e-2) && best.map_or(true, |(_, b)| alpha > b) {
                    best = Some((j, alpha));
                }
            }
            if let Some((j, _)) = best {
                let d = self.ftran(j);
                self.xb[r] = T::zero();
                self.pivot(r, j, &d)?;
            }
        }
        self.refactor()
    }

    fn primal(&self) -> Vec<T> {
        let mut x = vec![T::zero(); self.n];
        for (&col, &v) in self.basis.iter().zip(&self.xb) {
            if col < self.n {
                x[col] = v;
            }
        }
        x
    }

    fn structural_basis(&self) -> Vec<usize> {
        self.basis.iter().copied().filter(|&c| c < self.n).collect()
    }

    fn finish_without_duals(&self, status: LpStatus) -> LpSolution<T> {
        let x = self.primal();
        let objective = x.iter().zip(self.p.objective()).fold(T::zero(), |acc, (&a, &b)| acc + a * b);
        LpSolution {
            status,
            primal: x,
            dual: Vec::new(),
            objective,
            basis: self.structural_basis(),
            iterations: self.iterations,
            residuals: Residuals::default(),
        }
    }

    fn finish_optimal(&mut self) -> Result<LpSolution<T>, LpError> {
        self.refactor()?;
        // One round of iterative refinement on B x_B = b.
        let bx = self.basis_times(&self.xb);
        let r: Vec<T> = self.b.iter().zip(&bx).map(|(&b, &v)| b - v).collect();
        let corr = self.mul_binv(&r);
        for (x, c) in self.xb.iter_mut().zip(corr) {
            *x = *x + c;
        }
        let tiny = T::epsilon() * self.rhs_scale * T::of(16.0);
        for x in self.xb.iter_mut() {
            if x.abs() <= tiny {
                *x = T::zero();
            }
        }
        let x = self.primal();

        // Duals yᵀ B = c_B, refined once.
        let m = self.m;
        let mut y = self.duals(Phase::Two);
        let cb: Vec<T> = self.basis.iter().map(|&c| self.cost(Phase::Two, c)).collect();
        let mut s = vec![T::zero(); m];
        for (i, &col) in self.basis.iter().enumerate() {
            let yb = if col >= self.n { y[col - self.n] } else { self.col_dot(&y, col) };
            s[i] = cb[i] - yb;
        }
        for (i, &si) in s.iter().enumerate() {
            if si == T::zero() {
                continue;
            }
            for (yr, &v) in y.iter_mut().zip(&self.binv[i * m..(i + 1) * m]) {
                *yr = *yr + si * v;
            }
        }
        let dual: Vec<T> = y.iter().zip(&self.sign).map(|(&v, &s)| v * s).collect();

        let objective = x.iter().zip(self.p.objective()).fold(T::zero(), |acc, (&a, &b)| acc + a * b);
        let residuals = residuals(self.p, &x, &dual);
        let scale = self.rhs_scale.max(self.cost_scale);
        let worst = residuals.worst();
        if !(worst <= T::hard_tol() * scale) {
            return Err(LpError::NumericalFailure { stage: "post-solve check", residual: worst.to_f64().unwrap_or(f64::NAN) });
        }
        Ok(LpSolution {
            status: LpStatus::Optimal,
            primal: x,
            dual,
            objective,
            basis: self.structural_basis(),
            iterations: self.iterations,
            residuals,
        })
    }
}

/// Primal/dual feasibility, slackness and gap of a candidate pair.
pub(crate) fn residuals<T: Scalar>(p: &LpProblem<T>, x: &[T], y: &[T]) -> Residuals<T> {
    let ax = p.apply(x);
    let primal = ax
        .iter()
        .zip(p.rhs())
        .map(|(&a, &b)| (a - b).abs())
        .chain(x.iter().map(|&v| (-v).max(T::zero())))
        .fold(T::zero(), T::max);
    let rc = p.reduced_costs(y);
    let dual = rc.iter().fold(T::zero(), |acc, &r| acc.max(-r));
    let slackness = rc.iter().zip(x).fold(T::zero(), |acc, (&r, &v)| acc.max((r * v).abs()));
    let cx = x.iter().zip(p.objective()).fold(T::zero(), |acc, (&a, &b)| acc + a * b);
    let by = y.iter().zip(p.rhs()).fold(T::zero(), |acc, (&a, &b)| acc + a * b);
    Residuals { primal, dual, slackness, gap: (cx - by).abs() }
}
