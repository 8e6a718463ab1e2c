//! Command dispatch.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use et_core::cost::{CostSpec, XCell};
use et_core::lp::TransportPlan;
use et_core::shift::{cells, EvPoint, Word};
use et_core::transport::{
    birkhoff_deficiency_scan, certify_slackness, eo_min, lax_oleinik_refine, lipschitz_violation, solve_grid,
    DualPair, Grid, TransportSolution,
};
use et_core::zeta::{zeta_sweep, SweepSpec, ZetaProblem};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{resolve, Config, Objective, ProblemKind};
use crate::error::{ConfigError, RunError};
use crate::report::{
    phi_names, psi_names, write_plan_csv, write_table_csv, BirkhoffReport, Bracket, Diagnostics, DualReport,
    EoReport, PlanAtom, Report, Timings, ZetaReport, ZetaRow,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Solve,
    Dual,
    Zeta,
    Certify,
    Eo,
}

impl Command {
    pub fn as_str(&self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Dual => "dual",
            Command::Zeta => "zeta",
            Command::Certify => "certify",
            Command::Eo => "eo",
        }
    }

    fn accepts(&self, p: ProblemKind) -> bool {
        match self {
            Command::Solve | Command::Dual => matches!(p, ProblemKind::P1 | ProblemKind::P2),
            Command::Zeta => matches!(p, ProblemKind::ZetaP1 | ProblemKind::ZetaP2),
            Command::Certify => p == ProblemKind::Certify,
            Command::Eo => p == ProblemKind::Eo,
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Directory relative paths in the config are resolved against.
    pub base_dir: Option<PathBuf>,
    /// Where the report will be written, if not to stdout.
    pub report_path: Option<PathBuf>,
    pub seed: u64,
    pub timings: bool,
}

/// A finished run: the report and short status lines for the error stream.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub report: Report,
    pub status: Vec<String>,
}

pub fn run(config: &Config, command: Command, opts: &RunOptions) -> Result<RunOutput, RunError> {
    if !command.accepts(config.problem) {
        return Err(ConfigError::Invalid {
            field: "problem".into(),
            message: format!("`{}` cannot run a `{}` problem", command.as_str(), config.problem.as_str()),
        }
        .into());
    }
    let start = Instant::now();
    let mut out = RunOutput { report: Report::new(command.as_str(), config), status: Vec::new() };
    match command {
        Command::Solve | Command::Dual => solve(config, command == Command::Dual, opts, &mut out)?,
        Command::Zeta => zeta(config, opts, &mut out)?,
        Command::Certify => certify(config, opts, &mut out)?,
        Command::Eo => eo(config, opts, &mut out)?,
    }
    if opts.timings {
        out.report.timings = Some(Timings { total_seconds: start.elapsed().as_secs_f64() });
    }
    Ok(out)
}

fn build_grid(config: &Config) -> Result<Grid, RunError> {
    let cap = config.caps.columns as u128;
    Ok(match config.base_kind() {
        ProblemKind::P2 => Grid::p2_capped(&config.p2_instance()?, cap)?,
        _ => Grid::p1_capped(&config.p1_instance()?, cap)?,
    })
}

fn plan_atoms(plan: &TransportPlan<XCell, Word>) -> Vec<PlanAtom> {
    plan.atoms.iter().map(|(x, y, m)| PlanAtom { x: x.to_string(), y: y.to_string(), mass: *m }).collect()
}

fn solve(config: &Config, refine: bool, opts: &RunOptions, out: &mut RunOutput) -> Result<(), RunError> {
    let sol: TransportSolution = solve_grid(build_grid(config)?)?;
    let grid = &sol.grid;
    let mut diag = Diagnostics {
        columns: Some(grid.num_columns()),
        rows: Some(sol.lo_lp.dual.len()),
        lp_iterations: Some([sol.lo_lp.iterations, sol.hi_lp.iterations]),
        lp_residual: Some(sol.lo_lp.residuals.worst()),
        unique: Some(sol.uniqueness().unique),
        lipschitz: Some(grid.lipschitz()),
        refine_iterations: None,
        refine_residual: None,
        lipschitz_violation: None,
    };
    let dual: DualPair = if refine {
        let r = lax_oleinik_refine(grid, &sol.dual, None)?;
        diag.refine_iterations = Some(r.iterations);
        diag.refine_residual = Some(r.residual);
        diag.lipschitz_violation = Some(lipschitz_violation(grid, &r.dual)?);
        r.dual
    } else {
        sol.dual.clone()
    };
    let cert = certify_slackness(grid, &sol.bracket.plan_lo, &dual, config.tolerance)?;
    let plan = plan_atoms(&sol.bracket.plan_lo);
    if let Some(p) = &config.output.plan_csv {
        let path = resolve(opts.base_dir.as_deref(), p);
        write_plan_csv(&path, &plan)?;
        out.status.push(format!("plan: {}", path.display()));
    }
    out.status.push(format!("value bracket: [{}, {}]", sol.bracket.lo, sol.bracket.hi));
    out.status.push(certificate_line(&cert));
    let r = &mut out.report;
    r.bracket = Some(Bracket { lo: sol.bracket.lo, hi: sol.bracket.hi });
    r.plan = Some(plan);
    r.dual = Some(DualReport::new(grid, &dual));
    r.certificate = Some(cert);
    r.diagnostics = Some(diag);
    Ok(())
}

fn certificate_line(c: &et_core::transport::Certificate) -> String {
    if c.is_certified() {
        format!("certificate: certified (duality gap {:e})", c.duality_gap)
    } else {
        format!(
            "certificate: gap-reported (duality gap {:e}, admissibility {:e}, support slack {:e}, marginals {:e})",
            c.duality_gap, c.max_admissibility_violation, c.max_support_slack, c.marginal_residual
        )
    }
}

fn report_error(path: &Path, message: impl ToString) -> RunError {
    ConfigError::Invalid { field: "certify.report".into(), message: format!("{}: {}", path.display(), message.to_string()) }
        .into()
}

/// Values of `pots` reordered to `names`, which they must match as a set.
fn by_name(path: &Path, what: &str, names: &[String], pots: &[crate::report::Potential]) -> Result<Vec<f64>, RunError> {
    if pots.len() != names.len() {
        return Err(report_error(path, format!("{what} has {} entries, the grid needs {}", pots.len(), names.len())));
    }
    let map: HashMap<&str, f64> = pots.iter().map(|p| (p.cell.as_str(), p.value)).collect();
    names
        .iter()
        .map(|n| map.get(n.as_str()).copied().ok_or_else(|| report_error(path, format!("{what} has no entry for `{n}`"))))
        .collect()
}

fn certify(config: &Config, opts: &RunOptions, out: &mut RunOutput) -> Result<(), RunError> {
    let c = config.certify.as_ref().expect("validated certify config");
    let path = resolve(opts.base_dir.as_deref(), &c.report);
    let text = std::fs::read_to_string(&path).map_err(|e| report_error(&path, e))?;
    let stored: Report = serde_json::from_str(&text).map_err(|e| report_error(&path, e))?;
    let (Some(plan), Some(dual)) = (&stored.plan, &stored.dual) else {
        return Err(report_error(&path, "report has no plan and dual pair"));
    };
    let grid = build_grid(config)?;
    let cells: HashMap<String, XCell> = grid.x_cells().iter().map(|c| (c.to_string(), c.clone())).collect();
    let d = grid.alphabet();
    let mut atoms = Vec::with_capacity(plan.len());
    for (i, a) in plan.iter().enumerate() {
        let x = cells.get(&a.x).cloned().ok_or_else(|| report_error(&path, format!("plan[{i}]: unknown x cell `{}`", a.x)))?;
        let y = Word::parse(&a.y, d).map_err(|e| report_error(&path, format!("plan[{i}]: {e}")))?;
        if y.len() != grid.y_depth() {
            return Err(report_error(&path, format!("plan[{i}]: y cell `{}` is not at depth {}", a.y, grid.y_depth())));
        }
        atoms.push((x, y, a.mass));
    }
    let lo = grid.lo_costs();
    let mut value = 0.0;
    for (x, y, m) in &atoms {
        value += m * lo[grid.column_of(x, y)?];
    }
    let plan = TransportPlan { atoms, value };
    let dp = DualPair {
        phi: by_name(&path, "phi", &phi_names(&grid), &dual.phi)?,
        psi: by_name(&path, "psi", &psi_names(&grid), &dual.psi)?,
        alpha: dual.alpha,
    };
    let cert = certify_slackness(&grid, &plan, &dp, config.tolerance)?;
    out.status.push(certificate_line(&cert));
    out.report.bracket = Some(Bracket { lo: value, hi: grid.dual_objective(&dp) });
    out.report.certificate = Some(cert);
    Ok(())
}

/// Largest upper cost bound over the report grid, with `x` cells as the
/// positivity check uses them.
fn cost_upper_bound(config: &Config, cost: &CostSpec, labels: Option<&[String]>) -> Result<f64, RunError> {
    let (d, k) = (config.alphabet, config.report_depth());
    let (rx, ry) = cost.min_resolution();
    let ky = k.max(ry).max(1);
    let xs: Vec<XCell> = match labels {
        Some(l) => l.iter().cloned().map(XCell::Label).collect(),
        None => {
            let kx = k.max(rx).max(1);
            (0..cells(d, kx)).map(|i| XCell::Cyl(Word::from_index(i, kx, d))).collect()
        }
    };
    let metric = config.metric();
    let mut hi = f64::NEG_INFINITY;
    for u in &xs {
        for j in 0..cells(d, ky) {
            hi = hi.max(cost.cost_bracket(&metric, u, &Word::from_index(j, ky, d))?.hi);
        }
    }
    Ok(hi)
}

fn zeta(config: &Config, opts: &RunOptions, out: &mut RunOutput) -> Result<(), RunError> {
    let z = config.zeta_config()?;
    let cost = config.cost_spec()?;
    let mu = match config.problem {
        ProblemKind::ZetaP1 => Some(config.zeta_mu()?),
        _ => None,
    };
    let labels: Option<Vec<String>> = mu.as_ref().and_then(|m| {
        m.atoms()
            .iter()
            .map(|(x, _)| match x {
                et_core::XAtom::Label(l) => Some(l.clone()),
                et_core::XAtom::Point(_) => None,
            })
            .collect()
    });
    let shift = match z.objective {
        Objective::Maximize => None,
        Objective::Minimize => Some(cost_upper_bound(config, &cost, labels.as_deref())? + z.margin),
    };
    let run_cost = match shift {
        Some(s) => cost.clone().affine(-1.0, s),
        None => cost.clone(),
    };
    let problem = match mu {
        Some(mu) => ZetaProblem::P1 { mu, cost: run_cost },
        None => ZetaProblem::P2 { cost: run_cost },
    };
    let spec = SweepSpec {
        problem,
        alphabet: config.alphabet,
        metric: config.metric(),
        betas: z.betas.clone(),
        ns: z.ns.clone(),
        period_mode: z.period_mode,
        cap: config.caps.enumeration as u128,
        report_depth: config.report_depth(),
        bracket_depth: config.bracket_depth(),
    };
    let table = zeta_sweep(&spec)?;
    let rows: Vec<ZetaRow> = table
        .rows
        .iter()
        .map(|r| ZetaRow {
            beta: r.beta,
            n: r.n,
            value: r.value,
            original_value: shift.map(|s| s - r.value),
            res_x: r.res_x,
            res_y: r.res_y,
            gap: r.gap,
        })
        .collect();
    let path = match (&config.output.table_csv, &opts.report_path) {
        (Some(p), _) => resolve(opts.base_dir.as_deref(), p),
        (None, Some(r)) => r.with_extension("csv"),
        (None, None) => resolve(opts.base_dir.as_deref(), Path::new("zeta_table.csv")),
    };
    write_table_csv(&path, &rows)?;
    out.status.push(format!("convergence table: {}", path.display()));
    let (lo, hi) = table.max_bracket;
    out.report.zeta = Some(ZetaReport {
        shift,
        max_bracket: Bracket { lo, hi },
        original_bracket: shift.map(|s| Bracket { lo: s - hi, hi: s - lo }),
        rows,
        table_csv: path.display().to_string(),
    });
    Ok(())
}

/// Random eventually periodic point: preperiod of length ≤ 2, period ≤ 4.
fn random_point(rng: &mut ChaCha8Rng, d: u8) -> EvPoint {
    let pre: Vec<u8> = (0..rng.gen_range(0..=2)).map(|_| rng.gen_range(0..d)).collect();
    let rep: Vec<u8> = (0..rng.gen_range(1..=4)).map(|_| rng.gen_range(0..d)).collect();
    EvPoint::new(pre, rep, d).expect("symbols are in range")
}

fn eo(config: &Config, opts: &RunOptions, out: &mut RunOutput) -> Result<(), RunError> {
    let e = config.eo_config();
    let cost = config.cost_spec()?;
    let metric = config.metric();
    let mut report = EoReport { value: None, orbit: None, orbits_checked: None, birkhoff: None };
    if cost.sole_x().is_ok() {
        let r = eo_min(&cost, &metric, config.alphabet, e.n_max, config.caps.enumeration as u128)?;
        out.status.push(format!("ergodic minimum over periods ≤ {}: {} on orbit {}", e.n_max, r.value, r.orbit));
        report.value = Some(r.value);
        report.orbit = Some(r.orbit.to_string());
        report.orbits_checked = Some(r.orbits_checked);
    }
    if e.samples > 0 {
        let alpha = e.alpha.or(report.value).expect("validated: alpha or a y-only cost");
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        let samples: Vec<(EvPoint, EvPoint)> =
            (0..e.samples).map(|_| (random_point(&mut rng, config.alphabet), random_point(&mut rng, config.alphabet))).collect();
        let scan = birkhoff_deficiency_scan(&cost, &metric, alpha, e.horizon, &samples)?;
        let (s, n) = scan.argmin;
        out.status.push(format!("Birkhoff deficiency: {}", scan.deficiency));
        report.birkhoff = Some(BirkhoffReport {
            alpha,
            horizon: e.horizon,
            samples: e.samples,
            seed: opts.seed,
            deficiency: scan.deficiency,
            argmin_x: samples[s].0.to_string(),
            argmin_y: samples[s].1.to_string(),
            argmin_n: n,
        });
    }
    out.report.eo = Some(report);
    Ok(())
}
