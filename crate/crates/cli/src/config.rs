//! Problem configuration: one JSON object per run.

use std::path::{Path, PathBuf};

use et_core::cost::{CostSpec, TableAxis, XAtom};
use et_core::measures::{CylinderMeasure, FiniteMeasure};
use et_core::shift::{cells, EvPoint, Metric, PeriodMode, Word, DEFAULT_ENUM_CAP};
use et_core::transport::{P1Instance, P2Instance, XMarginal, DEFAULT_COLUMN_CAP};
use et_core::zeta::check_positive;
use serde::{Deserialize, Serialize};

use crate::error::ConfigError;

/// Masses must sum to 1 within this tolerance.
pub const MASS_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProblemKind {
    P1,
    P2,
    Eo,
    ZetaP1,
    ZetaP2,
    Certify,
}

impl ProblemKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ProblemKind::P1 => "p1",
            ProblemKind::P2 => "p2",
            ProblemKind::Eo => "eo",
            ProblemKind::ZetaP1 => "zeta-p1",
            ProblemKind::ZetaP2 => "zeta-p2",
            ProblemKind::Certify => "certify",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub problem: ProblemKind,
    #[serde(default = "default_alphabet")]
    pub alphabet: u8,
    /// Metric base `λ` of `d(x, y) = λ^{first disagreement}`.
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    /// Grid depth (`y` side, and `x` side of `P2` unless `x_depth` is set).
    #[serde(default = "default_depth")]
    pub depth: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_depth: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub mu: Vec<MassEntry>,
    pub cost: CostConfig,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default)]
    pub caps: Caps,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zeta: Option<ZetaConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eo: Option<EoConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certify: Option<CertifyConfig>,
    #[serde(default)]
    pub output: Output,
}

/// One atom of `μ`: exactly one of `label`, `point` or `cylinder`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MassEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub point: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cylinder: Option<String>,
    pub mass: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CostConfig {
    Table { x: TableAxis, y_depth: usize, values: Vec<Vec<f64>> },
    SqDistToPoints { anchors: Vec<Anchor> },
    MinSumSq { contacts: Vec<Contact> },
    PairSqDist,
    Affine { scale: f64, shift: f64, inner: Box<CostConfig> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Anchor {
    pub label: String,
    pub point: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Contact {
    pub x: String,
    pub y: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Caps {
    /// Largest number of LP columns (cell pairs).
    #[serde(default = "default_column_cap")]
    pub columns: u64,
    /// Largest `d^n` for orbit enumerations.
    #[serde(default = "default_enum_cap")]
    pub enumeration: u64,
}

impl Default for Caps {
    fn default() -> Self {
        Caps { columns: default_column_cap(), enumeration: default_enum_cap() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    #[default]
    Maximize,
    Minimize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZetaConfig {
    pub betas: Vec<f64>,
    pub ns: Vec<usize>,
    #[serde(default)]
    pub period_mode: PeriodMode,
    /// `minimize` runs on `c′ = (max c + margin) − c`.
    #[serde(default)]
    pub objective: Objective,
    #[serde(default = "default_margin")]
    pub margin: f64,
    /// Depth of the reported marginals; defaults to `depth`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report_depth: Option<usize>,
    /// Grid depth of the reference bracket; defaults to `depth`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bracket_depth: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EoConfig {
    #[serde(default = "default_n_max")]
    pub n_max: usize,
    /// Random point pairs for the Birkhoff deficiency scan (0 skips it).
    #[serde(default)]
    pub samples: usize,
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    /// Level subtracted along Birkhoff sums; defaults to the computed minimum.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
}

impl Default for EoConfig {
    fn default() -> Self {
        EoConfig { n_max: default_n_max(), samples: 0, horizon: default_horizon(), alpha: None }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertifyBase {
    P1,
    P2,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertifyConfig {
    /// Problem the stored plan and dual pair belong to.
    pub base: CertifyBase,
    /// Report of an earlier `solve` or `dual` run.
    pub report: PathBuf,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Output {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plan_csv: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table_csv: Option<PathBuf>,
}

fn default_alphabet() -> u8 {
    2
}
fn default_lambda() -> f64 {
    0.5
}
fn default_depth() -> usize {
    6
}
fn default_tolerance() -> f64 {
    1e-9
}
fn default_column_cap() -> u64 {
    DEFAULT_COLUMN_CAP as u64
}
fn default_enum_cap() -> u64 {
    DEFAULT_ENUM_CAP as u64
}
fn default_margin() -> f64 {
    1.0
}
fn default_n_max() -> usize {
    8
}
fn default_horizon() -> usize {
    16
}

fn invalid(field: impl Into<String>, message: impl ToString) -> ConfigError {
    ConfigError::Invalid { field: field.into(), message: message.to_string() }
}

/// Parses and validates a config, filling defaults.
pub fn parse_config(text: &str) -> Result<Config, ConfigError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let config: Config = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        ConfigError::Schema { path, line: inner.line(), column: inner.column(), message: inner.to_string() }
    })?;
    config.validated()
}

pub fn load_config(path: &Path) -> Result<Config, ConfigError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| ConfigError::Io { path: path.to_path_buf(), message: e.to_string() })?;
    parse_config(&text)
}

fn parse_point(text: &str, d: u8, field: String) -> Result<EvPoint, ConfigError> {
    EvPoint::parse(text, d).map_err(|e| invalid(field, e))
}

impl CostConfig {
    fn to_spec(&self, d: u8, field: &str) -> Result<CostSpec, ConfigError> {
        Ok(match self {
            CostConfig::Table { x, y_depth, values } => {
                CostSpec::Table { x: x.clone(), y_depth: *y_depth, values: values.clone() }
            }
            CostConfig::SqDistToPoints { anchors } => CostSpec::SqDistToPoints {
                anchors: anchors
                    .iter()
                    .enumerate()
                    .map(|(i, a)| Ok((a.label.clone(), parse_point(&a.point, d, format!("{field}.anchors[{i}].point"))?)))
                    .collect::<Result<_, ConfigError>>()?,
            },
            CostConfig::MinSumSq { contacts } => CostSpec::MinSumSq {
                contacts: contacts
                    .iter()
                    .enumerate()
                    .map(|(i, c)| {
                        Ok((
                            parse_point(&c.x, d, format!("{field}.contacts[{i}].x"))?,
                            parse_point(&c.y, d, format!("{field}.contacts[{i}].y"))?,
                        ))
                    })
                    .collect::<Result<_, ConfigError>>()?,
            },
            CostConfig::PairSqDist => CostSpec::PairSqDist,
            CostConfig::Affine { scale, shift, inner } => inner.to_spec(d, &format!("{field}.inner"))?.affine(*scale, *shift),
        })
    }
}

/// `μ` in the three shapes the solvers take.
enum Marginal {
    Labels(Vec<(String, f64)>),
    Points(Vec<(EvPoint, f64)>),
    Cylinders(Vec<(Word, f64)>),
}

impl Config {
    pub fn metric(&self) -> Metric {
        Metric { lambda: self.lambda }
    }

    pub fn cost_spec(&self) -> Result<CostSpec, ConfigError> {
        self.cost.to_spec(self.alphabet, "cost")
    }

    pub fn kx(&self) -> usize {
        self.x_depth.unwrap_or(self.depth)
    }

    pub fn zeta_config(&self) -> Result<&ZetaConfig, ConfigError> {
        self.zeta.as_ref().ok_or_else(|| invalid("zeta", "section is required for zeta problems"))
    }

    pub fn eo_config(&self) -> EoConfig {
        self.eo.clone().unwrap_or_default()
    }

    pub fn report_depth(&self) -> usize {
        self.zeta.as_ref().and_then(|z| z.report_depth).unwrap_or(self.depth)
    }

    pub fn bracket_depth(&self) -> usize {
        self.zeta.as_ref().and_then(|z| z.bracket_depth).unwrap_or(self.depth)
    }

    /// Problem whose grid a `certify` run rebuilds, or the problem itself.
    pub fn base_kind(&self) -> ProblemKind {
        match (&self.problem, &self.certify) {
            (ProblemKind::Certify, Some(c)) if c.base == CertifyBase::P2 => ProblemKind::P2,
            (ProblemKind::Certify, _) => ProblemKind::P1,
            (k, _) => *k,
        }
    }

    fn needs_mu(&self) -> bool {
        matches!(self.base_kind(), ProblemKind::P1 | ProblemKind::ZetaP1)
    }

    fn marginal(&self) -> Result<Marginal, ConfigError> {
        if self.mu.is_empty() {
            return Err(invalid("mu", "at least one atom is required"));
        }
        let d = self.alphabet;
        let known = self.cost_spec()?.labels();
        let mut labels = Vec::new();
        let mut points = Vec::new();
        let mut cyls = Vec::new();
        let mut sum = 0.0;
        for (i, e) in self.mu.iter().enumerate() {
            let field = format!("mu[{i}]");
            if !(e.mass.is_finite() && e.mass >= 0.0) {
                return Err(invalid(format!("{field}.mass"), format!("mass must be finite and non-negative, got {}", e.mass)));
            }
            sum += e.mass;
            match (&e.label, &e.point, &e.cylinder) {
                (Some(l), None, None) => {
                    if !known.is_empty() && !known.contains(l) {
                        return Err(invalid(format!("{field}.label"), format!("label `{l}` is not defined by the cost")));
                    }
                    labels.push((l.clone(), e.mass));
                }
                (None, Some(p), None) => points.push((parse_point(p, d, format!("{field}.point"))?, e.mass)),
                (None, None, Some(c)) => {
                    cyls.push((Word::parse(c, d).map_err(|err| invalid(format!("{field}.cylinder"), err))?, e.mass))
                }
                _ => return Err(invalid(field, "give exactly one of `label`, `point`, `cylinder`")),
            }
        }
        if (sum - 1.0).abs() > MASS_TOL {
            return Err(invalid("mu", format!("masses sum to {sum}, expected 1")));
        }
        match (labels.is_empty(), points.is_empty(), cyls.is_empty()) {
            (false, true, true) => Ok(Marginal::Labels(labels)),
            (true, false, true) => Ok(Marginal::Points(points)),
            (true, true, false) => {
                let k = cyls[0].0.len();
                if cyls.iter().any(|(w, _)| w.len() != k) {
                    return Err(invalid("mu", "all cylinders must have the same depth"));
                }
                Ok(Marginal::Cylinders(cyls))
            }
            _ => Err(invalid("mu", "atoms must all be labels, all points, or all cylinders")),
        }
    }

    pub fn x_marginal(&self) -> Result<XMarginal, ConfigError> {
        let bad = |e: et_core::Error| invalid("mu", e);
        Ok(match self.marginal()? {
            Marginal::Labels(l) => XMarginal::Labels(FiniteMeasure::new(l).map_err(bad)?),
            Marginal::Points(p) => XMarginal::Points(FiniteMeasure::new(p).map_err(bad)?),
            Marginal::Cylinders(c) => {
                let k = c[0].0.len();
                let mut masses = vec![0.0; cells(self.alphabet, k)];
                for (w, m) in &c {
                    masses[w.index()] += m;
                }
                XMarginal::Cylinders(CylinderMeasure::new(k, self.alphabet, masses).map_err(bad)?)
            }
        })
    }

    /// `μ` as a measure on `x` atoms (labels or points), as the zeta
    /// mixtures take it.
    pub fn zeta_mu(&self) -> Result<FiniteMeasure<XAtom>, ConfigError> {
        let atoms: Vec<(XAtom, f64)> = match self.marginal()? {
            Marginal::Labels(l) => l.into_iter().map(|(x, m)| (XAtom::Label(x), m)).collect(),
            Marginal::Points(p) => p.into_iter().map(|(x, m)| (XAtom::Point(x), m)).collect(),
            Marginal::Cylinders(_) => return Err(invalid("mu", "zeta problems need label or point atoms")),
        };
        FiniteMeasure::new(atoms).map_err(|e| invalid("mu", e))
    }

    pub fn p1_instance(&self) -> Result<P1Instance, ConfigError> {
        Ok(P1Instance {
            alphabet: self.alphabet,
            metric: self.metric(),
            mu: self.x_marginal()?,
            cost: self.cost_spec()?,
            depth: self.depth,
        })
    }

    pub fn p2_instance(&self) -> Result<P2Instance, ConfigError> {
        Ok(P2Instance { alphabet: self.alphabet, metric: self.metric(), cost: self.cost_spec()?, kx: self.kx(), ky: self.depth })
    }

    /// Replaces the grid depth and re-validates.
    pub fn with_depth(mut self, depth: usize) -> Result<Config, ConfigError> {
        self.depth = depth;
        self.validated()
    }

    fn validated(self) -> Result<Config, ConfigError> {
        if !(2..=10).contains(&self.alphabet) {
            return Err(invalid("alphabet", format!("must be in 2..=10, got {}", self.alphabet)));
        }
        Metric::new(self.lambda).map_err(|_| invalid("lambda", format!("must lie in (0, 1), got {}", self.lambda)))?;
        if self.depth < 2 {
            return Err(invalid("depth", format!("must be at least 2, got {}", self.depth)));
        }
        if self.x_depth.is_some_and(|k| k < 2) {
            return Err(invalid("x_depth", "must be at least 2"));
        }
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(invalid("tolerance", "must be positive"));
        }
        if self.problem == ProblemKind::Certify && self.certify.is_none() {
            return Err(invalid("certify", "section is required for certify problems"));
        }
        let cost = self.cost_spec()?;
        cost.validate(self.alphabet).map_err(|e| invalid("cost", e))?;
        if self.needs_mu() {
            self.marginal()?;
        } else if !self.mu.is_empty() {
            return Err(invalid("mu", format!("not used by `{}` problems", self.base_kind().as_str())));
        }
        match self.problem {
            ProblemKind::ZetaP1 | ProblemKind::ZetaP2 => self.validate_zeta(&cost)?,
            ProblemKind::Eo => {
                let eo = self.eo_config();
                let y_only = cost.sole_x().is_ok();
                if eo.n_max == 0 {
                    return Err(invalid("eo.n_max", "must be at least 1"));
                }
                if eo.samples == 0 && !y_only {
                    return Err(invalid("cost", "ergodic minimization needs a cost that depends on y only"));
                }
                if eo.samples > 0 {
                    if cost.has_label_x() {
                        return Err(invalid("eo.samples", "the Birkhoff scan needs a cost defined on point pairs"));
                    }
                    if eo.horizon == 0 {
                        return Err(invalid("eo.horizon", "must be at least 1"));
                    }
                    if !y_only && eo.alpha.is_none() {
                        return Err(invalid("eo.alpha", "required when the cost depends on x"));
                    }
                }
            }
            _ => {}
        }
        Ok(self)
    }

    fn validate_zeta(&self, cost: &CostSpec) -> Result<(), ConfigError> {
        let z = self.zeta_config()?;
        if z.betas.is_empty() || z.betas.iter().any(|b| !(b.is_finite() && *b >= 0.0)) {
            return Err(invalid("zeta.betas", "need at least one finite, non-negative beta"));
        }
        if z.ns.is_empty() || z.ns.contains(&0) {
            return Err(invalid("zeta.ns", "need at least one positive n"));
        }
        if !(z.margin > 0.0 && z.margin.is_finite()) {
            return Err(invalid("zeta.margin", "must be positive"));
        }
        if self.report_depth() == 0 {
            return Err(invalid("zeta.report_depth", "must be positive"));
        }
        if z.objective == Objective::Maximize {
            let labels = match self.problem {
                ProblemKind::ZetaP1 => match self.zeta_mu()?.atoms().first() {
                    Some((XAtom::Label(_), _)) => Some(self.zeta_mu()?.atoms().iter().map(|(x, _)| x.to_string()).collect::<Vec<String>>()),
                    _ => None,
                },
                _ => None,
            };
            check_positive(cost, &self.metric(), self.alphabet, labels.as_deref(), self.report_depth())
                .map_err(|e| invalid("cost", format!("{e}; set zeta.objective to \"minimize\" to flip the cost")))?;
        }
        Ok(())
    }
}

/// Resolves `path` against the directory of the config file.
pub fn resolve(base: Option<&Path>, path: &Path) -> PathBuf {
    match base {
        Some(dir) if path.is_relative() => dir.join(path),
        _ => path.to_path_buf(),
    }
}
