//! Declarative cost functions `c(x, y)` with exact evaluation at eventually
//! periodic points, analytic enclosures on cylinder pairs, and Lipschitz
//! bounds.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::shift::{cells, EvPoint, Metric, Word};

/// Rows of a locally constant cost table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TableAxis {
    /// Finite `X`, one row per label.
    Labels(Vec<String>),
    /// `X` is the shift space, one row per depth-`kx` cylinder (`kx = 0`
    /// gives a single row, i.e. a cost depending on `y` only).
    Depth(usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum CostSpec {
    /// Locally constant cost, `values[row][y-cell index]`.
    Table { x: TableAxis, y_depth: usize, values: Vec<Vec<f64>> },
    /// Finite `X`: `c(x_i, y) = d(y, a_i)^2`.
    SqDistToPoints { anchors: Vec<(String, EvPoint)> },
    /// `c(x, y) = min over (a, b) in the contact set of d(x,a)^2 + d(y,b)^2`.
    MinSumSq { contacts: Vec<(EvPoint, EvPoint)> },
    /// `c(x, y) = d(x, y)^2`.
    PairSqDist,
    /// `scale · inner + shift`.
    Affine { scale: f64, shift: f64, inner: Box<CostSpec> },
}

/// An `x` argument: a label of a finite `X`, or a point of the shift space.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum XAtom {
    Label(String),
    Point(EvPoint),
}

impl fmt::Display for XAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            XAtom::Label(l) => f.write_str(l),
            XAtom::Point(p) => write!(f, "{p}"),
        }
    }
}

/// An `x` discretization cell: a label, or a cylinder of the shift space.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum XCell {
    Label(String),
    Cyl(Word),
}

impl fmt::Display for XCell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            XCell::Label(l) => f.write_str(l),
            XCell::Cyl(w) => write!(f, "{w}"),
        }
    }
}

/// `lo ≤ c ≤ hi` on a cell pair.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostBracket {
    pub lo: f64,
    pub hi: f64,
}

impl CostBracket {
    pub fn point(v: f64) -> Self {
        CostBracket { lo: v, hi: v }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    fn affine(self, scale: f64, shift: f64) -> Self {
        let (a, b) = (scale * self.lo + shift, scale * self.hi + shift);
        if scale >= 0.0 {
            CostBracket { lo: a, hi: b }
        } else {
            CostBracket { lo: b, hi: a }
        }
    }
}

fn label_of(x: &XAtom) -> String {
    x.to_string()
}

impl CostSpec {
    /// `s · c + t`.
    pub fn affine(self, scale: f64, shift: f64) -> CostSpec {
        CostSpec::Affine { scale, shift, inner: Box::new(self) }
    }

    /// Checks structural invariants against the alphabet size.
    pub fn validate(&self, alphabet: u8) -> Result<()> {
        match self {
            CostSpec::Table { x, y_depth, values } => {
                let rows = match x {
                    TableAxis::Labels(l) => l.len(),
                    TableAxis::Depth(kx) => cells(alphabet, *kx),
                };
                let cols = cells(alphabet, *y_depth);
                if values.len() != rows || values.iter().any(|r| r.len() != cols) {
                    return Err(Error::DimensionMismatch(format!("cost table must be {rows} x {cols}")));
                }
                if values.iter().flatten().any(|v| !v.is_finite()) {
                    return Err(Error::DimensionMismatch("cost table has non-finite entries".into()));
                }
                Ok(())
            }
            CostSpec::SqDistToPoints { anchors } => {
                if anchors.is_empty() {
                    return Err(Error::DimensionMismatch("no anchors".into()));
                }
                check_points(anchors.iter().map(|(_, a)| a), alphabet)
            }
            CostSpec::MinSumSq { contacts } => {
                if contacts.is_empty() {
                    return Err(Error::DimensionMismatch("contact set is empty".into()));
                }
                check_points(contacts.iter().flat_map(|(a, b)| [a, b]), alphabet)
            }
            CostSpec::PairSqDist => Ok(()),
            CostSpec::Affine { scale, shift, inner } => {
                if *scale == 0.0 || !scale.is_finite() || !shift.is_finite() {
                    return Err(Error::DimensionMismatch("affine scale must be finite and non-zero".into()));
                }
                inner.validate(alphabet)
            }
        }
    }

    /// True when `x` ranges over a finite labelled set.
    pub fn has_label_x(&self) -> bool {
        match self {
            CostSpec::Table { x: TableAxis::Labels(_), .. } | CostSpec::SqDistToPoints { .. } => true,
            CostSpec::Affine { inner, .. } => inner.has_label_x(),
            _ => false,
        }
    }

    /// Labels of a finite `X`, in first-appearance order.
    pub fn labels(&self) -> Vec<String> {
        match self {
            CostSpec::Table { x: TableAxis::Labels(l), .. } => l.clone(),
            CostSpec::SqDistToPoints { anchors } => {
                let mut out: Vec<String> = Vec::new();
                for (l, _) in anchors {
                    if !out.contains(l) {
                        out.push(l.clone());
                    }
                }
                out
            }
            CostSpec::Affine { inner, .. } => inner.labels(),
            _ => Vec::new(),
        }
    }

    /// Smallest `(x, y)` cell depths at which the bracket is meaningful.
    pub fn min_resolution(&self) -> (usize, usize) {
        match self {
            CostSpec::Table { x, y_depth, .. } => match x {
                TableAxis::Labels(_) => (0, *y_depth),
                TableAxis::Depth(kx) => (*kx, *y_depth),
            },
            CostSpec::Affine { inner, .. } => inner.min_resolution(),
            _ => (0, 0),
        }
    }

    /// Exact value `c(x, y)`.
    pub fn eval_point(&self, metric: &Metric, x: &XAtom, y: &EvPoint) -> Result<f64> {
        match self {
            CostSpec::Table { x: axis, y_depth, values } => {
                let row = match (axis, x) {
                    (TableAxis::Labels(labels), x) => {
                        let l = label_of(x);
                        labels.iter().position(|s| *s == l).ok_or(Error::UnknownLabel(l))?
                    }
                    (TableAxis::Depth(kx), XAtom::Point(p)) => p.cell_index(*kx),
                    (TableAxis::Depth(_), XAtom::Label(l)) => {
                        return Err(Error::IncompatibleCell(format!("label `{l}` given to a shift-space table")))
                    }
                };
                Ok(values[row][y.cell_index(*y_depth)])
            }
            CostSpec::SqDistToPoints { anchors } => {
                let l = label_of(x);
                let (_, a) = anchors.iter().find(|(s, _)| *s == l).ok_or(Error::UnknownLabel(l))?;
                Ok(metric.distance(y, a).powi(2))
            }
            CostSpec::MinSumSq { contacts } => {
                let xp = point_of(x)?;
                Ok(contacts
                    .iter()
                    .map(|(a, b)| metric.distance(xp, a).powi(2) + metric.distance(y, b).powi(2))
                    .fold(f64::INFINITY, f64::min))
            }
            CostSpec::PairSqDist => Ok(metric.distance(point_of(x)?, y).powi(2)),
            CostSpec::Affine { scale, shift, inner } => Ok(scale * inner.eval_point(metric, x, y)? + shift),
        }
    }

    /// Enclosure of `c` on the cell pair `u × [v]`.
    pub fn cost_bracket(&self, metric: &Metric, u: &XCell, v: &Word) -> Result<CostBracket> {
        match self {
            CostSpec::Table { x: axis, y_depth, values } => {
                if v.len() < *y_depth {
                    return Err(Error::IncompatibleCell(format!("y cell `{v}` is coarser than the table depth {y_depth}")));
                }
                let col = v.prefix_index(*y_depth);
                let row = match (axis, u) {
                    (TableAxis::Labels(labels), XCell::Label(l)) => {
                        labels.iter().position(|s| s == l).ok_or_else(|| Error::UnknownLabel(l.clone()))?
                    }
                    (TableAxis::Depth(kx), XCell::Cyl(w)) if w.len() >= *kx => w.prefix_index(*kx),
                    _ => return Err(Error::IncompatibleCell(format!("x cell `{u}` does not match the table rows"))),
                };
                Ok(CostBracket::point(values[row][col]))
            }
            CostSpec::SqDistToPoints { anchors } => {
                let l = match u {
                    XCell::Label(l) => l,
                    XCell::Cyl(w) => return Err(Error::IncompatibleCell(format!("cylinder x cell `{w}` for a labelled cost"))),
                };
                let (_, a) = anchors.iter().find(|(s, _)| s == l).ok_or_else(|| Error::UnknownLabel(l.clone()))?;
                let (lo, hi) = metric.range_to_point(v, a);
                Ok(CostBracket { lo: lo * lo, hi: hi * hi })
            }
            CostSpec::MinSumSq { contacts } => {
                let w = cyl_of(u)?;
                let mut out = CostBracket { lo: f64::INFINITY, hi: f64::INFINITY };
                for (a, b) in contacts {
                    let (xl, xh) = metric.range_to_point(w, a);
                    let (yl, yh) = metric.range_to_point(v, b);
                    out.lo = out.lo.min(xl * xl + yl * yl);
                    out.hi = out.hi.min(xh * xh + yh * yh);
                }
                Ok(out)
            }
            CostSpec::PairSqDist => {
                let (lo, hi) = metric.range_between(cyl_of(u)?, v);
                Ok(CostBracket { lo: lo * lo, hi: hi * hi })
            }
            CostSpec::Affine { scale, shift, inner } => Ok(inner.cost_bracket(metric, u, v)?.affine(*scale, *shift)),
        }
    }

    /// `L` with `|c(x,y) − c(x',y')| ≤ L (d(x,x') + d(y,y'))`.
    pub fn lipschitz_bound(&self, metric: &Metric) -> f64 {
        match self {
            CostSpec::Table { x, y_depth, values } => {
                let (lo, hi) = values
                    .iter()
                    .flatten()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
                let depth = match x {
                    TableAxis::Labels(_) => *y_depth,
                    TableAxis::Depth(kx) => (*kx).max(*y_depth),
                };
                if hi > lo {
                    (hi - lo) / metric.pow(depth)
                } else {
                    0.0
                }
            }
            // |d(y,a)^2 − d(z,a)^2| ≤ (d(y,a) + d(z,a)) |d(y,a) − d(z,a)| ≤ 2 d(y,z) on a diameter-1 space;
            // a minimum of such functions keeps the constant.
            CostSpec::SqDistToPoints { .. } | CostSpec::MinSumSq { .. } | CostSpec::PairSqDist => 2.0,
            CostSpec::Affine { scale, inner, .. } => scale.abs() * inner.lipschitz_bound(metric),
        }
    }

    /// The single `x` of a cost that depends on `y` only.
    pub fn sole_x(&self) -> Result<XAtom> {
        match self {
            CostSpec::Table { x: TableAxis::Labels(l), .. } if l.len() == 1 => Ok(XAtom::Label(l[0].clone())),
            CostSpec::Table { x: TableAxis::Depth(0), .. } => Ok(XAtom::Point(EvPoint::new(vec![], vec![0], 2)?)),
            CostSpec::SqDistToPoints { .. } => match self.labels().as_slice() {
                [one] => Ok(XAtom::Label(one.clone())),
                _ => Err(Error::NotYOnly),
            },
            CostSpec::Affine { inner, .. } => inner.sole_x(),
            _ => Err(Error::NotYOnly),
        }
    }
}

fn check_points<'a>(points: impl Iterator<Item = &'a EvPoint>, alphabet: u8) -> Result<()> {
    for p in points {
        if p.alphabet() != alphabet {
            return Err(Error::DimensionMismatch(format!(
                "point `{p}` is over {} symbols, expected {alphabet}",
                p.alphabet()
            )));
        }
    }
    Ok(())
}

fn point_of(x: &XAtom) -> Result<&EvPoint> {
    match x {
        XAtom::Point(p) => Ok(p),
        XAtom::Label(l) => Err(Error::IncompatibleCell(format!("label `{l}` given to a shift-space cost"))),
    }
}

fn cyl_of(u: &XCell) -> Result<&Word> {
    match u {
        XCell::Cyl(w) => Ok(w),
        XCell::Label(l) => Err(Error::IncompatibleCell(format!("label `{l}` given to a shift-space cost"))),
    }
}
