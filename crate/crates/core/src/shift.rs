//! Words, cylinders and eventually periodic points of the one-sided full
//! shift over `{0, .., d-1}`, together with the `λ^m` ultrametric and the
//! enumeration of periodic orbits.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported alphabet: words are written as decimal digits.
pub const MAX_ALPHABET: u8 = 10;

/// Default cap on `d^n` for brute-force enumerations.
pub const DEFAULT_ENUM_CAP: u128 = 1 << 24;

fn check_alphabet(d: u8) -> Result<()> {
    if (2..=MAX_ALPHABET).contains(&d) {
        Ok(())
    } else {
        Err(Error::BadAlphabet(d as u32))
    }
}

fn parse_digits(text: &str, alphabet: u8) -> Result<Vec<u8>> {
    text.chars()
        .map(|ch| {
            let v = ch.to_digit(10).ok_or_else(|| Error::InvalidWord(text.to_string()))?;
            if v >= alphabet as u32 {
                return Err(Error::SymbolOutOfRange { symbol: v, alphabet });
            }
            Ok(v as u8)
        })
        .collect()
}

fn write_digits(f: &mut fmt::Formatter<'_>, symbols: &[u8]) -> fmt::Result {
    for s in symbols {
        write!(f, "{s}")?;
    }
    Ok(())
}

/// Integer power `d^k` as usize, `None` on overflow.
pub fn checked_pow(d: u8, k: usize) -> Option<usize> {
    (d as usize).checked_pow(k.try_into().ok()?)
}

/// Number of depth-`k` cylinders, `d^k`. Panics on overflow; callers size
/// their grids with [`checked_pow`] first.
pub fn cells(d: u8, k: usize) -> usize {
    checked_pow(d, k).expect("grid size overflows usize")
}

/// Finite word over `{0, .., d-1}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Word {
    symbols: Vec<u8>,
    alphabet: u8,
}

impl Word {
    pub fn new(symbols: Vec<u8>, alphabet: u8) -> Result<Self> {
        check_alphabet(alphabet)?;
        if let Some(&s) = symbols.iter().find(|&&s| s >= alphabet) {
            return Err(Error::SymbolOutOfRange { symbol: s as u32, alphabet });
        }
        Ok(Self { symbols, alphabet })
    }

    pub fn parse(text: &str, alphabet: u8) -> Result<Self> {
        check_alphabet(alphabet)?;
        let symbols = parse_digits(text, alphabet)?;
        Ok(Self { symbols, alphabet })
    }

    /// Word of length `len` whose base-`d` value (first symbol most
    /// significant) is `index`.
    pub fn from_index(mut index: usize, len: usize, alphabet: u8) -> Self {
        let d = alphabet as usize;
        let mut symbols = vec![0u8; len];
        for slot in symbols.iter_mut().rev() {
            *slot = (index % d) as u8;
            index /= d;
        }
        debug_assert_eq!(index, 0, "index out of range for word length");
        Self { symbols, alphabet }
    }

    /// Base-`d` value of the word; lexicographic order on words of equal
    /// length coincides with index order.
    pub fn index(&self) -> usize {
        let d = self.alphabet as usize;
        self.symbols.iter().fold(0, |acc, &s| acc * d + s as usize)
    }

    pub fn symbols(&self) -> &[u8] {
        &self.symbols
    }

    pub fn alphabet(&self) -> u8 {
        self.alphabet
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn rotate_left(&self, j: usize) -> Word {
        let mut symbols = self.symbols.clone();
        if !symbols.is_empty() {
            let j = j % symbols.len();
            symbols.rotate_left(j);
        }
        Word { symbols, alphabet: self.alphabet }
    }

    /// Shortest `r` with `self = r^m`.
    pub fn primitive_root(&self) -> Word {
        let n = self.len();
        let p = (1..=n)
            .find(|&p| n % p == 0 && (p..n).all(|i| self.symbols[i] == self.symbols[i - p]))
            .unwrap_or(n);
        Word { symbols: self.symbols[..p].to_vec(), alphabet: self.alphabet }
    }

    /// Index of the depth-`k` cylinder containing `[self]`, `k ≤ len`.
    pub fn prefix_index(&self, k: usize) -> usize {
        let d = self.alphabet as usize;
        self.symbols[..k].iter().fold(0, |acc, &s| acc * d + s as usize)
    }

    /// Lexicographically least rotation.
    pub fn least_rotation(&self) -> Word {
        (0..self.len().max(1))
            .map(|j| self.rotate_left(j))
            .min_by(|a, b| a.symbols.cmp(&b.symbols))
            .unwrap_or_else(|| self.clone())
    }

    fn is_least_rotation(symbols: &[u8]) -> bool {
        let n = symbols.len();
        (1..n).all(|j| {
            let rotated = symbols[j..].iter().chain(&symbols[..j]);
            symbols.iter().cmp(rotated) != Ordering::Greater
        })
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Word {
    fn cmp(&self, other: &Self) -> Ordering {
        self.symbols
            .cmp(&other.symbols)
            .then(self.alphabet.cmp(&other.alphabet))
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_digits(f, &self.symbols)
    }
}

/// The set of sequences with a fixed prefix.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cylinder(pub Word);

impl Cylinder {
    pub fn new(word: Word) -> Self {
        Cylinder(word)
    }

    pub fn depth(&self) -> usize {
        self.0.len()
    }

    pub fn word(&self) -> &Word {
        &self.0
    }

    pub fn contains(&self, point: &EvPoint) -> bool {
        self.0.symbols.iter().enumerate().all(|(i, &s)| point.symbol(i) == s)
    }

    /// `(prefix, suffix)` of a depth-`k ≥ 2` cylinder: the depth-`k-1`
    /// cylinders `[w_0..w_{k-2}]` and `[w_1..w_{k-1}]`. The shift maps the
    /// cylinder into its suffix, which makes `prefix -> suffix` the de Bruijn
    /// edge carried by this cylinder.
    pub fn shift_frame(&self) -> Result<(Cylinder, Cylinder)> {
        let k = self.depth();
        if k < 2 {
            return Err(Error::InvalidWord(format!("shift frame needs depth >= 2, got `{}`", self.0)));
        }
        let a = self.0.alphabet;
        let s = &self.0.symbols;
        Ok((
            Cylinder(Word { symbols: s[..k - 1].to_vec(), alphabet: a }),
            Cylinder(Word { symbols: s[1..].to_vec(), alphabet: a }),
        ))
    }
}

impl fmt::Display for Cylinder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}]", self.0)
    }
}

/// Index of the de Bruijn prefix node of the depth-`k` cell `index`.
#[inline]
pub fn prefix_index(index: usize, d: usize) -> usize {
    index / d
}

/// Index of the de Bruijn suffix node of a depth-`k` cell, with
/// `nodes = d^{k-1}`.
#[inline]
pub fn suffix_index(index: usize, nodes: usize) -> usize {
    index % nodes
}

/// Eventually periodic point `pre · rep^∞`, kept in a normal form (primitive
/// repeating block, shortest preperiod) so that derived equality is equality
/// of sequences.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EvPoint {
    pre: Vec<u8>,
    rep: Vec<u8>,
    alphabet: u8,
}

impl EvPoint {
    pub fn new(pre: Vec<u8>, rep: Vec<u8>, alphabet: u8) -> Result<Self> {
        check_alphabet(alphabet)?;
        if rep.is_empty() {
            return Err(Error::InvalidPoint { text: String::new(), reason: "empty repeating block".into() });
        }
        if let Some(&s) = pre.iter().chain(&rep).find(|&&s| s >= alphabet) {
            return Err(Error::SymbolOutOfRange { symbol: s as u32, alphabet });
        }
        let mut p = EvPoint { pre, rep, alphabet };
        p.normalize();
        Ok(p)
    }

    pub fn periodic(rep: &Word) -> Result<Self> {
        Self::new(Vec::new(), rep.symbols.clone(), rep.alphabet)
    }

    /// Parses `"pre|rep"`, e.g. `"|01"` for `(01)^∞` or `"0|1"` for `01^∞`.
    pub fn parse(text: &str, alphabet: u8) -> Result<Self> {
        let (pre, rep) = text.split_once('|').ok_or_else(|| Error::InvalidPoint {
            text: text.to_string(),
            reason: "expected `pre|rep`".into(),
        })?;
        let bad = |e: Error| Error::InvalidPoint { text: text.to_string(), reason: e.to_string() };
        let pre = parse_digits(pre, alphabet).map_err(bad)?;
        let rep = parse_digits(rep, alphabet).map_err(bad)?;
        Self::new(pre, rep, alphabet).map_err(|e| match e {
            Error::InvalidPoint { reason, .. } => Error::InvalidPoint { text: text.to_string(), reason },
            other => other,
        })
    }

    fn normalize(&mut self) {
        let w = Word { symbols: std::mem::take(&mut self.rep), alphabet: self.alphabet };
        self.rep = w.primitive_root().symbols;
        while let (Some(&a), Some(&b)) = (self.pre.last(), self.rep.last()) {
            if a != b {
                break;
            }
            self.pre.pop();
            self.rep.rotate_right(1);
        }
    }

    pub fn alphabet(&self) -> u8 {
        self.alphabet
    }

    pub fn preperiod(&self) -> &[u8] {
        &self.pre
    }

    pub fn repeating_block(&self) -> &[u8] {
        &self.rep
    }

    pub fn symbol(&self, i: usize) -> u8 {
        if i < self.pre.len() {
            self.pre[i]
        } else {
            self.rep[(i - self.pre.len()) % self.rep.len()]
        }
    }

    /// The first `k` symbols.
    pub fn prefix(&self, k: usize) -> Word {
        Word { symbols: (0..k).map(|i| self.symbol(i)).collect(), alphabet: self.alphabet }
    }

    /// Index of the depth-`k` cylinder containing the point.
    pub fn cell_index(&self, k: usize) -> usize {
        let d = self.alphabet as usize;
        (0..k).fold(0, |acc, i| acc * d + self.symbol(i) as usize)
    }

    /// `σ(x)`.
    pub fn shift(&self) -> EvPoint {
        if self.pre.is_empty() {
            let mut rep = self.rep.clone();
            rep.rotate_left(1);
            EvPoint { pre: Vec::new(), rep, alphabet: self.alphabet }
        } else {
            EvPoint { pre: self.pre[1..].to_vec(), rep: self.rep.clone(), alphabet: self.alphabet }
        }
    }

    /// `σ^n(x)`.
    pub fn shift_by(&self, n: usize) -> EvPoint {
        if n <= self.pre.len() {
            return EvPoint { pre: self.pre[n..].to_vec(), rep: self.rep.clone(), alphabet: self.alphabet };
        }
        let mut rep = self.rep.clone();
        let r = (n - self.pre.len()) % rep.len();
        rep.rotate_left(r);
        EvPoint { pre: Vec::new(), rep, alphabet: self.alphabet }
    }

    /// First index at which the two sequences differ.
    pub fn first_disagreement(&self, other: &EvPoint) -> Option<usize> {
        let horizon = self.pre.len().max(other.pre.len()) + lcm(self.rep.len(), other.rep.len());
        (0..horizon).find(|&i| self.symbol(i) != other.symbol(i))
    }
}

impl fmt::Display for EvPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_digits(f, &self.pre)?;
        f.write_str("|")?;
        write_digits(f, &self.rep)
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: usize, b: usize) -> usize {
    a / gcd(a, b) * b
}

/// Orbit of a periodic point, stored as its primitive, lexicographically
/// least block.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PeriodicOrbit {
    word: Word,
}

impl PeriodicOrbit {
    pub fn word(&self) -> &Word {
        &self.word
    }

    pub fn period(&self) -> usize {
        self.word.len()
    }

    pub fn alphabet(&self) -> u8 {
        self.word.alphabet
    }

    /// The `p` points `σ^j(w^∞)`, `j = 0..p`.
    pub fn points(&self) -> Vec<EvPoint> {
        (0..self.period())
            .map(|j| EvPoint { pre: Vec::new(), rep: self.word.rotate_left(j).symbols, alphabet: self.word.alphabet })
            .collect()
    }
}

impl fmt::Display for PeriodicOrbit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})", self.word)
    }
}

/// Orbit of `w^∞`.
pub fn canonical_orbit(w: &Word) -> Result<PeriodicOrbit> {
    if w.is_empty() {
        return Err(Error::InvalidWord("empty word has no periodic point".into()));
    }
    Ok(PeriodicOrbit { word: w.primitive_root().least_rotation() })
}

/// Which periodic orbits count as "length n".
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PeriodMode {
    /// All fixed points of `σ^n` (period dividing `n`).
    #[default]
    Dividing,
    /// Primitive period exactly `n`.
    Exact,
}

/// All orbits of `σ^n`-fixed points, sorted by primitive word.
///
/// Brute force over the `d^n` words of length `n`, keeping least rotations.
pub fn enumerate_fix(n: usize, d: u8, mode: PeriodMode, cap: u128) -> Result<Vec<PeriodicOrbit>> {
    check_alphabet(d)?;
    if n == 0 {
        return Err(Error::InvalidWord("orbit length must be positive".into()));
    }
    let needed = (d as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if needed > cap {
        return Err(Error::ResourceCap { what: "periodic orbit enumeration", needed, cap });
    }
    let mut out = Vec::new();
    for index in 0..needed as usize {
        let w = Word::from_index(index, n, d);
        if !Word::is_least_rotation(&w.symbols) {
            continue;
        }
        let root = w.primitive_root();
        if mode == PeriodMode::Exact && root.len() != n {
            continue;
        }
        out.push(PeriodicOrbit { word: root });
    }
    out.sort();
    Ok(out)
}

/// Same orbits as [`enumerate_fix`], generated directly as Lyndon words
/// (Duval's algorithm). Output is in lexicographic order and costs time
/// proportional to the number of orbits rather than `d^n`.
pub fn enumerate_fix_fast(n: usize, d: u8, mode: PeriodMode) -> Result<Vec<PeriodicOrbit>> {
    check_alphabet(d)?;
    if n == 0 {
        return Err(Error::InvalidWord("orbit length must be positive".into()));
    }
    let top = d as i16 - 1;
    let mut w: Vec<i16> = vec![-1];
    let mut out = Vec::new();
    while !w.is_empty() {
        *w.last_mut().unwrap() += 1;
        let m = w.len();
        if n % m == 0 && (mode == PeriodMode::Dividing || m == n) {
            let symbols = w.iter().map(|&s| s as u8).collect();
            out.push(PeriodicOrbit { word: Word { symbols, alphabet: d } });
        }
        while w.len() < n {
            let s = w[w.len() - m];
            w.push(s);
        }
        while w.last() == Some(&top) {
            w.pop();
        }
    }
    Ok(out)
}

/// The ultrametric `d(x, y) = λ^m`, `m` the first index where `x`, `y` differ.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metric {
    pub lambda: f64,
}

impl Default for Metric {
    fn default() -> Self {
        Metric { lambda: 0.5 }
    }
}

impl Metric {
    pub fn new(lambda: f64) -> Result<Self> {
        if lambda > 0.0 && lambda < 1.0 {
            Ok(Metric { lambda })
        } else {
            Err(Error::InvalidPoint { text: lambda.to_string(), reason: "metric base must lie in (0,1)".into() })
        }
    }

    pub fn pow(&self, m: usize) -> f64 {
        self.lambda.powi(m as i32)
    }

    pub fn distance(&self, x: &EvPoint, y: &EvPoint) -> f64 {
        match x.first_disagreement(y) {
            Some(m) => self.pow(m),
            None => 0.0,
        }
    }

    /// Exact `(min, max)` of `d(y, a)` over `y` in the cylinder `[w]`.
    pub fn range_to_point(&self, w: &Word, a: &EvPoint) -> (f64, f64) {
        match w.symbols.iter().enumerate().position(|(i, &s)| a.symbol(i) != s) {
            Some(m) => (self.pow(m), self.pow(m)),
            None => (0.0, self.pow(w.len())),
        }
    }

    /// Exact `(min, max)` of `d(x, y)` over `x ∈ [u]`, `y ∈ [v]`.
    pub fn range_between(&self, u: &Word, v: &Word) -> (f64, f64) {
        let common = u.len().min(v.len());
        match (0..common).find(|&i| u.symbols[i] != v.symbols[i]) {
            Some(m) => (self.pow(m), self.pow(m)),
            None => (0.0, self.pow(common)),
        }
    }
}

/// `d(x, y)` under the default base `λ = 1/2`.
pub fn metric_distance(x: &EvPoint, y: &EvPoint) -> f64 {
    Metric::default().distance(x, y)
}
