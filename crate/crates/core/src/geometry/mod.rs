//! Cylinder cells: the set of points whose expansion starts with a given
//! digit word, as the image of the unit square (or of the triangle
//! `X <= Y` when the last digit has `a = b`) under the projective map
//!
//! ```text
//! (X, Y) -> ((p_{n-2} X + p_{n-1} Y + p_n) / (r_{n-2} X + r_{n-1} Y + r_n),
//!            (q_{n-2} X + q_{n-1} Y + q_n) / (r_{n-2} X + r_{n-1} Y + r_n))
//! ```
//!
//! Vertices, areas and the closed-form measures are exact rationals.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::exactnum::Rational;
use crate::expansion::{convergent_matrices, validate_word, ConvergentMatrix, Digit, ExpansionError};
use crate::report::Check;

/// Default bound on the number of words visited by an enumeration.
pub const DEFAULT_WORD_CAP: u64 = 10_000_000;

/// Tolerance for the truncated subdivision sums: `10^-6`.
pub const SUBDIVISION_TOLERANCE: (i64, i64) = (1, 1_000_000);

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GeometryError {
    #[error(transparent)]
    Word(#[from] ExpansionError),
    #[error("parameter ({x}, {y}) is outside the cell's parameter domain")]
    OutOfParameterDomain { x: String, y: String },
    #[error("t = {0} is outside [0, 1]")]
    TOutOfRange(String),
    #[error("region {region} does not apply to a {kind} cell")]
    RegionMismatch { region: String, kind: CellKind },
    #[error("m must be at least 2, got {0}")]
    InvalidM(u32),
    #[error("enumeration would visit {count} words, above the cap of {cap}")]
    EnumerationTooLarge { count: u128, cap: u64 },
    #[error("cannot parse digit word: {0}")]
    Parse(String),
}

pub type Point = (Rational, Rational);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CellKind {
    /// Last digit has `a < b`: parameters range over the unit square.
    Quadrangle,
    /// Last digit has `a = b`: parameters satisfy `0 <= X <= Y <= 1`.
    Triangle,
}

impl CellKind {
    pub fn of(last: &Digit) -> Self {
        if last.a == last.b {
            CellKind::Triangle
        } else {
            CellKind::Quadrangle
        }
    }

    /// Corner parameters in counterclockwise order.
    pub fn corners(self) -> &'static [(i64, i64)] {
        match self {
            CellKind::Quadrangle => &[(0, 0), (1, 0), (1, 1), (0, 1)],
            CellKind::Triangle => &[(0, 0), (1, 1), (0, 1)],
        }
    }

    pub fn contains_parameter(self, x: &Rational, y: &Rational) -> bool {
        let unit = |v: &Rational| !v.is_negative() && *v <= Rational::one();
        unit(x) && unit(y) && (self == CellKind::Quadrangle || x <= y)
    }
}

impl fmt::Display for CellKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CellKind::Quadrangle => "quadrangle",
            CellKind::Triangle => "triangle",
        })
    }
}

/// The last three denominators `r_{n-2}, r_{n-1}, r_n` of a word, which
/// determine every measure of its cell.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Denominators {
    pub r2: BigInt,
    pub r1: BigInt,
    pub r0: BigInt,
}

impl Denominators {
    /// Denominators of the empty word, so that one digit gives `(0, 0, 1)`.
    pub fn initial() -> Self {
        Denominators {
            r2: BigInt::one(),
            r1: BigInt::zero(),
            r0: BigInt::zero(),
        }
    }

    /// Shift in the next digit: `r_{n+1} = b r_n + a r_{n-1} + r_{n-2}`.
    pub fn push(&self, d: &Digit) -> Self {
        Denominators {
            r2: self.r1.clone(),
            r1: self.r0.clone(),
            r0: &d.b * &self.r0 + &d.a * &self.r1 + &self.r2,
        }
    }

    pub fn of_matrix(m: &ConvergentMatrix) -> Self {
        Denominators {
            r2: m.columns[0].r.clone(),
            r1: m.columns[1].r.clone(),
            r0: m.columns[2].r.clone(),
        }
    }
}

/// Measure of the part of a cell with parameter `X <= t`.
///
/// Quadrangle: `t (r2 t + r1 + 2 r0) / (2 r0 (r1 + r0) (r2 t + r0) (r2 t + r1 + r0))`.
/// Triangle: `t (r2 t + r1 + r0 (2 - t)) / (2 r0 (r1 + r0) (r2 t + r1 + r0) (r2 t + r1 t + r0))`.
pub fn measure_below(kind: CellKind, r: &Denominators, t: &Rational) -> Rational {
    let (r2, r1, r0) = (int(&r.r2), int(&r.r1), int(&r.r0));
    let two = Rational::from_integer(BigInt::from(2));
    let r2t = &r2 * t;
    let (num, den) = match kind {
        CellKind::Quadrangle => (
            t * (&r2t + &r1 + &two * &r0),
            &two * &r0 * (&r1 + &r0) * (&r2t + &r0) * (&r2t + &r1 + &r0),
        ),
        CellKind::Triangle => (
            t * (&r2t + &r1 + &r0 * (&two - t)),
            &two * &r0 * (&r1 + &r0) * (&r2t + &r1 + &r0) * (&r2t + &r1 * t + &r0),
        ),
    };
    num / den
}

/// Measure of the whole cell.
pub fn measure_full(kind: CellKind, r: &Denominators) -> Rational {
    measure_below(kind, r, &Rational::one())
}

#[derive(Clone, Debug)]
pub struct Cell {
    pub word: Vec<Digit>,
    pub matrix: ConvergentMatrix,
    pub kind: CellKind,
    pub vertices: Vec<Point>,
}

impl Cell {
    pub fn denominators(&self) -> Denominators {
        Denominators::of_matrix(&self.matrix)
    }

    /// Image of a parameter point, without the domain check.
    pub fn map(&self, x: &Rational, y: &Rational) -> Point {
        map_point(&self.matrix, x, y)
    }
}

fn last_matrix(word: &[Digit]) -> Result<ConvergentMatrix, GeometryError> {
    let mut ms = convergent_matrices(word)?;
    Ok(ms.pop().expect("validated word is nonempty"))
}

fn map_point(m: &ConvergentMatrix, x: &Rational, y: &Rational) -> Point {
    let [c2, c1, c0] = &m.columns;
    let lin = |a: &BigInt, b: &BigInt, c: &BigInt| int(a) * x + int(b) * y + int(c);
    let den = lin(&c2.r, &c1.r, &c0.r);
    (lin(&c2.p, &c1.p, &c0.p) / &den, lin(&c2.q, &c1.q, &c0.q) / &den)
}

/// The point of the cell of `word` with parameters `(x, y)`.
pub fn cell_map_eval(word: &[Digit], x: &Rational, y: &Rational) -> Result<Point, GeometryError> {
    validate_word(word)?;
    let kind = CellKind::of(word.last().expect("validated word is nonempty"));
    if !kind.contains_parameter(x, y) {
        return Err(GeometryError::OutOfParameterDomain {
            x: x.to_string(),
            y: y.to_string(),
        });
    }
    Ok(map_point(&last_matrix(word)?, x, y))
}

pub fn cell(word: &[Digit]) -> Result<Cell, GeometryError> {
    let matrix = last_matrix(word)?;
    let kind = CellKind::of(word.last().expect("validated word is nonempty"));
    let vertices = kind
        .corners()
        .iter()
        .map(|&(x, y)| map_point(&matrix, &small(x), &small(y)))
        .collect();
    Ok(Cell {
        word: word.to_vec(),
        matrix,
        kind,
        vertices,
    })
}

/// Shoelace area of a simple polygon.
pub fn shoelace(vertices: &[Point]) -> Rational {
    let n = vertices.len();
    let twice: Rational = (0..n)
        .map(|i| {
            let (a, b) = (&vertices[i], &vertices[(i + 1) % n]);
            &a.0 * &b.1 - &b.0 * &a.1
        })
        .sum();
    twice.abs() / Rational::from_integer(BigInt::from(2))
}

pub fn polygon_area(c: &Cell) -> Rational {
    shoelace(&c.vertices)
}

/// `S(t)` and `S(1)` for the cell of `word`, in the quadrangle or triangle
/// form according to its last digit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CellMeasure {
    pub kind: CellKind,
    pub below: Rational,
    pub full: Rational,
}

pub fn cell_measure(word: &[Digit], t: &Rational) -> Result<CellMeasure, GeometryError> {
    check_t(t)?;
    let m = last_matrix(word)?;
    let kind = CellKind::of(word.last().expect("validated word is nonempty"));
    let r = Denominators::of_matrix(&m);
    Ok(CellMeasure {
        kind,
        below: measure_below(kind, &r, t),
        full: measure_full(kind, &r),
    })
}

fn check_t(t: &Rational) -> Result<(), GeometryError> {
    if t.is_negative() || *t > Rational::one() {
        return Err(GeometryError::TOutOfRange(t.to_string()));
    }
    Ok(())
}

/// Parameter regions of a cell: `X >= t` and its complement `X < t`, over
/// the square for quadrangles and over `X <= Y` for triangles.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Region {
    Dt(Rational),
    DtComplement(Rational),
    DtPrime(Rational),
    DtPrimeComplement(Rational),
}

impl Region {
    pub fn t(&self) -> &Rational {
        match self {
            Region::Dt(t) | Region::DtComplement(t) | Region::DtPrime(t) | Region::DtPrimeComplement(t) => t,
        }
    }

    pub fn kind(&self) -> CellKind {
        match self {
            Region::Dt(_) | Region::DtComplement(_) => CellKind::Quadrangle,
            Region::DtPrime(_) | Region::DtPrimeComplement(_) => CellKind::Triangle,
        }
    }

    /// Corners in parameter coordinates, counterclockwise.
    pub fn parameter_polygon(&self) -> Vec<Point> {
        let (z, o) = (Rational::zero(), Rational::one());
        let t = self.t().clone();
        match self {
            Region::Dt(_) => vec![(t.clone(), z.clone()), (o.clone(), z), (o.clone(), o.clone()), (t, o)],
            Region::DtComplement(_) => vec![(z.clone(), z.clone()), (t.clone(), z.clone()), (t, o.clone()), (z, o)],
            Region::DtPrime(_) => vec![(t.clone(), t.clone()), (o.clone(), o.clone()), (t, o)],
            Region::DtPrimeComplement(_) => vec![(z.clone(), z.clone()), (t.clone(), t.clone()), (t, o.clone()), (z, o)],
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Region::Dt(_) => "D_t",
            Region::DtComplement(_) => "complement of D_t",
            Region::DtPrime(_) => "D'_t",
            Region::DtPrimeComplement(_) => "complement of D'_t",
        };
        write!(f, "{name} (t = {})", self.t())
    }
}

/// Area of the image of a parameter region, from its mapped corners and from
/// the closed form. Segments map to segments, so the image is a polygon.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RegionMeasure {
    pub polygon: Rational,
    pub formula: Rational,
}

pub fn region_measure(word: &[Digit], region: &Region) -> Result<RegionMeasure, GeometryError> {
    check_t(region.t())?;
    let c = cell(word)?;
    if c.kind != region.kind() {
        return Err(GeometryError::RegionMismatch {
            region: region.to_string(),
            kind: c.kind,
        });
    }
    let image: Vec<Point> = region.parameter_polygon().iter().map(|(x, y)| c.map(x, y)).collect();
    let r = c.denominators();
    let below = measure_below(c.kind, &r, region.t());
    let formula = match region {
        Region::Dt(_) | Region::DtPrime(_) => measure_full(c.kind, &r) - below,
        _ => below,
    };
    Ok(RegionMeasure {
        polygon: shoelace(&image),
        formula,
    })
}

/// `(a + 1/y, b + x/y)`: the point of the cell of digit `(a, b)` that the map
/// sends to `(x, y)`.
pub fn inverse_branch(d: &Digit, q: &Point) -> Point {
    (int(&d.a) + q.1.recip(), int(&d.b) + &q.0 / &q.1)
}

/// Truncated subdivision of a cell into its one-digit extensions with
/// `b <= max_b`.
#[derive(Clone, Debug)]
pub struct SubdivisionReport {
    pub parent: Rational,
    /// Sum over extensions with `b <= B`, for `B = 1, ..., max_b`.
    pub partial_sums: Vec<Rational>,
    pub increasing: bool,
    pub bounded: bool,
    /// `parent - partial(max_b) - S(1 / (max_b + 1))`: the extensions with
    /// `b > max_b` are exactly the parameters `X < 1 / (max_b + 1)`.
    pub residual: Rational,
    pub pass: bool,
}

pub fn subdivision_check(word: &[Digit], max_b: u32) -> Result<SubdivisionReport, GeometryError> {
    let m = last_matrix(word)?;
    let last = word.last().expect("validated word is nonempty");
    let kind = CellKind::of(last);
    let r = Denominators::of_matrix(&m);
    let parent = measure_full(kind, &r);
    let a_min = if kind == CellKind::Triangle { 1 } else { 0 };
    let mut partial_sums = Vec::with_capacity(max_b as usize);
    let mut acc = Rational::zero();
    for b in 1..=i64::from(max_b) {
        let level: Rational = (a_min..=b)
            .map(|a| {
                let d = Digit::new(a, b);
                measure_full(CellKind::of(&d), &r.push(&d))
            })
            .sum();
        acc += level;
        partial_sums.push(acc.clone());
    }
    let increasing = partial_sums.windows(2).all(|w| w[0] < w[1]);
    let bounded = partial_sums.last().is_none_or(|s| *s < parent);
    let tail = measure_below(kind, &r, &Rational::new(BigInt::one(), BigInt::from(max_b + 1)));
    let residual = &parent - &acc - tail;
    let tol = Rational::new(BigInt::from(SUBDIVISION_TOLERANCE.0), BigInt::from(SUBDIVISION_TOLERANCE.1));
    let pass = increasing && bounded && residual.abs() < tol;
    Ok(SubdivisionReport {
        parent,
        partial_sums,
        increasing,
        bounded,
        residual,
        pass,
    })
}

/// Digits `(a, b)` with `1 <= b < m`, in lexicographic order.
fn bounded_digits(m: u32) -> Vec<Digit> {
    let m = i64::from(m);
    (1..m).flat_map(|b| (0..=b).map(move |a| Digit::new(a, b))).collect()
}

/// Number of admissible words with digits `b < m` of each length
/// `1, ..., depth + 1`.
pub fn count_words(m: u32, depth: usize) -> Vec<u128> {
    let mm = u128::from(m.max(1));
    // Digits after a quadrangle digit: all; after a triangle digit: a >= 1.
    let all = mm * (mm + 1) / 2 - 1;
    let tri = mm - 1;
    let after_tri = all - (mm - 1);
    let (mut q, mut t) = (all - tri, tri);
    let mut out = vec![q + t];
    for _ in 0..depth {
        let nq = q.saturating_mul(all - tri).saturating_add(t.saturating_mul(after_tri - tri));
        let nt = (q.saturating_add(t)).saturating_mul(tri);
        q = nq;
        t = nt;
        out.push(q.saturating_add(t));
    }
    out
}

/// One level of the bounded-digit union.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecayRow {
    pub n: usize,
    pub words: u128,
    /// `|D_m(n)|`, the sum of the cell measures.
    pub measure: Rational,
    /// `(1 - 1/m^2) |D_m(n - 1)|`, absent at `n = 0`.
    pub bound: Option<Rational>,
    /// `sum of S(1) - S(1/m)` over the words of length `n + 1`: the part of
    /// each cell whose next digit has `b < m`.
    pub next_from_tails: Rational,
    /// `measure < bound`, and at `n = 0` `measure = (m^2 - 1) / 2`.
    pub pass: bool,
}

#[derive(Clone, Debug)]
pub struct DecayReport {
    pub m: u32,
    pub depth: usize,
    pub rows: Vec<DecayRow>,
    /// `|D_m(n + 1)|` equals the tail sum of level `n` at every level.
    pub tails_match: bool,
    pub pass: bool,
}

pub fn enumerate_and_decay(m: u32, depth: usize) -> Result<DecayReport, GeometryError> {
    enumerate_and_decay_with_cap(m, depth, DEFAULT_WORD_CAP)
}

/// Sums the cell measures of all admissible words with digits `b < m` up to
/// length `depth + 1`. Words are split by first digit across threads; the
/// per-level sums are merged in digit order, so the result does not depend
/// on the thread count.
pub fn enumerate_and_decay_with_cap(m: u32, depth: usize, cap: u64) -> Result<DecayReport, GeometryError> {
    if m < 2 {
        return Err(GeometryError::InvalidM(m));
    }
    let counts = count_words(m, depth);
    let total = counts.iter().fold(0u128, |a, &c| a.saturating_add(c));
    if total > u128::from(cap) {
        return Err(GeometryError::EnumerationTooLarge { count: total, cap });
    }
    let digits = bounded_digits(m);
    let inv_m = Rational::new(BigInt::one(), BigInt::from(m));
    let parts: Vec<Vec<(Rational, Rational)>> = digits
        .par_iter()
        .map(|d| {
            let mut levels = vec![(Rational::zero(), Rational::zero()); depth + 1];
            walk(&digits, d, &Denominators::initial(), 0, depth, &inv_m, &mut levels);
            levels
        })
        .collect();
    let mut levels = vec![(Rational::zero(), Rational::zero()); depth + 1];
    for part in parts {
        for (acc, (s, t)) in levels.iter_mut().zip(part) {
            acc.0 += s;
            acc.1 += t;
        }
    }
    let mm = Rational::from_integer(BigInt::from(m));
    let factor = Rational::one() - (&mm * &mm).recip();
    let base = (&mm * &mm - Rational::one()) / Rational::from_integer(BigInt::from(2));
    let mut rows: Vec<DecayRow> = Vec::with_capacity(depth + 1);
    for (n, (measure, next_from_tails)) in levels.into_iter().enumerate() {
        let bound = rows.last().map(|prev| &factor * &prev.measure);
        let pass = match &bound {
            None => measure == base,
            Some(b) => measure < *b,
        };
        rows.push(DecayRow {
            n,
            words: counts[n],
            measure,
            bound,
            next_from_tails,
            pass,
        });
    }
    let tails_match = rows.windows(2).all(|w| w[1].measure == w[0].next_from_tails);
    let pass = tails_match && rows.iter().all(|r| r.pass);
    Ok(DecayReport {
        m,
        depth,
        rows,
        tails_match,
        pass,
    })
}

fn walk(
    digits: &[Digit],
    d: &Digit,
    parent: &Denominators,
    level: usize,
    depth: usize,
    inv_m: &Rational,
    levels: &mut [(Rational, Rational)],
) {
    let r = parent.push(d);
    let kind = CellKind::of(d);
    let full = measure_full(kind, &r);
    let below = measure_below(kind, &r, inv_m);
    levels[level].1 += &full - below;
    levels[level].0 += full;
    if level == depth {
        return;
    }
    let tri = kind == CellKind::Triangle;
    for next in digits.iter().filter(|e| !tri || !e.a.is_zero()) {
        walk(digits, next, &r, level + 1, depth, inv_m, levels);
    }
}

/// Exact per-word checks: shoelace area against the closed form, the first
/// vertex against the last convergent, the parameter lines through the
/// corners, and `S(t) > t^2 S(1)` for `t` in `{1/4, 1/2, 3/4}`.
pub fn verify_cell(word: &[Digit]) -> Result<Vec<Check>, GeometryError> {
    let c = cell(word)?;
    let idx = word.len() as i64 - 1;
    let r = c.denominators();
    let full = measure_full(c.kind, &r);
    let mut checks = vec![Check::new("shoelace area equals closed form", idx, polygon_area(&c) == full)];
    let last = &c.matrix.columns[2];
    let conv = (
        Rational::new(last.p.clone(), last.r.clone()),
        Rational::new(last.q.clone(), last.r.clone()),
    );
    checks.push(Check::new("first vertex is the last convergent", idx, c.vertices[0] == conv));
    for k in 1..4 {
        let t = Rational::new(BigInt::from(k), BigInt::from(4));
        let on = |p: Point, a: Point, b: Point| on_segment(&p, &a, &b);
        let (z, o) = (Rational::zero(), Rational::one());
        let lines = [
            on(c.map(&t, &z), c.map(&z, &z), c.map(&o, &z)),
            on(c.map(&t, &o), c.map(&z, &o), c.map(&o, &o)),
            on(c.map(&t, &t), c.map(&z, &z), c.map(&o, &o)),
        ];
        checks.push(Check::new("parameter lines map to segments", idx, lines.iter().all(|&b| b)));
        let below = measure_below(c.kind, &r, &t);
        checks.push(Check::new("S(t) > t^2 S(1)", idx, below > &t * &t * &full));
        let complement = match c.kind {
            CellKind::Quadrangle => (Region::Dt(t.clone()), Region::DtComplement(t.clone())),
            CellKind::Triangle => (Region::DtPrime(t.clone()), Region::DtPrimeComplement(t.clone())),
        };
        let (a, b) = (region_measure(word, &complement.0)?, region_measure(word, &complement.1)?);
        checks.push(Check::new(
            "region images match closed forms and add up",
            idx,
            a.polygon == a.formula && b.polygon == b.formula && a.polygon + b.polygon == full,
        ));
    }
    Ok(checks)
}

/// `p` lies on the closed segment `ab`.
pub fn on_segment(p: &Point, a: &Point, b: &Point) -> bool {
    let cross = (&b.0 - &a.0) * (&p.1 - &a.1) - (&b.1 - &a.1) * (&p.0 - &a.0);
    let within = |v: &Rational, x: &Rational, y: &Rational| v >= x.min(y) && v <= x.max(y);
    cross.is_zero() && within(&p.0, &a.0, &b.0) && within(&p.1, &a.1, &b.1)
}

/// Parses `"a/b,a/b,..."` into digits.
pub fn parse_word(s: &str) -> Result<Vec<Digit>, GeometryError> {
    let bad = |p: &str| GeometryError::Parse(format!("expected a/b, got '{p}'"));
    let word = s
        .split(',')
        .map(str::trim)
        .map(|p| {
            let (a, b) = p.split_once('/').ok_or_else(|| bad(p))?;
            let a: BigInt = a.trim().parse().map_err(|_| bad(p))?;
            let b: BigInt = b.trim().parse().map_err(|_| bad(p))?;
            Ok(Digit { a, b })
        })
        .collect::<Result<Vec<_>, GeometryError>>()?;
    validate_word(&word)?;
    Ok(word)
}

pub fn format_word(word: &[Digit]) -> String {
    word.iter().map(|d| format!("{}/{}", d.a, d.b)).collect::<Vec<_>>().join(",")
}

fn int(n: &BigInt) -> Rational {
    Rational::from_integer(n.clone())
}

fn small(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}
