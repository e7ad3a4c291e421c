use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::{Arc, Mutex};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use super::embed::{ComplexInterval, RootChoice};
use super::interval::{magnitude_bits, pow2_neg, round_down, round_up, Interval};
use super::poly;
use super::{ExactError, Rational};

/// A number field `Q(theta)` of degree 1 to 3, where `theta` is the unique
/// real root of `minpoly` inside a rational isolating interval.
pub struct NumberField {
    minpoly: Vec<BigInt>,
    /// `minpoly` divided by its leading coefficient.
    monic: Vec<Rational>,
    interval: (Rational, Rational),
    /// Sign of `minpoly` at the lower end of any isolating interval.
    lo_sign: Ordering,
    refined: Mutex<(Rational, Rational)>,
    conj_cache: Mutex<HashMap<(RootChoice, u32), ComplexInterval>>,
}

impl fmt::Debug for NumberField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NumberField")
            .field("minpoly", &self.minpoly)
            .field("interval", &self.interval)
            .finish()
    }
}

/// Validates `minpoly` (ascending integer coefficients) and the isolating
/// interval and returns the field it defines.
pub fn make_field(
    minpoly: Vec<BigInt>,
    lo: Rational,
    hi: Rational,
) -> Result<Arc<NumberField>, ExactError> {
    let mut minpoly = minpoly;
    while minpoly.len() > 1 && minpoly.last().is_some_and(|c| c.is_zero()) {
        minpoly.pop();
    }
    let d = minpoly.len().saturating_sub(1);
    if !(1..=3).contains(&d) {
        return Err(ExactError::UnsupportedDegree(d));
    }
    if lo >= hi {
        return Err(ExactError::EmptyInterval);
    }
    let lead = Rational::from_integer(minpoly[d].clone());
    let monic: Vec<Rational> = minpoly
        .iter()
        .map(|c| Rational::from_integer(c.clone()) / &lead)
        .collect();
    if d == 1 {
        let root = -monic[0].clone();
        if root < lo || root > hi {
            return Err(ExactError::NoRootInInterval);
        }
        return Ok(Arc::new(NumberField {
            minpoly,
            monic,
            interval: (lo, hi),
            lo_sign: Ordering::Less,
            refined: Mutex::new((root.clone(), root)),
            conj_cache: Mutex::new(HashMap::new()),
        }));
    }
    if let Some(r) = poly::rational_roots(&minpoly).into_iter().next() {
        return Err(ExactError::Reducible(r));
    }
    let seq = poly::sturm_sequence(&monic);
    match poly::count_roots(&seq, &lo, &hi) {
        0 => return Err(ExactError::NoRootInInterval),
        1 => {}
        _ => return Err(ExactError::MultipleRootsInInterval),
    }
    let lo_sign = poly::sign_at(&monic, &lo);
    Ok(Arc::new(NumberField {
        minpoly,
        monic,
        interval: (lo.clone(), hi.clone()),
        lo_sign,
        refined: Mutex::new((lo, hi)),
        conj_cache: Mutex::new(HashMap::new()),
    }))
}

impl NumberField {
    /// The field of rationals, presented as `Q(0)` with minimal polynomial `x`.
    pub fn rationals() -> Arc<NumberField> {
        make_field(
            vec![BigInt::zero(), BigInt::one()],
            Rational::from_integer(BigInt::from(-1)),
            Rational::one(),
        )
        .expect("x is a valid degree-1 minimal polynomial")
    }

    pub fn degree(&self) -> usize {
        self.minpoly.len() - 1
    }

    pub fn minpoly(&self) -> &[BigInt] {
        &self.minpoly
    }

    pub(crate) fn monic(&self) -> &[Rational] {
        &self.monic
    }

    /// The isolating interval as given at construction.
    pub fn interval(&self) -> (&Rational, &Rational) {
        (&self.interval.0, &self.interval.1)
    }

    pub fn is_rational(&self) -> bool {
        self.degree() == 1
    }

    /// Two fields are the same when their monic minimal polynomials agree and
    /// their isolating intervals select the same root.
    pub fn same_as(&self, other: &NumberField) -> bool {
        if std::ptr::eq(self, other) {
            return true;
        }
        if self.monic != other.monic {
            return false;
        }
        if self.is_rational() {
            return true;
        }
        let lo = std::cmp::max(&self.interval.0, &other.interval.0);
        let hi = std::cmp::min(&self.interval.1, &other.interval.1);
        if lo > hi {
            return false;
        }
        if lo == hi {
            return poly::eval(&self.monic, lo).is_zero();
        }
        let seq = poly::sturm_sequence(&self.monic);
        poly::count_roots(&seq, lo, hi) == 1
    }

    /// An interval around the distinguished root `theta` of width at most
    /// `2^-bits`. Refinements are cached and shared by all elements.
    pub fn root_interval(&self, bits: u32) -> (Rational, Rational) {
        let mut guard = self.refined.lock().unwrap_or_else(|e| e.into_inner());
        let target = pow2_neg(bits);
        while &guard.1 - &guard.0 > target {
            let next = self.refine_step(&guard.0, &guard.1, bits);
            *guard = next;
        }
        guard.clone()
    }

    fn refine_step(&self, lo: &Rational, hi: &Rational, bits: u32) -> (Rational, Rational) {
        let width = hi - lo;
        let two = Rational::from_integer(BigInt::from(2));
        let mid = (lo + hi) / &two;
        // Newton step from the midpoint; accepted only if a sign change
        // certifies a much smaller bracket.
        let f_mid = poly::eval(&self.monic, &mid);
        if f_mid.is_zero() {
            return (mid.clone(), mid);
        }
        let df = poly::eval(&poly::derivative(&self.monic), &mid);
        if !df.is_zero() {
            let cur_bits = width_bits(&width);
            let want = std::cmp::min(2 * cur_bits + 4, bits + 8).max(cur_bits + 2);
            let h = pow2_neg(want);
            let x = &mid - &f_mid / &df;
            let x = round_down(&x, want + 2);
            let a = &x - &h;
            let b = &x + &h;
            if &a > lo && &b < hi {
                let sa = poly::sign_at(&self.monic, &a);
                let sb = poly::sign_at(&self.monic, &b);
                if sa == Ordering::Equal {
                    return (a.clone(), a);
                }
                if sb == Ordering::Equal {
                    return (b.clone(), b);
                }
                if sa == self.lo_sign && sb != self.lo_sign {
                    return (a, b);
                }
            }
        }
        if f_mid.cmp(&Rational::zero()) == self.lo_sign {
            (mid, hi.clone())
        } else {
            (lo.clone(), mid)
        }
    }

    pub(crate) fn conj_cache(&self) -> &Mutex<HashMap<(RootChoice, u32), ComplexInterval>> {
        &self.conj_cache
    }

    pub fn generator(self: &Arc<Self>) -> FieldElement {
        let mut coords = vec![Rational::zero(); self.degree()];
        if self.degree() == 1 {
            coords[0] = -self.monic[0].clone();
        } else {
            coords[1] = Rational::one();
        }
        FieldElement {
            field: Arc::clone(self),
            coords,
        }
    }
}

fn width_bits(w: &Rational) -> u32 {
    // Largest k with w <= 2^-k, for 0 < w <= 1.
    if w.is_zero() {
        return u32::MAX / 4;
    }
    let mut k = w.denom().bits() as i64 - w.numer().bits() as i64 - 1;
    if k < 0 {
        k = 0;
    }
    k as u32
}

/// An element `c_0 + c_1 theta + ... + c_{d-1} theta^(d-1)` of a number field.
#[derive(Clone)]
pub struct FieldElement {
    field: Arc<NumberField>,
    coords: Vec<Rational>,
}

impl fmt::Debug for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FieldElement(")?;
        for (i, c) in self.coords.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

impl PartialEq for FieldElement {
    fn eq(&self, other: &Self) -> bool {
        self.coords == other.coords && self.field.same_as(&other.field)
    }
}

impl Eq for FieldElement {}

impl Hash for FieldElement {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.coords.hash(state);
    }
}

impl FieldElement {
    pub fn new(field: &Arc<NumberField>, coords: Vec<Rational>) -> Self {
        let d = field.degree();
        assert!(coords.len() <= d, "too many coordinates for the field degree");
        let mut coords = coords;
        coords.resize(d, Rational::zero());
        FieldElement {
            field: Arc::clone(field),
            coords,
        }
    }

    pub fn from_rational(field: &Arc<NumberField>, x: Rational) -> Self {
        Self::new(field, vec![x])
    }

    pub fn from_int(field: &Arc<NumberField>, n: i64) -> Self {
        Self::from_rational(field, Rational::from_integer(BigInt::from(n)))
    }

    pub fn from_bigint(field: &Arc<NumberField>, n: &BigInt) -> Self {
        Self::from_rational(field, Rational::from_integer(n.clone()))
    }

    pub fn zero(field: &Arc<NumberField>) -> Self {
        Self::from_int(field, 0)
    }

    pub fn one(field: &Arc<NumberField>) -> Self {
        Self::from_int(field, 1)
    }

    pub fn field(&self) -> &Arc<NumberField> {
        &self.field
    }

    pub fn coords(&self) -> &[Rational] {
        &self.coords
    }

    /// Moves the element into an equal field object (same minimal polynomial
    /// and root); rationals can be lifted into any field.
    pub fn rehome(&self, target: &Arc<NumberField>) -> Result<Self, ExactError> {
        if self.field.same_as(target) {
            return Ok(FieldElement {
                field: Arc::clone(target),
                coords: self.coords.clone(),
            });
        }
        match self.as_rational() {
            Some(q) => Ok(Self::from_rational(target, q)),
            None => Err(ExactError::FieldMismatch),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|c| c.is_zero())
    }

    /// The rational value, if the element lies in `Q`.
    pub fn as_rational(&self) -> Option<Rational> {
        if self.coords.iter().skip(1).all(|c| c.is_zero()) {
            Some(self.coords[0].clone())
        } else {
            None
        }
    }

    fn check_same(&self, other: &Self) -> Result<(), ExactError> {
        if Arc::ptr_eq(&self.field, &other.field) || self.field.same_as(&other.field) {
            Ok(())
        } else {
            Err(ExactError::FieldMismatch)
        }
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self, ExactError> {
        self.check_same(other)?;
        let coords = self
            .coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| a + b)
            .collect();
        Ok(self.with_coords(coords))
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self, ExactError> {
        self.check_same(other)?;
        let coords = self
            .coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| a - b)
            .collect();
        Ok(self.with_coords(coords))
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self, ExactError> {
        self.check_same(other)?;
        let d = self.coords.len();
        let mut prod = vec![Rational::zero(); 2 * d - 1];
        for (i, a) in self.coords.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coords.iter().enumerate() {
                if !b.is_zero() {
                    prod[i + j] += a * b;
                }
            }
        }
        Ok(self.with_coords(self.reduce(prod)))
    }

    pub fn checked_div(&self, other: &Self) -> Result<Self, ExactError> {
        self.check_same(other)?;
        let inv = other.inverse()?;
        self.checked_mul(&inv)
    }

    pub fn inverse(&self) -> Result<Self, ExactError> {
        if self.is_zero() {
            return Err(ExactError::DivisionByZero);
        }
        if let Some(q) = self.as_rational() {
            return Ok(self.with_coords(vec_from(q.recip(), self.coords.len())));
        }
        let d = self.coords.len();
        // Solve M y = e_0 where column j of M holds the coordinates of x * theta^j.
        let m = self.mult_matrix();
        let mut aug: Vec<Vec<Rational>> = (0..d)
            .map(|i| {
                let mut row: Vec<Rational> = (0..d).map(|j| m[j][i].clone()).collect();
                row.push(if i == 0 { Rational::one() } else { Rational::zero() });
                row
            })
            .collect();
        for col in 0..d {
            let piv = (col..d)
                .find(|&r| !aug[r][col].is_zero())
                .ok_or(ExactError::DivisionByZero)?;
            aug.swap(col, piv);
            let p = aug[col][col].clone();
            for v in aug[col].iter_mut() {
                *v = &*v / &p;
            }
            for r in 0..d {
                if r != col && !aug[r][col].is_zero() {
                    let k = aug[r][col].clone();
                    let pivot_row = aug[col].clone();
                    for (x, y) in aug[r].iter_mut().zip(&pivot_row) {
                        *x -= &k * y;
                    }
                }
            }
        }
        Ok(self.with_coords(aug.into_iter().map(|row| row[d].clone()).collect()))
    }

    /// Columns are the coordinates of `self * theta^j`.
    fn mult_matrix(&self) -> Vec<Vec<Rational>> {
        let d = self.coords.len();
        let theta = self.field.generator();
        let mut cols = Vec::with_capacity(d);
        let mut cur = self.clone();
        for _ in 0..d {
            cols.push(cur.coords.clone());
            cur = &cur * &theta;
        }
        cols
    }

    /// Characteristic polynomial of multiplication by `self`, monic,
    /// ascending coefficients (length `d + 1`).
    pub fn char_poly(&self) -> Vec<Rational> {
        let d = self.coords.len();
        let m = self.mult_matrix();
        // Faddeev-LeVerrier: M_k = A M_{k-1} + c_{d-k+1} I, c_{d-k} = -tr(A M_k)/k.
        let a = |i: usize, j: usize| m[j][i].clone();
        let mut coeffs = vec![Rational::zero(); d + 1];
        coeffs[d] = Rational::one();
        let mut mk: Vec<Vec<Rational>> = vec![vec![Rational::zero(); d]; d];
        for k in 1..=d {
            // mk <- A * mk + c_{d-k+1} I
            let c_prev = coeffs[d - k + 1].clone();
            let mut next = vec![vec![Rational::zero(); d]; d];
            for (i, row) in next.iter_mut().enumerate() {
                for (j, cell) in row.iter_mut().enumerate() {
                    let mut s = Rational::zero();
                    for (l, mrow) in mk.iter().enumerate() {
                        s += a(i, l) * &mrow[j];
                    }
                    if i == j {
                        s += &c_prev;
                    }
                    *cell = s;
                }
            }
            mk = next;
            let mut tr = Rational::zero();
            for (i, _) in mk.iter().enumerate() {
                for (l, mrow) in mk.iter().enumerate() {
                    tr += a(i, l) * &mrow[i];
                }
            }
            coeffs[d - k] = -tr / Rational::from_integer(BigInt::from(k));
        }
        coeffs
    }

    fn with_coords(&self, coords: Vec<Rational>) -> Self {
        FieldElement {
            field: Arc::clone(&self.field),
            coords,
        }
    }

    fn reduce(&self, mut p: Vec<Rational>) -> Vec<Rational> {
        let d = self.coords.len();
        let monic = self.field.monic();
        for k in (d..p.len()).rev() {
            let c = std::mem::take(&mut p[k]);
            if c.is_zero() {
                continue;
            }
            // theta^k = theta^(k-d) * theta^d = -sum monic[i] theta^(k-d+i)
            for (i, m) in monic.iter().enumerate().take(d) {
                if !m.is_zero() {
                    p[k - d + i] -= &c * m;
                }
            }
        }
        p.truncate(d);
        p
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = FieldElement::one(&self.field);
        let mut base = self.clone();
        let mut k = e;
        while k > 0 {
            if k & 1 == 1 {
                acc = &acc * &base;
            }
            k >>= 1;
            if k > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    /// An interval containing the real value of the element, of width about
    /// `2^-bits` (the working precision grows with the coordinate sizes).
    pub fn enclose(&self, bits: u32) -> Interval {
        if let Some(q) = self.as_rational() {
            return Interval::point(q);
        }
        let work = self.work_bits(bits);
        let (lo, hi, den) = self.eval_fixed(work);
        // Round outward to multiples of 2^-(bits + 8) with one division each.
        let out = bits as usize + 8;
        let lo = (lo << out).div_floor(&den);
        let hi = (hi << out).div_ceil(&den);
        let scale = BigInt::one() << out;
        Interval::new(Rational::new(lo, scale.clone()), Rational::new(hi, scale))
    }

    /// Working precision for an enclosure of width about `2^-bits`, allowing
    /// for cancellation between coordinates.
    fn work_bits(&self, bits: u32) -> u32 {
        let coord_bits = self
            .coords
            .iter()
            .filter_map(magnitude_bits)
            .max()
            .unwrap_or(0)
            .max(0) as u32;
        let (lo0, hi0) = self.field.interval();
        let theta_bits = magnitude_bits(lo0)
            .into_iter()
            .chain(magnitude_bits(hi0))
            .max()
            .unwrap_or(0)
            .max(0) as u32;
        let d = self.coords.len() as u32;
        bits + coord_bits + d * (theta_bits + 2) + 16
    }

    /// Evaluates the element on an enclosure of `theta` with integer
    /// endpoints scaled by `2^-w`, without any gcd work. Returns integers
    /// `lo <= hi` and a positive denominator with `lo/den <= x <= hi/den`.
    fn eval_fixed(&self, w: u32) -> (BigInt, BigInt, BigInt) {
        let den = self
            .coords
            .iter()
            .fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
        let nums: Vec<BigInt> = self
            .coords
            .iter()
            .map(|c| c.numer() * (&den / c.denom()))
            .collect();
        let (rlo, rhi) = self.field.root_interval(w);
        let scale = BigInt::one() << w;
        let tl = (&rlo * Rational::from_integer(scale.clone())).floor().to_integer();
        let th = (&rhi * Rational::from_integer(scale)).ceil().to_integer();
        // Horner on integers; after k steps the accumulator carries 2^(k w).
        let mut lo = nums[nums.len() - 1].clone();
        let mut hi = lo.clone();
        for (k, a) in nums.iter().rev().skip(1).enumerate() {
            let ps = [&lo * &tl, &lo * &th, &hi * &tl, &hi * &th];
            let shifted = a << (w as usize * (k + 1));
            lo = ps.iter().min().unwrap() + &shifted;
            hi = ps.iter().max().unwrap() + &shifted;
        }
        let den = den << (w as usize * (nums.len() - 1));
        (lo, hi, den)
    }

    /// Exact sign of the real value.
    pub fn sign(&self) -> Ordering {
        if self.is_zero() {
            return Ordering::Equal;
        }
        let base = self.work_bits(0);
        let mut bits = 64;
        loop {
            let (lo, hi, _) = self.eval_fixed(base + bits);
            if lo.is_positive() {
                return Ordering::Greater;
            }
            if hi.is_negative() {
                return Ordering::Less;
            }
            bits *= 2;
        }
    }

    pub fn is_positive(&self) -> bool {
        self.sign() == Ordering::Greater
    }

    pub fn is_negative(&self) -> bool {
        self.sign() == Ordering::Less
    }

    pub fn abs(&self) -> Self {
        if self.is_negative() {
            -self
        } else {
            self.clone()
        }
    }

    /// Integer part and fractional part, `x = floor + frac` with `0 <= frac < 1`.
    pub fn floor_frac(&self) -> (BigInt, FieldElement) {
        let k = self.floor();
        let frac = self - &FieldElement::from_bigint(&self.field, &k);
        (k, frac)
    }

    pub fn floor(&self) -> BigInt {
        if let Some(q) = self.as_rational() {
            return q.floor().to_integer();
        }
        let mut bits = 64;
        loop {
            let iv = self.enclose(bits);
            let k_lo = iv.lo().floor().to_integer();
            let k_hi = iv.hi().floor().to_integer();
            if k_lo == k_hi {
                return k_lo;
            }
            if &k_hi - &k_lo == BigInt::one() {
                // Exactly one integer candidate c = k_hi in (lo, hi].
                let c = FieldElement::from_bigint(&self.field, &k_hi);
                return if (self - &c).sign() == Ordering::Less {
                    k_lo
                } else {
                    k_hi
                };
            }
            bits *= 2;
        }
    }

    pub fn fract(&self) -> FieldElement {
        self.floor_frac().1
    }

    /// Approximate value for display; never used for decisions.
    pub fn to_f64(&self) -> f64 {
        self.enclose(64).to_f64()
    }

    /// Decimal rendering with `digits` digits after the point, truncated toward
    /// the certified enclosure's lower end.
    pub fn to_decimal(&self, digits: usize) -> String {
        let bits = (digits as f64 * 3.33) as u32 + 16;
        decimal_string(&self.enclose(bits).mid(), digits)
    }
}

fn vec_from(q: Rational, d: usize) -> Vec<Rational> {
    let mut v = vec![Rational::zero(); d];
    v[0] = q;
    v
}

/// Decimal expansion of a rational rounded to `digits` fractional digits.
pub fn decimal_string(x: &Rational, digits: usize) -> String {
    let scale = BigInt::from(10).pow(digits as u32);
    let scaled = x * Rational::from_integer(scale.clone());
    let n = scaled.round().to_integer();
    let neg = n.is_negative();
    let n = n.abs();
    let (int, frac) = n.div_rem(&scale);
    let mut s = String::new();
    if neg {
        s.push('-');
    }
    s.push_str(&int.to_string());
    if digits > 0 {
        let f = frac.to_string();
        s.push('.');
        for _ in f.len()..digits {
            s.push('0');
        }
        s.push_str(&f);
    }
    s
}

impl PartialOrd for FieldElement {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.checked_sub(other).ok().map(|d| d.sign())
    }
}

/// Rounds a rational interval outward to multiples of `2^-bits`.
pub fn round_interval(lo: &Rational, hi: &Rational, bits: u32) -> Interval {
    Interval::new(round_down(lo, bits), round_up(hi, bits))
}

macro_rules! binop {
    ($trait:ident, $method:ident, $checked:ident) => {
        impl $trait<&FieldElement> for &FieldElement {
            type Output = FieldElement;
            fn $method(self, rhs: &FieldElement) -> FieldElement {
                self.$checked(rhs).expect(concat!(
                    "field element ",
                    stringify!($method),
                    " failed"
                ))
            }
        }
        impl $trait<FieldElement> for FieldElement {
            type Output = FieldElement;
            fn $method(self, rhs: FieldElement) -> FieldElement {
                (&self).$method(&rhs)
            }
        }
        impl $trait<&FieldElement> for FieldElement {
            type Output = FieldElement;
            fn $method(self, rhs: &FieldElement) -> FieldElement {
                (&self).$method(rhs)
            }
        }
        impl $trait<FieldElement> for &FieldElement {
            type Output = FieldElement;
            fn $method(self, rhs: FieldElement) -> FieldElement {
                self.$method(&rhs)
            }
        }
    };
}

binop!(Add, add, checked_add);
binop!(Sub, sub, checked_sub);
binop!(Mul, mul, checked_mul);
binop!(Div, div, checked_div);

impl Neg for &FieldElement {
    type Output = FieldElement;
    fn neg(self) -> FieldElement {
        self.with_coords(self.coords.iter().map(|c| -c).collect())
    }
}

impl Neg for FieldElement {
    type Output = FieldElement;
    fn neg(self) -> FieldElement {
        -&self
    }
}
