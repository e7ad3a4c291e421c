//! Numerical embeddings of field elements into the complex numbers with
//! rigorous error bounds.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use super::field::{decimal_string, FieldElement, NumberField};
use super::interval::{pow2_neg, Interval};
use super::{ExactError, Rational};

/// Which root of the minimal polynomial the generator is sent to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RootChoice {
    /// The distinguished real root selected by the isolating interval.
    Real,
    /// The `i`-th smallest of the other real roots.
    OtherReal(usize),
    /// A non-real root, in the upper or lower half plane.
    Complex { upper: bool },
}

impl fmt::Display for RootChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RootChoice::Real => write!(f, "real"),
            RootChoice::OtherReal(i) => write!(f, "real{}", i + 2),
            RootChoice::Complex { upper: true } => write!(f, "complex"),
            RootChoice::Complex { upper: false } => write!(f, "complex-conj"),
        }
    }
}

impl RootChoice {
    pub fn is_real(&self) -> bool {
        !matches!(self, RootChoice::Complex { .. })
    }

    /// The complex-conjugate choice (real choices are their own conjugate).
    pub fn conj(&self) -> RootChoice {
        match *self {
            RootChoice::Complex { upper } => RootChoice::Complex { upper: !upper },
            other => other,
        }
    }
}

/// A field embedding together with its precision settings.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Embedding {
    pub root: RootChoice,
    /// Starting working precision in bits.
    pub precision_bits: u32,
    /// Largest precision tried before giving up.
    pub precision_cap: u32,
}

pub const DEFAULT_PRECISION_CAP: u32 = 4096;

impl Embedding {
    pub fn new(root: RootChoice) -> Self {
        Embedding {
            root,
            precision_bits: 64,
            precision_cap: DEFAULT_PRECISION_CAP,
        }
    }

    pub fn with_precision(mut self, bits: u32) -> Self {
        self.precision_bits = bits.max(32);
        self
    }

    pub fn with_cap(mut self, cap: u32) -> Self {
        self.precision_cap = cap;
        self
    }
}

/// A rectangle `re + i im` in the complex plane.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ComplexInterval {
    pub re: Interval,
    pub im: Interval,
}

impl ComplexInterval {
    pub fn real(re: Interval) -> Self {
        ComplexInterval {
            re,
            im: Interval::zero(),
        }
    }

    pub fn from_rational(q: Rational) -> Self {
        Self::real(Interval::point(q))
    }

    pub fn add(&self, o: &Self) -> Self {
        ComplexInterval {
            re: self.re.add(&o.re),
            im: self.im.add(&o.im),
        }
    }

    pub fn sub(&self, o: &Self) -> Self {
        ComplexInterval {
            re: self.re.sub(&o.re),
            im: self.im.sub(&o.im),
        }
    }

    pub fn neg(&self) -> Self {
        ComplexInterval {
            re: self.re.neg(),
            im: self.im.neg(),
        }
    }

    pub fn mul(&self, o: &Self) -> Self {
        if self.im.is_point() && self.im.lo().is_zero() && o.im.is_point() && o.im.lo().is_zero() {
            return Self::real(self.re.mul(&o.re));
        }
        ComplexInterval {
            re: self.re.mul(&o.re).sub(&self.im.mul(&o.im)),
            im: self.re.mul(&o.im).add(&self.im.mul(&o.re)),
        }
    }

    pub fn scale(&self, k: &Rational) -> Self {
        ComplexInterval {
            re: self.re.scale(k),
            im: self.im.scale(k),
        }
    }

    pub fn conj(&self) -> Self {
        ComplexInterval {
            re: self.re.clone(),
            im: self.im.neg(),
        }
    }

    /// Enclosure of `|z|^2`.
    pub fn norm_sqr(&self) -> Interval {
        self.re.square().add(&self.im.square())
    }

    /// Quotient; `None` when the divisor may vanish.
    pub fn div(&self, o: &Self) -> Option<Self> {
        if o.im.is_point() && o.im.lo().is_zero() {
            let r = o.re.recip()?;
            return Some(ComplexInterval {
                re: self.re.mul(&r),
                im: self.im.mul(&r),
            });
        }
        let n = o.norm_sqr().recip()?;
        let num = self.mul(&o.conj());
        Some(ComplexInterval {
            re: num.re.mul(&n),
            im: num.im.mul(&n),
        })
    }

    pub fn round_out(&self, bits: u32) -> Self {
        ComplexInterval {
            re: self.re.round_out(bits),
            im: self.im.round_out(bits),
        }
    }

    /// Upper bound on `|z|`.
    pub fn abs_upper(&self) -> Rational {
        let a = self.re.mag();
        let b = self.im.mag();
        let s = Interval::point(&a * &a + &b * &b).sqrt(64).expect("nonnegative");
        s.hi().clone()
    }

    /// Lower bound on `|z|`.
    pub fn abs_lower(&self) -> Rational {
        let a = self.re.mig();
        let b = self.im.mig();
        let s = Interval::point(&a * &a + &b * &b).sqrt(64).expect("nonnegative");
        s.lo().clone()
    }

    /// Largest side length of the rectangle.
    pub fn radius(&self) -> Rational {
        let a = self.re.width();
        let b = self.im.width();
        if a > b {
            a
        } else {
            b
        }
    }

    pub fn is_real_point(&self) -> bool {
        self.im.is_point() && self.im.lo().is_zero()
    }

    pub fn contains_zero(&self) -> bool {
        self.re.contains_zero() && self.im.contains_zero()
    }

    pub fn to_f64(&self) -> (f64, f64) {
        (self.re.to_f64(), self.im.to_f64())
    }

    /// Midpoint rendered with `digits` decimals, e.g. `-0.629960+1.091123i`.
    pub fn to_decimal(&self, digits: usize) -> String {
        let re = decimal_string(&self.re.mid(), digits);
        if self.is_real_point() {
            return re;
        }
        let im = self.im.mid();
        let sign = if im.is_negative() { "-" } else { "+" };
        format!("{re}{sign}{}i", decimal_string(&im.abs(), digits))
    }
}

/// The value of an embedded element with the precision at which its error
/// bound was certified.
#[derive(Clone, Debug)]
pub struct ComplexBall {
    pub value: ComplexInterval,
    pub precision_bits: u32,
}

impl NumberField {
    /// Root choices available for this field (the distinguished root first).
    pub fn root_choices(self: &std::sync::Arc<Self>) -> Vec<RootChoice> {
        match self.degree() {
            1 => vec![RootChoice::Real],
            2 => vec![RootChoice::Real, RootChoice::OtherReal(0)],
            _ => {
                let (_, _, disc) = self.deflated_quadratic();
                if disc.is_negative() {
                    vec![
                        RootChoice::Real,
                        RootChoice::Complex { upper: true },
                        RootChoice::Complex { upper: false },
                    ]
                } else {
                    vec![
                        RootChoice::Real,
                        RootChoice::OtherReal(0),
                        RootChoice::OtherReal(1),
                    ]
                }
            }
        }
    }

    /// For a cubic, `f(x) / (x - theta) = x^2 + B x + C`; returns `(B, C, B^2 - 4C)`.
    fn deflated_quadratic(
        self: &std::sync::Arc<Self>,
    ) -> (FieldElement, FieldElement, FieldElement) {
        let m = self.monic();
        let theta = self.generator();
        let b = &FieldElement::from_rational(self, m[2].clone()) + &theta;
        let c = &(&FieldElement::from_rational(self, m[1].clone())
            + &(&FieldElement::from_rational(self, m[2].clone()) * &theta))
            + &(&theta * &theta);
        let disc = &(&b * &b) - &(&c * &FieldElement::from_int(self, 4));
        (b, c, disc)
    }

    /// Enclosure of the chosen root with width about `2^-bits`.
    pub fn root_enclosure(
        self: &std::sync::Arc<Self>,
        choice: RootChoice,
        bits: u32,
    ) -> Result<ComplexInterval, ExactError> {
        if !self.root_choices().contains(&choice) {
            return Err(ExactError::InvalidEmbedding(choice.to_string()));
        }
        if choice == RootChoice::Real {
            let (lo, hi) = self.root_interval(bits);
            return Ok(ComplexInterval::real(Interval::new(lo, hi)));
        }
        if let Some(hit) = self
            .conj_cache()
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .get(&(choice, bits))
        {
            return Ok(hit.clone());
        }
        let work = bits + 16;
        let half = Rational::new(BigInt::one(), BigInt::from(2));
        let out = if self.degree() == 2 {
            let other = &FieldElement::from_rational(self, -self.monic()[1].clone())
                - &self.generator();
            ComplexInterval::real(other.enclose(work))
        } else {
            let (b, _c, disc) = self.deflated_quadratic();
            let b_iv = b.enclose(work);
            let disc_iv = disc.enclose(work);
            match choice {
                RootChoice::Complex { upper } => {
                    let s = disc_iv.neg().sqrt(work).expect("negative discriminant");
                    let im = s.scale(&half);
                    ComplexInterval {
                        re: b_iv.neg().scale(&half),
                        im: if upper { im } else { im.neg() },
                    }
                }
                RootChoice::OtherReal(i) => {
                    let s = disc_iv.sqrt(work).expect("positive discriminant");
                    let s = if i == 0 { s.neg() } else { s };
                    ComplexInterval::real(b_iv.neg().add(&s).scale(&half))
                }
                RootChoice::Real => unreachable!(),
            }
        }
        .round_out(work);
        self.conj_cache()
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .insert((choice, bits), out.clone());
        Ok(out)
    }
}

/// Evaluates the coordinate polynomial of `x` at an enclosure of a root.
fn horner(x: &FieldElement, root: &ComplexInterval, bits: u32) -> ComplexInterval {
    let c = x.coords();
    let mut acc = ComplexInterval::from_rational(c[c.len() - 1].clone());
    for coef in c.iter().rev().skip(1) {
        acc = acc
            .mul(root)
            .add(&ComplexInterval::from_rational(coef.clone()))
            .round_out(bits);
    }
    acc
}

/// `sigma(x)` for the embedding `sigma` described by `e`, with a certified
/// enclosure of width at most `2^(8 - p) * scale`, where `p` is the precision
/// reached and `scale = sum |c_i| max(1, |theta'|)^i`.
pub fn embed(x: &FieldElement, e: &Embedding) -> Result<ComplexBall, ExactError> {
    if let Some(q) = x.as_rational() {
        return Ok(ComplexBall {
            value: ComplexInterval::from_rational(q),
            precision_bits: e.precision_bits,
        });
    }
    let field = x.field();
    let mut p = e.precision_bits.max(32);
    loop {
        if p > e.precision_cap {
            return Err(ExactError::PrecisionExhausted(e.precision_cap));
        }
        let root = field.root_enclosure(e.root, p + 8)?;
        let value = horner(x, &root, p + 16);
        let r = root.abs_upper().max(Rational::one());
        let mut scale = Rational::zero();
        let mut rp = Rational::one();
        for c in x.coords() {
            scale += c.abs() * &rp;
            rp *= &r;
        }
        if value.radius() <= pow2_neg(p) * Rational::from_integer(BigInt::from(256)) * scale {
            return Ok(ComplexBall {
                value,
                precision_bits: p,
            });
        }
        p = p.saturating_mul(2);
    }
}

/// Enclosure of `sigma(x)` with absolute width at most `2^-bits`, raising the
/// working precision as needed up to `cap`.
pub fn embed_abs(
    x: &FieldElement,
    root: RootChoice,
    bits: u32,
    cap: u32,
) -> Result<ComplexInterval, ExactError> {
    if let Some(q) = x.as_rational() {
        return Ok(ComplexInterval::from_rational(q));
    }
    let field = x.field();
    let coord_bits = x
        .coords()
        .iter()
        .map(|c| c.numer().bits() as u32)
        .max()
        .unwrap_or(0);
    let target = pow2_neg(bits);
    let mut p = (bits + coord_bits + 16).min(cap);
    loop {
        let root_iv = field.root_enclosure(root, p)?;
        let value = horner(x, &root_iv, p + 16);
        if value.radius() <= target {
            return Ok(value);
        }
        if p >= cap {
            return Err(ExactError::PrecisionExhausted(cap));
        }
        p = p.saturating_mul(2).min(cap);
    }
}

/// Sign of a real interval that is known to be nonzero, if certified.
pub fn certified_sign(iv: &Interval) -> Option<Ordering> {
    iv.strict_sign()
}
