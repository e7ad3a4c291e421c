//! Outward-rounded rational interval arithmetic.
//!
//! Every operation returns an interval that is guaranteed to contain the
//! exact result for any choice of points in the operands. Endpoints are
//! rounded outward to dyadic rationals so that numerator and denominator
//! sizes stay proportional to the working precision.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::Rational;

/// A closed interval `[lo, hi]` with rational endpoints.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Interval {
    lo: Rational,
    hi: Rational,
}

/// Floor of `x * 2^bits` divided back, i.e. the largest multiple of `2^-bits` not above `x`.
pub fn round_down(x: &Rational, bits: u32) -> Rational {
    if x.denom().is_one() {
        return x.clone();
    }
    let scale = BigInt::one() << bits;
    let scaled = x * Rational::from_integer(scale.clone());
    Rational::new(scaled.floor().to_integer(), scale)
}

pub fn round_up(x: &Rational, bits: u32) -> Rational {
    if x.denom().is_one() {
        return x.clone();
    }
    let scale = BigInt::one() << bits;
    let scaled = x * Rational::from_integer(scale.clone());
    Rational::new(scaled.ceil().to_integer(), scale)
}

/// `2^-bits` as a rational.
pub fn pow2_neg(bits: u32) -> Rational {
    Rational::new(BigInt::one(), BigInt::one() << bits)
}

/// Position of the highest set bit of `|x|`, i.e. an integer `e` with
/// `2^(e-1) <= |x| < 2^e`; `None` for zero.
pub fn magnitude_bits(x: &Rational) -> Option<i64> {
    if x.is_zero() {
        return None;
    }
    let n = x.numer().abs();
    let d = x.denom().abs();
    let mut e = n.bits() as i64 - d.bits() as i64;
    // Adjust so that 2^(e-1) <= |x| < 2^e.
    let two = BigInt::from(2);
    let pow = |k: i64| -> Rational {
        if k >= 0 {
            Rational::from_integer(two.pow(k as u32))
        } else {
            Rational::new(BigInt::one(), two.pow((-k) as u32))
        }
    };
    let ax = x.abs();
    while ax >= pow(e) {
        e += 1;
    }
    while ax < pow(e - 1) {
        e -= 1;
    }
    Some(e)
}

impl Interval {
    pub fn new(lo: Rational, hi: Rational) -> Self {
        assert!(lo <= hi, "interval endpoints out of order");
        Interval { lo, hi }
    }

    pub fn point(x: Rational) -> Self {
        Interval {
            lo: x.clone(),
            hi: x,
        }
    }

    pub fn from_int(n: i64) -> Self {
        Self::point(Rational::from_integer(BigInt::from(n)))
    }

    pub fn zero() -> Self {
        Self::from_int(0)
    }

    pub fn lo(&self) -> &Rational {
        &self.lo
    }

    pub fn hi(&self) -> &Rational {
        &self.hi
    }

    pub fn width(&self) -> Rational {
        &self.hi - &self.lo
    }

    pub fn mid(&self) -> Rational {
        (&self.lo + &self.hi) / Rational::from_integer(BigInt::from(2))
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    pub fn contains(&self, x: &Rational) -> bool {
        &self.lo <= x && x <= &self.hi
    }

    pub fn contains_zero(&self) -> bool {
        !self.lo.is_positive() && !self.hi.is_negative()
    }

    /// Sign of every point in the interval, if they all agree and are nonzero.
    pub fn strict_sign(&self) -> Option<Ordering> {
        if self.lo.is_positive() {
            Some(Ordering::Greater)
        } else if self.hi.is_negative() {
            Some(Ordering::Less)
        } else {
            None
        }
    }

    /// Certified comparison: `Some` only if the intervals are disjoint
    /// (or both are the same point).
    pub fn certified_cmp(&self, other: &Interval) -> Option<Ordering> {
        if self.hi < other.lo {
            Some(Ordering::Less)
        } else if self.lo > other.hi {
            Some(Ordering::Greater)
        } else if self.is_point() && other.is_point() && self.lo == other.lo {
            Some(Ordering::Equal)
        } else {
            None
        }
    }

    /// Largest absolute value attained on the interval.
    pub fn mag(&self) -> Rational {
        let a = self.lo.abs();
        let b = self.hi.abs();
        if a > b {
            a
        } else {
            b
        }
    }

    /// Smallest absolute value attained on the interval.
    pub fn mig(&self) -> Rational {
        if self.contains_zero() {
            Rational::zero()
        } else {
            let a = self.lo.abs();
            let b = self.hi.abs();
            if a < b {
                a
            } else {
                b
            }
        }
    }

    pub fn round_out(&self, bits: u32) -> Self {
        Interval {
            lo: round_down(&self.lo, bits),
            hi: round_up(&self.hi, bits),
        }
    }

    pub fn add(&self, o: &Interval) -> Self {
        Interval {
            lo: &self.lo + &o.lo,
            hi: &self.hi + &o.hi,
        }
    }

    pub fn sub(&self, o: &Interval) -> Self {
        Interval {
            lo: &self.lo - &o.hi,
            hi: &self.hi - &o.lo,
        }
    }

    pub fn neg(&self) -> Self {
        Interval {
            lo: -&self.hi,
            hi: -&self.lo,
        }
    }

    pub fn mul(&self, o: &Interval) -> Self {
        if self.lo.is_negative() || o.lo.is_negative() {
            let c = [
                &self.lo * &o.lo,
                &self.lo * &o.hi,
                &self.hi * &o.lo,
                &self.hi * &o.hi,
            ];
            let lo = c.iter().min().unwrap().clone();
            let hi = c.iter().max().unwrap().clone();
            Interval { lo, hi }
        } else {
            Interval {
                lo: &self.lo * &o.lo,
                hi: &self.hi * &o.hi,
            }
        }
    }

    pub fn scale(&self, k: &Rational) -> Self {
        if k.is_negative() {
            Interval {
                lo: &self.hi * k,
                hi: &self.lo * k,
            }
        } else {
            Interval {
                lo: &self.lo * k,
                hi: &self.hi * k,
            }
        }
    }

    /// Reciprocal; `None` if the interval contains zero.
    pub fn recip(&self) -> Option<Self> {
        if self.contains_zero() {
            return None;
        }
        Some(Interval {
            lo: self.hi.recip(),
            hi: self.lo.recip(),
        })
    }

    pub fn div(&self, o: &Interval) -> Option<Self> {
        o.recip().map(|r| self.mul(&r))
    }

    pub fn abs(&self) -> Self {
        if self.lo.is_negative() && self.hi.is_positive() {
            Interval {
                lo: Rational::zero(),
                hi: self.mag(),
            }
        } else if self.hi.is_positive() || self.hi.is_zero() && !self.lo.is_negative() {
            self.clone()
        } else {
            self.neg()
        }
    }

    pub fn square(&self) -> Self {
        let a = self.abs();
        Interval {
            lo: &a.lo * &a.lo,
            hi: &a.hi * &a.hi,
        }
    }

    pub fn pow(&self, e: u32, bits: u32) -> Self {
        let mut acc = Interval::from_int(1);
        let mut base = self.clone();
        let mut k = e;
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul(&base).round_out(bits);
            }
            k >>= 1;
            if k > 0 {
                base = base.mul(&base).round_out(bits);
            }
        }
        acc
    }

    /// Hull of two intervals.
    pub fn hull(&self, o: &Interval) -> Self {
        Interval {
            lo: if self.lo < o.lo {
                self.lo.clone()
            } else {
                o.lo.clone()
            },
            hi: if self.hi > o.hi {
                self.hi.clone()
            } else {
                o.hi.clone()
            },
        }
    }

    /// Square root of the nonnegative part of the interval, with endpoints
    /// accurate to `2^-bits`. `None` if the whole interval is negative.
    pub fn sqrt(&self, bits: u32) -> Option<Self> {
        if self.hi.is_negative() {
            return None;
        }
        let lo = if self.lo.is_positive() {
            sqrt_floor(&self.lo, bits)
        } else {
            Rational::zero()
        };
        let hi = sqrt_ceil(&self.hi, bits);
        Some(Interval { lo, hi })
    }

    /// Natural logarithm of a strictly positive interval.
    pub fn ln(&self, bits: u32) -> Option<Self> {
        if !self.lo.is_positive() {
            return None;
        }
        let lo = ln_enclosure(&self.lo, bits).lo;
        let hi = ln_enclosure(&self.hi, bits).hi;
        Some(Interval { lo, hi })
    }

    /// Nearest `f64` to the midpoint; for display only.
    pub fn to_f64(&self) -> f64 {
        rational_to_f64(&self.mid())
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

pub fn rational_to_f64(x: &Rational) -> f64 {
    match (x.numer().to_f64(), x.denom().to_f64()) {
        (Some(n), Some(d)) if n.is_finite() && d.is_finite() && d != 0.0 => n / d,
        _ => {
            // Scale down huge numerators/denominators before dividing.
            let nb = x.numer().bits() as i64;
            let db = x.denom().bits() as i64;
            let shift_n = (nb - 60).max(0) as usize;
            let shift_d = (db - 60).max(0) as usize;
            let n = (x.numer() >> shift_n).to_f64().unwrap_or(0.0);
            let d = (x.denom() >> shift_d).to_f64().unwrap_or(1.0);
            n / d * 2f64.powi((shift_n as i64 - shift_d as i64) as i32)
        }
    }
}

fn sqrt_floor(x: &Rational, bits: u32) -> Rational {
    // floor(sqrt(x * 4^bits)) / 2^bits <= sqrt(x)
    let scaled = x * Rational::from_integer(BigInt::one() << (2 * bits));
    let s = scaled.floor().to_integer().sqrt();
    Rational::new(s, BigInt::one() << bits)
}

fn sqrt_ceil(x: &Rational, bits: u32) -> Rational {
    let scaled = x * Rational::from_integer(BigInt::one() << (2 * bits));
    let c = scaled.ceil().to_integer();
    let mut s = c.sqrt();
    if &s * &s < c {
        s += 1;
    }
    Rational::new(s, BigInt::one() << bits)
}

/// Enclosure of `2 * atanh(z) = ln((1+z)/(1-z))` for `0 <= zl <= z <= zh <= 1/3`.
/// Runs in fixed point with scale `2^(bits + 16)`, rounding down for the
/// lower sum and up for the upper sum.
fn two_atanh(zl: &Rational, zh: &Rational, bits: u32) -> Interval {
    let w = bits as usize + 16;
    let scale = BigInt::one() << w;
    let fix_down = |x: &Rational| (x.numer() << w).div_floor(x.denom());
    let fix_up = |x: &Rational| (x.numer() << w).div_ceil(x.denom());
    let (zl, zh) = (fix_down(zl), fix_up(zh));
    let zl2 = (&zl * &zl) >> w;
    let zh2 = (&zh * &zh).div_ceil(&scale);
    let one_minus = &scale - &zh2;
    let (mut term_l, mut term_h) = (zl, zh);
    let (mut lo, mut hi) = (BigInt::zero(), BigInt::zero());
    let tol = BigInt::one() << 12;
    for k in 0u64.. {
        let odd = BigInt::from(2 * k + 1);
        lo += term_l.div_floor(&odd);
        hi += term_h.div_ceil(&odd);
        term_l = (&term_l * &zl2) >> w;
        term_h = (&term_h * &zh2).div_ceil(&scale);
        // The tail after this term is at most term_h / (1 - z^2).
        let rem = (&term_h << w).div_ceil(&one_minus);
        if rem <= tol {
            let den = BigInt::one() << (w - 1);
            return Interval {
                lo: Rational::new(lo, den.clone()),
                hi: Rational::new(hi + rem, den),
            };
        }
    }
    unreachable!()
}

/// Enclosure of `ln 2`.
pub fn ln2(bits: u32) -> Interval {
    let third = Rational::new(BigInt::one(), BigInt::from(3));
    two_atanh(&round_down(&third, bits + 16), &round_up(&third, bits + 16), bits)
}

/// Enclosure of `ln x` for a positive rational `x`.
pub fn ln_enclosure(x: &Rational, bits: u32) -> Interval {
    assert!(x.is_positive());
    if x.is_one() {
        return Interval::zero();
    }
    // x = m * 2^e with 1 <= m < 2
    let e = magnitude_bits(x).unwrap() - 1;
    let m = if e >= 0 {
        x / Rational::from_integer(BigInt::one() << (e as u32))
    } else {
        x * Rational::from_integer(BigInt::one() << ((-e) as u32))
    };
    let work = bits + 8 + (64 - (e.unsigned_abs() + 1).leading_zeros());
    // z = (m - 1)/(m + 1) is increasing in m; bracket it by dyadics.
    let one = Rational::one();
    let (ml, mh) = (round_down(&m, work + 16), round_up(&m, work + 16));
    let zl = round_down(&((&ml - &one) / (&ml + &one)), work + 16);
    let zh = round_up(&((&mh - &one) / (&mh + &one)), work + 16);
    let ln_m = two_atanh(&zl, &zh, work);
    let ln_2 = ln2(work);
    let ek = Rational::from_integer(BigInt::from(e));
    ln_m.add(&ln_2.scale(&ek)).round_out(bits + 4)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn rounding_brackets_value() {
        let x = q(1, 3);
        assert!(round_down(&x, 10) <= x && x <= round_up(&x, 10));
        assert!(round_up(&x, 10) - round_down(&x, 10) <= pow2_neg(10));
    }

    #[test]
    fn magnitude_bits_brackets() {
        for (n, d) in [(1, 1), (3, 1), (1, 3), (1024, 1), (7, 8), (-5, 2)] {
            let x = q(n, d);
            let e = magnitude_bits(&x).unwrap();
            let two = 2f64;
            let v = (n as f64 / d as f64).abs();
            assert!(two.powi((e - 1) as i32) <= v && v < two.powi(e as i32), "{n}/{d} -> {e}");
        }
    }

    #[test]
    fn mul_handles_signs() {
        let a = Interval::new(q(-1, 1), q(2, 1));
        let b = Interval::new(q(-3, 1), q(1, 1));
        let c = a.mul(&b);
        assert_eq!(c, Interval::new(q(-6, 1), q(3, 1)));
    }

    #[test]
    fn sqrt_two_enclosure() {
        let s = Interval::from_int(2).sqrt(60).unwrap();
        assert!(s.lo().clone() * s.lo().clone() <= q(2, 1));
        assert!(s.hi().clone() * s.hi().clone() >= q(2, 1));
        assert!(s.width() <= pow2_neg(59));
    }

    #[test]
    fn ln_two_matches_f64() {
        let l = ln2(80);
        assert!(l.width() < pow2_neg(70));
        assert!((l.to_f64() - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn ln_of_various_values() {
        for (n, d) in [(3, 1), (1, 7), (1000, 1), (5, 4), (1, 1_000_000)] {
            let x = q(n, d);
            let l = ln_enclosure(&x, 64);
            let want = (n as f64 / d as f64).ln();
            assert!((l.to_f64() - want).abs() < 1e-12, "ln {n}/{d}");
            assert!(l.width() < pow2_neg(50));
        }
    }
}
