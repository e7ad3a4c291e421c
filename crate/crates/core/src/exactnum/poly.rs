//! Small dense polynomials over the rationals (ascending coefficients).

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use super::Rational;

pub fn trim(mut p: Vec<Rational>) -> Vec<Rational> {
    while p.len() > 1 && p.last().is_some_and(|c| c.is_zero()) {
        p.pop();
    }
    p
}

pub fn degree(p: &[Rational]) -> usize {
    p.iter().rposition(|c| !c.is_zero()).unwrap_or(0)
}

pub fn eval(p: &[Rational], x: &Rational) -> Rational {
    let mut acc = Rational::zero();
    for c in p.iter().rev() {
        acc = acc * x + c;
    }
    acc
}

pub fn sign_at(p: &[Rational], x: &Rational) -> Ordering {
    let v = eval(p, x);
    v.cmp(&Rational::zero())
}

pub fn derivative(p: &[Rational]) -> Vec<Rational> {
    if p.len() <= 1 {
        return vec![Rational::zero()];
    }
    p.iter()
        .enumerate()
        .skip(1)
        .map(|(i, c)| c * Rational::from_integer(BigInt::from(i)))
        .collect()
}

/// Remainder of `a` divided by `b` (`b` nonzero).
pub fn rem(a: &[Rational], b: &[Rational]) -> Vec<Rational> {
    let b = trim(b.to_vec());
    let db = degree(&b);
    let lead = b[db].clone();
    let mut r = trim(a.to_vec());
    while !(r.len() == 1 && r[0].is_zero()) && degree(&r) >= db {
        let dr = degree(&r);
        let k = &r[dr] / &lead;
        let shift = dr - db;
        for (i, c) in b.iter().enumerate() {
            r[i + shift] = &r[i + shift] - &k * c;
        }
        r = trim(r);
        if dr == 0 {
            break;
        }
    }
    r
}

fn is_zero_poly(p: &[Rational]) -> bool {
    p.iter().all(|c| c.is_zero())
}

/// Sturm sequence `p, p', -rem(p, p'), ...`.
pub fn sturm_sequence(p: &[Rational]) -> Vec<Vec<Rational>> {
    let mut seq = vec![trim(p.to_vec())];
    let d = derivative(p);
    if is_zero_poly(&d) {
        return seq;
    }
    seq.push(trim(d));
    loop {
        let n = seq.len();
        let r = rem(&seq[n - 2], &seq[n - 1]);
        if is_zero_poly(&r) {
            break;
        }
        seq.push(r.into_iter().map(|c| -c).collect());
    }
    seq
}

fn variations(seq: &[Vec<Rational>], x: &Rational) -> usize {
    let mut count = 0;
    let mut last: Option<Ordering> = None;
    for p in seq {
        let s = sign_at(p, x);
        if s == Ordering::Equal {
            continue;
        }
        if let Some(l) = last {
            if l != s {
                count += 1;
            }
        }
        last = Some(s);
    }
    count
}

/// Number of distinct real roots of `p` in the half-open interval `(lo, hi]`.
pub fn count_roots(seq: &[Vec<Rational>], lo: &Rational, hi: &Rational) -> usize {
    variations(seq, lo).saturating_sub(variations(seq, hi))
}

/// A bound `B` with every root of `p` inside `(-B, B)`.
pub fn cauchy_bound(p: &[Rational]) -> Rational {
    let d = degree(p);
    let lead = p[d].abs();
    let mut m = Rational::zero();
    for c in &p[..d] {
        let v = c.abs() / &lead;
        if v > m {
            m = v;
        }
    }
    m + Rational::one()
}

/// Disjoint isolating intervals for all distinct real roots, in increasing
/// order. An interval may be a single point when the root is found exactly.
pub fn isolate_real_roots(p: &[Rational], max_width: &Rational) -> Vec<(Rational, Rational)> {
    let p = trim(p.to_vec());
    if degree(&p) == 0 {
        return Vec::new();
    }
    let seq = sturm_sequence(&p);
    let b = cauchy_bound(&p);
    let mut out = Vec::new();
    let mut stack = vec![(-b.clone(), b)];
    while let Some((lo, hi)) = stack.pop() {
        let n = count_roots(&seq, &lo, &hi);
        if n == 0 {
            continue;
        }
        if n == 1 && &(&hi - &lo) <= max_width {
            if sign_at(&p, &hi) == Ordering::Equal {
                out.push((hi.clone(), hi));
            } else {
                out.push((lo, hi));
            }
            continue;
        }
        let mid = (&lo + &hi) / Rational::from_integer(BigInt::from(2));
        // Upper half first so the stack pops the lower half first.
        stack.push((mid.clone(), hi));
        stack.push((lo, mid));
    }
    out.sort_by(|a, b| a.0.cmp(&b.0));
    out
}

/// All rational roots of an integer polynomial.
pub fn rational_roots(p: &[BigInt]) -> Vec<Rational> {
    let q: Vec<Rational> = p.iter().cloned().map(Rational::from_integer).collect();
    let q = trim(q);
    let d = degree(&q);
    if d == 0 {
        return Vec::new();
    }
    let lead = q[d].numer().abs();
    // Rational roots have denominators dividing the leading coefficient, so
    // distinct candidates are at least 1/lead^2 apart.
    let width = Rational::new(BigInt::one(), &lead * &lead * BigInt::from(4));
    let mut roots = Vec::new();
    for (lo, hi) in isolate_real_roots(&q, &width) {
        let lo_k = (&lo * Rational::from_integer(lead.clone())).floor().to_integer();
        let hi_k = (&hi * Rational::from_integer(lead.clone())).ceil().to_integer();
        let mut k = lo_k;
        while k <= hi_k {
            let cand = Rational::new(k.clone(), lead.clone());
            if lo <= cand && cand <= hi && eval(&q, &cand).is_zero() && !roots.contains(&cand) {
                roots.push(cand);
            }
            k += 1;
        }
    }
    roots
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ints(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    fn rats(v: &[i64]) -> Vec<Rational> {
        v.iter().map(|&x| Rational::from_integer(BigInt::from(x))).collect()
    }

    #[test]
    fn counts_roots_of_cubic() {
        // (x-1)(x-2)(x+3) = x^3 - 7x + 6
        let p = rats(&[6, -7, 0, 1]);
        let seq = sturm_sequence(&p);
        let q = |n: i64, d: i64| Rational::new(BigInt::from(n), BigInt::from(d));
        assert_eq!(count_roots(&seq, &q(-10, 1), &q(10, 1)), 3);
        assert_eq!(count_roots(&seq, &q(1, 2), &q(3, 2)), 1);
        assert_eq!(count_roots(&seq, &q(-1, 1), &q(1, 2)), 0);
    }

    #[test]
    fn finds_rational_roots() {
        let r = rational_roots(&ints(&[-1, 0, 0, 1]));
        assert_eq!(r, vec![Rational::one()]);
        // 2x^2 - 3x + 1 = (2x - 1)(x - 1)
        let r = rational_roots(&ints(&[1, -3, 2]));
        assert_eq!(r.len(), 2);
        assert!(rational_roots(&ints(&[-2, 0, 0, 1])).is_empty());
        assert!(rational_roots(&ints(&[-1, 0, -1, 1])).is_empty());
    }

    #[test]
    fn remainder_is_exact() {
        // x^3 - 2 = (x^2 + x + 1)(x - 1) - 1
        let r = rem(&rats(&[-2, 0, 0, 1]), &rats(&[1, 1, 1]));
        assert_eq!(r, rats(&[-1]));
        // 2x^2 + 1 mod (2x - 1) = 3/2
        let r = rem(&rats(&[1, 0, 2]), &rats(&[-1, 2]));
        assert_eq!(r, vec![Rational::new(BigInt::from(3), BigInt::from(2))]);
    }
}
