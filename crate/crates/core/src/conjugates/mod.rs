//! Conjugates along an expansion: the classical continued fraction of a real
//! algebraic number with its conjugate complete quotients, the images
//! `alpha'_n`, `beta'_n` of the Jacobi-Perron states under a choice of
//! conjugates, and the quantity `beta'_n + (r_(n-2)/r_(n-1)) alpha'_n + r_(n-3)/r_(n-1)`.

mod hypothesis;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::exactnum::interval::pow2_neg;
use crate::exactnum::{embed_abs, ComplexInterval, Embedding, ExactError, FieldElement, Interval, Rational, RootChoice};
use crate::expansion::ExpansionTrace;
use crate::report::Check;

pub use hypothesis::{
    conjugate_factor_sign, provisional_n, tail_tolerance, hypothesis_report, hypothesis_report_at, ConjugateCase,
    HypothesisReport, TAIL_TOLERANCE,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConjugateError {
    #[error("input is rational; it has no nontrivial conjugate")]
    RationalInput,
    #[error("the identity embedding does not give a conjugate")]
    IdentityEmbedding,
    #[error("length must be at least 1")]
    InvalidLength,
    #[error("sign agreements continue to index {last} of a trace of length {len}; no N can be chosen")]
    NoValidN { last: usize, len: usize },
    #[error(transparent)]
    Exact(#[from] ExactError),
}

/// Classical continued fraction of `gamma` with the conjugate track.
///
/// Indexing follows the convergents: `p_n / r_n = [a_0; a_1, ..., a_n]` and
/// `gamma_n` is the complete quotient after `a_n`, so that
/// `gamma = (p_n gamma_n + p_(n-1)) / (r_n gamma_n + r_(n-1))`.
#[derive(Clone, Debug)]
pub struct CfTrace {
    pub gamma: FieldElement,
    pub embedding: Embedding,
    pub partial_quotients: Vec<BigInt>,
    /// `(p_n, r_n)` for `n = 0, 1, ...`.
    pub convergents: Vec<(BigInt, BigInt)>,
    /// Exact complete quotients `gamma_n`.
    pub complete_quotients: Vec<FieldElement>,
    /// `gamma'_n = -(gamma' r_(n-1) - p_(n-1)) / (gamma' r_n - p_n)`.
    pub conjugate_track: Vec<ComplexInterval>,
    /// `gamma'_n + r_(n-1) / r_n`.
    pub quantity: Vec<ComplexInterval>,
}

/// Expands `gamma` to `n + 1` partial quotients and tracks the conjugate
/// complete quotients under `e`.
pub fn cf_trace(gamma: &FieldElement, e: &Embedding, n: usize) -> Result<CfTrace, ConjugateError> {
    if gamma.as_rational().is_some() {
        return Err(ConjugateError::RationalInput);
    }
    if e.root == RootChoice::Real {
        return Err(ConjugateError::IdentityEmbedding);
    }
    if n == 0 {
        return Err(ConjugateError::InvalidLength);
    }
    let mut partial_quotients = Vec::with_capacity(n + 1);
    let mut complete_quotients = Vec::with_capacity(n + 1);
    let mut x = gamma.clone();
    for _ in 0..=n {
        let (a, frac) = x.floor_frac();
        partial_quotients.push(a);
        x = frac.inverse().expect("irrational numbers have nonzero fractional parts");
        complete_quotients.push(x.clone());
    }
    let mut convergents = Vec::with_capacity(n + 1);
    let (mut p1, mut p2) = (BigInt::one(), BigInt::zero());
    let (mut r1, mut r2) = (BigInt::zero(), BigInt::one());
    for a in &partial_quotients {
        let p = a * &p1 + &p2;
        let r = a * &r1 + &r2;
        p2 = std::mem::replace(&mut p1, p.clone());
        r2 = std::mem::replace(&mut r1, r.clone());
        convergents.push((p, r));
    }
    // gamma'_n + r_(n-1)/r_n is of order r_n^-2, so the conjugate needs about
    // twice the bit length of r_n beyond the target.
    let r_bits = convergents.last().map_or(0, |c| c.1.bits() as u32);
    let bits = e.precision_bits.max(64) + 2 * r_bits + 32;
    let g = embed_abs(gamma, e.root, bits, e.precision_cap)?;
    let mut conjugate_track = Vec::with_capacity(n + 1);
    let mut quantity = Vec::with_capacity(n + 1);
    let work = bits + 16;
    for k in 0..=n {
        let (p, r) = &convergents[k];
        let (pp, rp) = if k == 0 {
            (BigInt::one(), BigInt::zero())
        } else {
            convergents[k - 1].clone()
        };
        let num = g.scale(&int(&rp)).sub(&cpoint(&pp));
        let den = g.scale(&int(r)).sub(&cpoint(p));
        let gk = num
            .div(&den)
            .ok_or(ExactError::PrecisionExhausted(work))?
            .neg()
            .round_out(work);
        quantity.push(gk.add(&cpoint_q(Rational::new(rp, r.clone()))).round_out(work));
        conjugate_track.push(gk);
    }
    Ok(CfTrace {
        gamma: gamma.clone(),
        embedding: *e,
        partial_quotients,
        convergents,
        complete_quotients,
        conjugate_track,
        quantity,
    })
}

impl CfTrace {
    pub fn len(&self) -> usize {
        self.partial_quotients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.partial_quotients.is_empty()
    }

    /// Exact reconstruction of `gamma`, `gamma_n > 1`, and agreement of the
    /// conjugate track with the direct image of each complete quotient.
    pub fn verify(&self) -> Result<Vec<Check>, ConjugateError> {
        let f = self.gamma.field();
        let one = FieldElement::one(f);
        let mut out = Vec::new();
        let bits = self.embedding.precision_bits.max(64);
        for k in 0..self.len() {
            let g = &self.complete_quotients[k];
            let (p, r) = &self.convergents[k];
            let (pp, rp) = if k == 0 {
                (BigInt::one(), BigInt::zero())
            } else {
                self.convergents[k - 1].clone()
            };
            let int = |n: &BigInt| FieldElement::from_bigint(f, n);
            let rebuilt = &(&(&int(p) * g) + &int(&pp)) / &(&(&int(r) * g) + &int(&rp));
            out.push(Check::new("continued fraction reconstruction", k as i64, rebuilt == self.gamma));
            out.push(Check::new("complete quotient above one", k as i64, (g - &one).is_positive()));
            let direct = embed_abs(g, self.embedding.root, bits, self.embedding.precision_cap)?;
            out.push(Check::new(
                "conjugate track matches direct image",
                k as i64,
                overlaps(&direct, &self.conjugate_track[k]),
            ));
        }
        Ok(out)
    }

    /// First index from which `|gamma'_n + r_(n-1)/r_n|` decreases strictly
    /// (certified) through the end of the trace.
    pub fn monotone_from(&self) -> Option<usize> {
        let mut start = self.len().checked_sub(1)?;
        while start > 0 && certified_smaller(&self.quantity[start], &self.quantity[start - 1]) {
            start -= 1;
        }
        (start + 1 < self.len()).then_some(start)
    }

    /// For a real conjugate, the first index from which `-1 < gamma'_n < 0`
    /// holds (certified) through the end of the trace.
    pub fn unit_interval_from(&self) -> Option<usize> {
        if !self.embedding.root.is_real() {
            return None;
        }
        let inside = |z: &ComplexInterval| {
            z.re.lo() > &-Rational::one() && z.re.hi() < &Rational::zero()
        };
        let mut start = self.len();
        while start > 0 && inside(&self.conjugate_track[start - 1]) {
            start -= 1;
        }
        (start < self.len()).then_some(start)
    }

    /// Whether `-1 < gamma'_n < 0` is certified at index `n`.
    pub fn in_unit_interval(&self, n: usize) -> bool {
        let z = &self.conjugate_track[n];
        z.is_real_point() && z.re.lo() > &-Rational::one() && z.re.hi() < &Rational::zero()
    }
}

/// Which conjugate is used for each coordinate. Equal choices form a genuine
/// field embedding; different choices follow the remark that the conjugate
/// of one coordinate may be swapped independently.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct ConjugateChoice {
    #[serde(serialize_with = "display")]
    pub alpha: RootChoice,
    #[serde(serialize_with = "display")]
    pub beta: RootChoice,
}

fn display<S: serde::Serializer>(r: &RootChoice, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(r)
}

impl ConjugateChoice {
    pub fn genuine(root: RootChoice) -> Self {
        ConjugateChoice { alpha: root, beta: root }
    }

    pub fn is_genuine(&self) -> bool {
        self.alpha == self.beta
    }
}

impl std::fmt::Display for ConjugateChoice {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_genuine() {
            write!(f, "{}", self.alpha)
        } else {
            write!(f, "{}/{}", self.alpha, self.beta)
        }
    }
}

/// How the conjugate states were obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Route {
    /// Images of the exact states under one embedding.
    Embedded,
    /// `alpha'_n = -D'_(n-3,n-1) / D'_(n-2,n-1)`, `beta'_n = D'_(n-3,n-2) / D'_(n-2,n-1)`.
    Projective,
}

#[derive(Clone, Debug)]
pub struct ConjugateTrace {
    pub choice: ConjugateChoice,
    pub route: Route,
    /// Absolute precision target in bits.
    pub precision_bits: u32,
    pub precision_cap: u32,
    pub alpha_prime: Vec<ComplexInterval>,
    pub beta_prime: Vec<ComplexInterval>,
    /// The quantity for `n >= 1`; `None` at `n = 0`.
    pub quantity: Vec<Option<ComplexInterval>>,
}

/// Conjugate trace under the single embedding `e`.
pub fn jp_conjugate_trace(trace: &ExpansionTrace, e: &Embedding) -> Result<ConjugateTrace, ConjugateError> {
    jp_conjugate_trace_with(trace, ConjugateChoice::genuine(e.root), e)
}

/// Conjugate trace for a per-coordinate choice; `e` supplies the precision
/// target and cap. Genuine choices embed the exact states, the others use
/// the determinant route from `(alpha'_0, beta'_0)`.
pub fn jp_conjugate_trace_with(
    trace: &ExpansionTrace,
    choice: ConjugateChoice,
    e: &Embedding,
) -> Result<ConjugateTrace, ConjugateError> {
    if trace.field().is_rational() {
        return Err(ConjugateError::RationalInput);
    }
    if choice.alpha == RootChoice::Real || choice.beta == RootChoice::Real {
        return Err(ConjugateError::IdentityEmbedding);
    }
    let bits = e.precision_bits.max(64);
    let cap = e.precision_cap;
    let (route, alpha_prime, beta_prime) = if choice.is_genuine() {
        let mut a = Vec::with_capacity(trace.len());
        let mut b = Vec::with_capacity(trace.len());
        for n in 0..trace.len() {
            a.push(embed_abs(trace.alpha(n), choice.alpha, bits, cap)?);
            b.push(embed_abs(trace.beta(n), choice.beta, bits, cap)?);
        }
        (Route::Embedded, a, b)
    } else {
        let (a, b) = projective_states(trace, choice, bits, cap)?;
        (Route::Projective, a, b)
    };
    let quantity = (0..trace.len())
        .map(|n| (n >= 1).then(|| quantity_at(trace, &alpha_prime[n], &beta_prime[n], n)))
        .collect();
    Ok(ConjugateTrace {
        choice,
        route,
        precision_bits: bits,
        precision_cap: cap,
        alpha_prime,
        beta_prime,
        quantity,
    })
}

impl ConjugateTrace {
    pub fn len(&self) -> usize {
        self.alpha_prime.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha_prime.is_empty()
    }

    pub fn quantity(&self, n: usize) -> Option<&ComplexInterval> {
        self.quantity.get(n).and_then(Option::as_ref)
    }

    /// Certified upper bound on `|quantity(n)|^2`.
    pub fn quantity_norm_sqr_upper(&self, n: usize) -> Option<Rational> {
        self.quantity(n).map(|z| z.norm_sqr().hi().clone())
    }

    /// Whether `|quantity(n)| < tol` is certified.
    pub fn quantity_below(&self, n: usize, tol: &Rational) -> bool {
        self.quantity_norm_sqr_upper(n).is_some_and(|u| u < tol * tol)
    }
}

/// `(alpha'_0, beta'_0)` for a choice, with absolute width at most `2^-bits`.
pub fn initial_conjugates(
    trace: &ExpansionTrace,
    choice: ConjugateChoice,
    bits: u32,
    cap: u32,
) -> Result<(ComplexInterval, ComplexInterval), ConjugateError> {
    Ok((
        embed_abs(trace.alpha(0), choice.alpha, bits, cap)?,
        embed_abs(trace.beta(0), choice.beta, bits, cap)?,
    ))
}

/// `D'_(k,l)`: determinant with columns `(1, alpha'_0, beta'_0)`, `X_k`, `X_l`,
/// for `-3 <= k < l`.
pub fn conjugate_determinant(
    trace: &ExpansionTrace,
    a0: &ComplexInterval,
    b0: &ComplexInterval,
    k: i64,
    l: i64,
) -> ComplexInterval {
    let (ck, cl) = (trace.conv(k), trace.conv(l));
    let m1 = &ck.p * &cl.q - &cl.p * &ck.q;
    let m2 = &ck.r * &cl.q - &cl.r * &ck.q;
    let m3 = &ck.r * &cl.p - &cl.r * &ck.p;
    cpoint(&m1).sub(&a0.scale(&int(&m2))).add(&b0.scale(&int(&m3)))
}

fn projective_states(
    trace: &ExpansionTrace,
    choice: ConjugateChoice,
    bits: u32,
    cap: u32,
) -> Result<(Vec<ComplexInterval>, Vec<ComplexInterval>), ConjugateError> {
    let last = trace.len() as i64 - 1;
    let size = [trace.r(last), trace.p(last), trace.q(last)]
        .iter()
        .map(|x| x.bits() as u32)
        .max()
        .unwrap_or(0);
    let target = pow2_neg(bits);
    let mut work = bits + 2 * size + 32;
    loop {
        if work > cap {
            return Err(ExactError::PrecisionExhausted(cap).into());
        }
        let (a0, b0) = initial_conjugates(trace, choice, work, cap)?;
        if let Some((a, b)) = projective_from(trace, &a0, &b0, work) {
            if a.iter().chain(&b).all(|z| z.radius() <= target) {
                return Ok((a, b));
            }
        }
        work = work.saturating_mul(2);
    }
}

/// The determinant route from given initial conjugates; `None` when a
/// denominator cannot be separated from zero at this precision.
pub fn projective_from(
    trace: &ExpansionTrace,
    a0: &ComplexInterval,
    b0: &ComplexInterval,
    work: u32,
) -> Option<(Vec<ComplexInterval>, Vec<ComplexInterval>)> {
    let mut a = Vec::with_capacity(trace.len());
    let mut b = Vec::with_capacity(trace.len());
    for n in 0..trace.len() as i64 {
        let den = conjugate_determinant(trace, a0, b0, n - 2, n - 1);
        let an = conjugate_determinant(trace, a0, b0, n - 3, n - 1).neg().div(&den)?;
        let bn = conjugate_determinant(trace, a0, b0, n - 3, n - 2).div(&den)?;
        a.push(an.round_out(work));
        b.push(bn.round_out(work));
    }
    Some((a, b))
}

fn quantity_at(trace: &ExpansionTrace, a: &ComplexInterval, b: &ComplexInterval, n: usize) -> ComplexInterval {
    let n = n as i64;
    let r1 = trace.r(n - 1).clone();
    let r2 = Rational::new(trace.r(n - 2).clone(), r1.clone());
    let r3 = Rational::new(trace.r(n - 3).clone(), r1);
    b.add(&a.scale(&r2)).add(&cpoint_q(r3))
}

/// Residual checks of the conjugate recurrences, agreement of the two routes,
/// and of the quotient and expanded forms of the quantity.
pub fn verify_conjugate_trace(trace: &ExpansionTrace, c: &ConjugateTrace) -> Result<Vec<Check>, ConjugateError> {
    let mut out = Vec::new();
    for n in 1..c.len() {
        let d = trace.digit(n - 1);
        let bp = &c.beta_prime[n];
        let ra = cpoint(&BigInt::one())
            .div(bp)
            .is_some_and(|inv| c.alpha_prime[n - 1].sub(&cpoint(&d.a)).sub(&inv).contains_zero());
        let rb = c.alpha_prime[n]
            .div(bp)
            .is_some_and(|t| c.beta_prime[n - 1].sub(&cpoint(&d.b)).sub(&t).contains_zero());
        out.push(Check::new("conjugate recurrence (alpha)", n as i64, ra));
        out.push(Check::new("conjugate recurrence (beta)", n as i64, rb));
    }
    // Both routes from the same initial conjugates.
    let last = trace.len() as i64 - 1;
    let size = [trace.r(last), trace.p(last), trace.q(last)]
        .iter()
        .map(|x| x.bits() as u32)
        .max()
        .unwrap_or(0);
    let work = c.precision_bits + 2 * size + 32;
    let (a0, b0) = initial_conjugates(trace, c.choice, work, c.precision_cap)?;
    let proj = projective_from(trace, &a0, &b0, work);
    for n in 0..c.len() {
        let ok = proj
            .as_ref()
            .is_some_and(|(a, b)| overlaps(&a[n], &c.alpha_prime[n]) && overlaps(&b[n], &c.beta_prime[n]));
        out.push(Check::new("embedded and determinant routes agree", n as i64, ok));
    }
    for n in 1..c.len() {
        let q = c.quantity(n).expect("defined for n >= 1");
        let m = n as i64;
        let dd = |k: i64, l: i64| conjugate_determinant(trace, &a0, &b0, k, l);
        let (r1, r2, r3) = (int(trace.r(m - 1)), int(trace.r(m - 2)), int(trace.r(m - 3)));
        let numer = dd(m - 3, m - 2)
            .scale(&r1)
            .sub(&dd(m - 3, m - 1).scale(&r2))
            .add(&dd(m - 2, m - 1).scale(&r3));
        let denom = dd(m - 2, m - 1).scale(&r1);
        let ok = numer.div(&denom).is_some_and(|z| overlaps(&z, q));
        out.push(Check::new("quantity equals numerator over denominator", n as i64, ok));
        // Denominator with the error terms:
        // r_(n-1) { A (q_(n-1)/r_(n-1) - beta'_0) - A' (p_(n-1)/r_(n-1) - alpha'_0) },
        // A = r_(n-1) p_(n-2) - r_(n-2) p_(n-1), A' the same with q.
        let (p1, q1, p2, q2) = (trace.p(m - 1), trace.q(m - 1), trace.p(m - 2), trace.q(m - 2));
        let big_a = trace.r(m - 1) * p2 - trace.r(m - 2) * p1;
        let big_a2 = trace.r(m - 1) * q2 - trace.r(m - 2) * q1;
        let qr = cpoint_q(Rational::new(q1.clone(), trace.r(m - 1).clone()));
        let pr = cpoint_q(Rational::new(p1.clone(), trace.r(m - 1).clone()));
        let expanded = qr
            .sub(&b0)
            .scale(&int(&big_a))
            .sub(&pr.sub(&a0).scale(&int(&big_a2)))
            .scale(&r1);
        out.push(Check::new("expanded denominator", n as i64, overlaps(&expanded, &denom)));
        if n >= 4 {
            // Numerator with the error terms; real and free of the conjugates.
            let r3i = trace.r(m - 3);
            let dq = Rational::new(q1.clone(), trace.r(m - 1).clone()) - Rational::new(trace.q(m - 3).clone(), r3i.clone());
            let dp = Rational::new(p1.clone(), trace.r(m - 1).clone()) - Rational::new(trace.p(m - 3).clone(), r3i.clone());
            let exact = (int(&big_a) * dq - int(&big_a2) * dp) * int(r3i);
            out.push(Check::new("expanded numerator", n as i64, contains(&numer, &exact)));
        }
    }
    Ok(out)
}

fn int(n: &BigInt) -> Rational {
    Rational::from_integer(n.clone())
}

fn cpoint(n: &BigInt) -> ComplexInterval {
    ComplexInterval::from_rational(int(n))
}

fn cpoint_q(q: Rational) -> ComplexInterval {
    ComplexInterval::from_rational(q)
}

fn contains(z: &ComplexInterval, x: &Rational) -> bool {
    z.re.contains(x) && z.im.contains_zero()
}

/// Whether two complex rectangles intersect.
pub fn overlaps(a: &ComplexInterval, b: &ComplexInterval) -> bool {
    let meet = |x: &Interval, y: &Interval| x.lo() <= y.hi() && y.lo() <= x.hi();
    meet(&a.re, &b.re) && meet(&a.im, &b.im)
}

/// `|a| < |b|`, certified.
pub fn certified_smaller(a: &ComplexInterval, b: &ComplexInterval) -> bool {
    a.norm_sqr().hi() < b.norm_sqr().lo()
}
