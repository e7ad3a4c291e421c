//! Approximation errors `Delta_n = p_n - alpha_0 r_n`, `Delta'_n = q_n - beta_0 r_n`,
//! their sign patterns, the determinants `D_(k,l)`, the contraction
//! inequalities, ideal-convergence classification and the minimal growth model.

mod bounds;
mod classify;
mod growth;
#[cfg(test)]
mod tests;

use std::cmp::Ordering;

use num_bigint::BigInt;
use serde::Serialize;
use thiserror::Error;

use crate::exactnum::{FieldElement, Interval};
use crate::expansion::ExpansionTrace;
use crate::report::Check;

pub use bounds::{bounds_report, BoundsReport, EqualitySite};
pub use classify::{
    classify_ideal_convergence, AgreementEvidence, ConvergenceReport, Flag, GapEvidence,
    GeometricRate, PerronCondition, PowerLaw, ProductEvidence, Verdict, DEFAULT_WINDOW,
};
pub use growth::{growth_model, minimal_r, perron_checks, GrowthModel};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConvergenceError {
    #[error("window must lie in (0, 1]")]
    WindowInvalid,
    #[error("determinant indices must satisfy -2 <= k < l <= {last}, got ({k}, {l})")]
    IndexOutOfRange { k: i64, l: i64, last: i64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Sign {
    #[serde(rename = "-")]
    Neg,
    #[serde(rename = "0")]
    Zero,
    #[serde(rename = "+")]
    Pos,
}

impl Sign {
    pub fn of(x: &FieldElement) -> Sign {
        match x.sign() {
            Ordering::Less => Sign::Neg,
            Ordering::Equal => Sign::Zero,
            Ordering::Greater => Sign::Pos,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Sign::Neg => '-',
            Sign::Zero => '0',
            Sign::Pos => '+',
        }
    }
}

/// Which error sequence: `Delta` (first coordinate) or `Delta'` (second).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Series {
    #[serde(rename = "delta")]
    Delta,
    #[serde(rename = "delta_prime")]
    DeltaPrime,
}

impl Series {
    pub fn label(self) -> &'static str {
        match self {
            Series::Delta => "delta",
            Series::DeltaPrime => "delta'",
        }
    }
}

/// Exact error sequences, stored from index `-3`.
#[derive(Clone, Debug)]
pub struct DeltaTrace {
    deltas: Vec<FieldElement>,
    deltas_prime: Vec<FieldElement>,
    signs: Vec<Sign>,
    signs_prime: Vec<Sign>,
}

pub fn delta_trace(trace: &ExpansionTrace) -> DeltaTrace {
    let f = trace.field();
    let a0 = trace.alpha(0);
    let b0 = trace.beta(0);
    let int = |n: &BigInt| FieldElement::from_bigint(f, n);
    let mut deltas = Vec::with_capacity(trace.len() + 3);
    let mut deltas_prime = Vec::with_capacity(trace.len() + 3);
    for k in -3..trace.len() as i64 {
        let c = trace.conv(k);
        let r = int(&c.r);
        deltas.push(&int(&c.p) - &(a0 * &r));
        deltas_prime.push(&int(&c.q) - &(b0 * &r));
    }
    let signs = deltas[3..].iter().map(Sign::of).collect();
    let signs_prime = deltas_prime[3..].iter().map(Sign::of).collect();
    DeltaTrace {
        deltas,
        deltas_prime,
        signs,
        signs_prime,
    }
}

impl DeltaTrace {
    /// Number of indices `n >= 0`.
    pub fn len(&self) -> usize {
        self.signs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signs.is_empty()
    }

    /// `Delta_k` for `-3 <= k < len`.
    pub fn delta(&self, k: i64) -> &FieldElement {
        &self.deltas[(k + 3) as usize]
    }

    pub fn delta_prime(&self, k: i64) -> &FieldElement {
        &self.deltas_prime[(k + 3) as usize]
    }

    pub fn get(&self, s: Series, k: i64) -> &FieldElement {
        match s {
            Series::Delta => self.delta(k),
            Series::DeltaPrime => self.delta_prime(k),
        }
    }

    /// `Delta_n` for `n >= 0`.
    pub fn deltas(&self) -> &[FieldElement] {
        &self.deltas[3..]
    }

    pub fn deltas_prime(&self) -> &[FieldElement] {
        &self.deltas_prime[3..]
    }

    pub fn signs(&self) -> &[Sign] {
        &self.signs
    }

    pub fn signs_prime(&self) -> &[Sign] {
        &self.signs_prime
    }

    pub fn signs_of(&self, s: Series) -> &[Sign] {
        match s {
            Series::Delta => &self.signs,
            Series::DeltaPrime => &self.signs_prime,
        }
    }

    pub fn sign_string(&self, s: Series) -> String {
        self.signs_of(s).iter().map(|x| x.as_char()).collect()
    }
}

/// Exact checks of the error recurrences and the closed forms of the first
/// three errors.
pub fn verify_delta_identities(trace: &ExpansionTrace, d: &DeltaTrace) -> Vec<Check> {
    let mut out = Vec::new();
    let fa = |n: usize| trace.frac_alpha(n);
    let fb = |n: usize| trace.frac_beta(n);
    for s in [Series::Delta, Series::DeltaPrime] {
        let name = s.label();
        for n in 0..d.len() {
            let ni = n as i64;
            let x = |k: i64| d.get(s, k);
            // Delta_n + {beta_n} Delta_(n-1) + {alpha_n} Delta_(n-2) = 0
            let three_term = x(ni) + &(fb(n) * x(ni - 1)) + fa(n) * x(ni - 2);
            out.push(Check::new(format!("{name} three-term recurrence"), ni, three_term.is_zero()));
            if n >= 1 {
                // Delta_n + ({alpha_n} - {beta_(n-1)} {beta_n}) Delta_(n-2)
                //   - {alpha_(n-1)} {beta_n} Delta_(n-3) = 0
                let coef = fa(n) - &(fb(n - 1) * fb(n));
                let skip = x(ni) + &(&coef * x(ni - 2)) - &(fa(n - 1) * fb(n)) * x(ni - 3);
                out.push(Check::new(format!("{name} skip recurrence"), ni, skip.is_zero()));
            }
        }
    }
    let mut closed: Vec<(&str, usize, FieldElement, FieldElement)> = Vec::new();
    closed.push(("delta closed form", 0, d.delta(0).clone(), -fa(0)));
    closed.push(("delta' closed form", 0, d.delta_prime(0).clone(), -fb(0)));
    if d.len() > 1 {
        closed.push(("delta closed form", 1, d.delta(1).clone(), fa(0) * fb(1)));
        closed.push(("delta' closed form", 1, d.delta_prime(1).clone(), &(fb(0) * fb(1)) - fa(1)));
    }
    if d.len() > 2 {
        let inner = fa(2) - &(fb(1) * fb(2));
        // The three-term recurrence fixes the sign: Delta_2 = +{alpha_0}(...).
        closed.push(("delta closed form", 2, d.delta(2).clone(), fa(0) * &inner));
        closed.push((
            "delta' closed form",
            2,
            d.delta_prime(2).clone(),
            &(fa(1) * fb(2)) + &(fb(0) * &inner),
        ));
    }
    for (name, n, got, want) in closed {
        out.push(Check::new(name, n as i64, got == want));
    }
    out
}

/// `|Delta_n| <= {alpha_0}` (equality only at `n = 0`, where `Delta_0 = -{alpha_0}`)
/// and `|Delta'_n| < 1`.
pub fn envelope_checks(trace: &ExpansionTrace, d: &DeltaTrace) -> Vec<Check> {
    let f = trace.field();
    let one = FieldElement::one(f);
    let fa0 = trace.frac_alpha(0);
    let mut out = Vec::with_capacity(2 * d.len());
    for n in 0..d.len() {
        let abs = d.delta(n as i64).abs();
        let ok = if n == 0 { &abs == fa0 } else { less(&abs, fa0) || (fa0.is_zero() && abs.is_zero()) };
        out.push(Check::new("|delta_n| < {alpha_0}", n as i64, ok));
        let ok = less(&d.delta_prime(n as i64).abs(), &one);
        out.push(Check::new("|delta'_n| < 1", n as i64, ok));
    }
    out
}

/// Agreement indices `n_i` (`Delta_(n-1) Delta_n > 0`) and the map `n -> n_*`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SignAnalysis {
    pub agree_indices: Vec<usize>,
    /// Indices past the first vanishing error are excluded.
    pub effective_len: usize,
    nstar: Vec<Option<usize>>,
}

/// Sign analysis of a sign list indexed from 0. A zero ends the analysed range.
pub fn sign_analysis(signs: &[Sign]) -> SignAnalysis {
    let effective_len = signs.iter().position(|s| *s == Sign::Zero).unwrap_or(signs.len());
    let mut agree_indices = Vec::new();
    let mut nstar = Vec::with_capacity(effective_len);
    let mut last = None;
    for n in 0..effective_len {
        if n >= 1 && signs[n - 1] == signs[n] {
            agree_indices.push(n);
            last = Some(n);
        }
        nstar.push(last);
    }
    SignAnalysis {
        agree_indices,
        effective_len,
        nstar,
    }
}

impl SignAnalysis {
    pub fn of(d: &DeltaTrace, s: Series) -> SignAnalysis {
        sign_analysis(d.signs_of(s))
    }

    /// Largest agreement index `<= n`, if any.
    pub fn nstar(&self, n: usize) -> Option<usize> {
        self.nstar.get(n).copied().flatten()
    }

    pub fn last_agreement(&self) -> Option<usize> {
        self.agree_indices.last().copied()
    }

    /// Agreement indices are at least two apart and no three consecutive
    /// errors share a sign.
    pub fn pattern_checks(&self, signs: &[Sign], name: &str) -> Vec<Check> {
        let mut out = Vec::new();
        for w in self.agree_indices.windows(2) {
            out.push(Check::new(format!("{name} agreements two apart"), w[1] as i64, w[0] + 2 <= w[1]));
        }
        for n in 2..self.effective_len {
            let same = signs[n - 2] == signs[n - 1] && signs[n - 1] == signs[n];
            out.push(Check::new(format!("{name} no three equal signs"), n as i64, !same));
        }
        out
    }
}

/// `D_(k,l)`: determinant with columns `(1, alpha_0, beta_0)`, `X_k`, `X_l`.
pub fn determinant_dkl(trace: &ExpansionTrace, k: i64, l: i64) -> Result<FieldElement, ConvergenceError> {
    let last = trace.len() as i64 - 1;
    if !(-2 <= k && k < l && l <= last) {
        return Err(ConvergenceError::IndexOutOfRange { k, l, last });
    }
    Ok(dkl(trace, k, l))
}

fn dkl(trace: &ExpansionTrace, k: i64, l: i64) -> FieldElement {
    let f = trace.field();
    let (x, y) = (trace.conv(k), trace.conv(l));
    let int = |n: BigInt| FieldElement::from_bigint(f, &n);
    let m0 = int(&x.p * &y.q - &y.p * &x.q);
    let m1 = int(&x.r * &y.q - &y.r * &x.q);
    let m2 = int(&x.r * &y.p - &y.r * &x.p);
    &(&m0 - &(trace.alpha(0) * &m1)) + &(trace.beta(0) * &m2)
}

/// `{alpha_0} ... {alpha_n}` for every `n`.
pub fn frac_alpha_products(trace: &ExpansionTrace) -> Vec<FieldElement> {
    let mut out: Vec<FieldElement> = Vec::with_capacity(trace.len());
    for n in 0..trace.len() {
        let x = trace.frac_alpha(n);
        out.push(match out.last() {
            Some(p) => p * x,
            None => x.clone(),
        });
    }
    out
}

/// Exact determinant facts: the product formulas for `D_(n-1,n)` and
/// `D_(n-2,n)`, recovery of the states from determinant ratios, the `2 x 2`
/// error form of `D`, its signs, and the partial-product identity.
pub fn determinant_checks(trace: &ExpansionTrace, d: &DeltaTrace) -> Vec<Check> {
    let mut out = Vec::new();
    let len = trace.len();
    let nt = trace.nonterminal_len();
    let prod = frac_alpha_products(trace);
    let one = FieldElement::one(trace.field());
    out.push(Check::new("D_(-2,-1) = 1", -1, dkl(trace, -2, -1) == one));
    for n in 0..len {
        let ni = n as i64;
        let d1 = dkl(trace, ni - 1, ni);
        out.push(Check::new("D_(n-1,n) = {alpha_0}...{alpha_n}", ni, d1 == prod[n]));
        if n >= 1 {
            let d2 = dkl(trace, ni - 2, ni);
            let want = -(&prod[n - 1] * trace.frac_beta(n));
            out.push(Check::new("D_(n-2,n) = -{alpha_0}...{alpha_(n-1)} {beta_n}", ni, d2 == want));
            let base = dkl(trace, ni - 2, ni - 1);
            let alpha = -(&dkl(trace, ni - 3, ni - 1) / &base);
            let beta = &dkl(trace, ni - 3, ni - 2) / &base;
            let ok = &alpha == trace.alpha(n)
                && &beta == trace.beta(n)
                && (&d1 / &base) == *trace.frac_alpha(n)
                && -(&d2 / &base) == *trace.frac_beta(n);
            out.push(Check::new("states from determinant ratios", ni, ok));
        }
        if n + 1 < len {
            let e = d.delta(ni) * d.delta_prime(ni + 1) - d.delta(ni + 1) * d.delta_prime(ni);
            let dn = dkl(trace, ni, ni + 1);
            out.push(Check::new("D_(n,n+1) in error form", ni, e == dn));
            if n + 1 < nt {
                out.push(Check::new("D_(n,n+1) > 0", ni, dn.is_positive()));
            }
        }
        if n + 2 < len {
            let e = d.delta(ni) * d.delta_prime(ni + 2) - d.delta(ni + 2) * d.delta_prime(ni);
            let dn = dkl(trace, ni, ni + 2);
            out.push(Check::new("D_(n,n+2) in error form", ni, e == dn));
            if n + 1 < nt && !trace.frac_beta(n + 2).is_zero() {
                out.push(Check::new("D_(n,n+2) < 0", ni, dn.is_negative()));
            }
        }
        if n + 1 < trace.states().len() && n >= 2 {
            // {alpha_0}...{alpha_n} = 1 / (r_n beta_(n+1) + r_(n-1) alpha_(n+1) + r_(n-2))
            let f = trace.field();
            let den = &(&FieldElement::from_bigint(f, trace.r(ni)) * trace.beta(n + 1))
                + &(&FieldElement::from_bigint(f, trace.r(ni - 1)) * trace.alpha(n + 1))
                + FieldElement::from_bigint(f, trace.r(ni - 2));
            out.push(Check::new("partial product identity", ni, &prod[n] * &den == one));
        }
        if n >= 1 && n < nt {
            out.push(Check::new("partial products decrease", ni, less(&prod[n], &prod[n - 1])));
        }
    }
    out
}

/// Finite restatement of the agreement-transfer argument between the two
/// error sequences: past the last agreement of one sequence, once the two
/// signs are opposite (first coordinate positive) or equal (both positive),
/// the other sequence alternates to the end of the analysed range.
pub fn agreement_transfer_checks(d: &DeltaTrace, regular_len: usize) -> Vec<AgreementTransfer> {
    let mut out = Vec::new();
    for (from, to) in [(Series::Delta, Series::DeltaPrime), (Series::DeltaPrime, Series::Delta)] {
        let sa_from = SignAnalysis::of(d, from);
        let end = regular_len.min(sa_from.effective_len).min(SignAnalysis::of(d, to).effective_len);
        let start = sa_from.last_agreement().map_or(1, |n| n + 1);
        let trigger = |m: usize| {
            let a = d.signs_of(from)[m];
            let b = d.signs_of(to)[m];
            match from {
                Series::Delta => a == Sign::Pos && b == Sign::Neg,
                Series::DeltaPrime => a == Sign::Pos && b == Sign::Pos,
            }
        };
        let m = (start..end).find(|&m| trigger(m));
        let alternates = m.is_none_or(|m| {
            let s = d.signs_of(to);
            (m + 1..end).all(|n| s[n - 1] != s[n])
        });
        out.push(AgreementTransfer {
            from,
            start,
            trigger: m,
            end,
            alternates,
        });
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AgreementTransfer {
    pub from: Series,
    /// One past the last agreement of `from`.
    pub start: usize,
    /// First index where the sign propagation starts, if reached.
    pub trigger: Option<usize>,
    pub end: usize,
    pub alternates: bool,
}

/// First index where some fractional part or error vanishes; contraction
/// inequalities are only asserted below it.
pub fn regular_len(trace: &ExpansionTrace, d: &DeltaTrace) -> usize {
    let nt = trace.nonterminal_len();
    let fb = (0..nt).find(|&n| trace.frac_beta(n).is_zero()).unwrap_or(nt);
    let e1 = sign_analysis(d.signs()).effective_len;
    let e2 = sign_analysis(d.signs_prime()).effective_len;
    nt.min(fb).min(e1).min(e2)
}

pub(crate) fn less(a: &FieldElement, b: &FieldElement) -> bool {
    (b - a).is_positive()
}

pub(crate) fn less_eq(a: &FieldElement, b: &FieldElement) -> bool {
    !(a - b).is_positive()
}

pub(crate) fn max_of<'a>(xs: impl IntoIterator<Item = &'a FieldElement>) -> Option<FieldElement> {
    let mut best: Option<FieldElement> = None;
    for x in xs {
        best = match best {
            Some(b) if !less(&b, x) => Some(b),
            _ => Some(x.clone()),
        };
    }
    best
}

/// Enclosure of a nonzero element with relative width at most `2^-rel_bits`.
pub(crate) fn enclose_relative(x: &FieldElement, rel_bits: u32) -> Interval {
    let mut bits = 64;
    loop {
        let iv = x.enclose(bits);
        if !iv.contains_zero() {
            let tol = iv.mig() * crate::exactnum::interval::pow2_neg(rel_bits);
            if iv.width() <= tol {
                return iv;
            }
            // |x| >= 2^(e-1), so 2^-(rel_bits - e + 2) absolute suffices.
            let e = crate::exactnum::interval::magnitude_bits(&iv.mig()).unwrap_or(0);
            bits = bits.max((rel_bits as i64 - e + 4).max(64) as u32);
            let iv = x.enclose(bits);
            let tol = iv.mig() * crate::exactnum::interval::pow2_neg(rel_bits);
            if !iv.contains_zero() && iv.width() <= tol {
                return iv;
            }
        }
        bits *= 2;
    }
}
