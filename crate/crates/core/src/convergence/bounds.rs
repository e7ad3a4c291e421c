//! The contraction inequalities for the error sequences, checked exactly at
//! every site whose hypotheses hold on the computed signs.

use num_bigint::BigInt;
use serde::Serialize;

use super::{less, less_eq, max_of, regular_len, DeltaTrace, Series, SignAnalysis};
use crate::exactnum::{FieldElement, Rational};
use crate::expansion::ExpansionTrace;
use crate::report::Check;

pub const FRAC_PRODUCT_BELOW_ONE: &str = "fractional product below one";
pub const ALTERNATING: &str = "alternating contraction";
pub const AGREEMENT: &str = "agreement contraction";
pub const AFTER_AGREEMENT: &str = "after agreement";
pub const THREE_STEP: &str = "three-step contraction";
pub const TWO_AFTER_AGREEMENT: &str = "two after agreement";
pub const PRODUCT_TAIL: &str = "product tail";
pub const AGREEMENT_MAXIMA: &str = "agreement maxima decrease";

#[derive(Clone, Debug, Default, Serialize)]
pub struct BoundsReport {
    pub checks: Vec<Check>,
    /// Sites `n_*` with `{alpha_(n_*)} = {beta_(n_*)}` where the case split
    /// after an agreement says nothing; those checks are skipped.
    pub equality_sites: Vec<EqualitySite>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EqualitySite {
    pub series: Series,
    pub nstar: usize,
}

/// Runs every contraction inequality on both error sequences. Sites are
/// restricted to indices where all fractional parts and errors involved are
/// nonzero.
pub fn bounds_report(trace: &ExpansionTrace, d: &DeltaTrace) -> BoundsReport {
    let mut rep = BoundsReport::default();
    let f = trace.field();
    let one = FieldElement::one(f);
    for n in 1..trace.nonterminal_len() {
        let (fa, fb) = (trace.frac_alpha(n), trace.frac_beta(n));
        let (fa1, fb1) = (trace.frac_alpha(n - 1), trace.frac_beta(n - 1));
        let lhs = &(fa1 * fb) + &(&(fb1 * fb) - fa).abs();
        rep.checks.push(Check::new(FRAC_PRODUCT_BELOW_ONE, n as i64, less(&lhs, &one)));
    }
    let reg = regular_len(trace, d);
    for s in [Series::Delta, Series::DeltaPrime] {
        series_checks(trace, d, s, reg, &mut rep);
    }
    rep
}

fn series_checks(trace: &ExpansionTrace, d: &DeltaTrace, s: Series, reg: usize, rep: &mut BoundsReport) {
    let f = trace.field();
    let rat = |n: i64, m: i64| FieldElement::from_rational(f, Rational::new(BigInt::from(n), BigInt::from(m)));
    let (half, three_quarters, one) = (rat(1, 2), rat(3, 4), rat(1, 1));
    let fa = |n: usize| trace.frac_alpha(n);
    let fb = |n: usize| trace.frac_beta(n);
    let abs: Vec<FieldElement> = (0..reg).map(|k| d.get(s, k as i64).abs()).collect();
    let signs = d.signs_of(s);
    let sa = SignAnalysis::of(d, s);
    let label = s.label();
    let mut push = |name: &str, n: usize, pass: bool| {
        rep.checks.push(Check::new(format!("{name} ({label})"), n as i64, pass));
    };
    let mut equality = Vec::new();
    // Running product {beta_(s+3)} ... {beta_n} for the tail after n_* = s.
    let mut tail: Option<(usize, FieldElement)> = None;
    for n in 2..reg {
        let alternating = signs[n - 2] != signs[n - 1] && signs[n - 1] != signs[n];
        if alternating {
            push(ALTERNATING, n, less(&abs[n], &(fb(n) * &abs[n - 1])));
        }
        if signs[n - 1] == signs[n] {
            push(AGREEMENT, n, less(&abs[n], &(fa(n) * &abs[n - 2])));
        }
        if n >= 3 {
            let rate = max_of([&(&(&one + fa(n)) * &half), fb(n)]).unwrap();
            let prev = max_of([&abs[n - 3], &abs[n - 2], &abs[n - 1]]).unwrap();
            push(THREE_STEP, n, less(&abs[n], &(&rate * &prev)));
        }
        let Some(st) = sa.nstar(n).filter(|&st| st >= 2) else {
            continue;
        };
        if n == st {
            continue;
        }
        let m2 = max_of([&abs[st - 2], &abs[st - 1]]).unwrap();
        // Case split after the agreement, on the sign of
        // {beta_s}{beta_(s+1)} - {alpha_(s+1)} and the order of {alpha_s}, {beta_s}.
        let split_nonneg = !(fb(st) * fb(st + 1) - fa(st + 1).clone()).is_negative();
        let alpha_below = less(fa(st), fb(st));
        let alpha_above = less(fb(st), fa(st));
        let undecided = !split_nonneg && !alpha_below && !alpha_above;
        if n == st + 1 {
            if undecided {
                equality.push(st);
                continue;
            }
            let (case, ok) = if split_nonneg {
                ("(i)", less_eq(&abs[n], &(&(fa(st) * fb(st + 1)) * &abs[st - 2])))
            } else if alpha_below {
                ("(ii)", less(&abs[n], &(fa(st + 1) * &abs[st - 2])))
            } else {
                let k = fa(st + 1) + &(&(&one - fa(st + 1)) * &(fa(st) * fb(st + 1)));
                // Equal neighbours (possible only for rational points) make
                // this a weighted mean of equal values, so equality can occur.
                let ok = if abs[st - 2] == abs[st - 1] {
                    less_eq(&abs[n], &(&k * &m2))
                } else {
                    less(&abs[n], &(&k * &m2))
                };
                ("(iii)", ok)
            };
            push(&format!("{AFTER_AGREEMENT} {case}"), n, ok);
            let k = &(&one + fa(n)) * &half;
            push(&format!("{AFTER_AGREEMENT} summary"), n, less(&abs[n], &(&k * &m2)));
        } else if n == st + 2 {
            if undecided {
                continue;
            }
            let (case, ok) = if split_nonneg {
                ("(i)", less(&abs[n], &(&(&half * fb(st + 2)) * &abs[st - 2])))
            } else if alpha_below {
                ("(ii)", less(&abs[n], &(&half * &abs[st - 2])))
            } else {
                ("(iii)", less(&abs[n], &(&three_quarters * &m2)))
            };
            push(&format!("{TWO_AFTER_AGREEMENT} {case}"), n, ok);
            push(&format!("{TWO_AFTER_AGREEMENT} summary"), n, less(&abs[n], &(&three_quarters * &m2)));
        } else {
            let prod = match tail.take() {
                Some((owner, p)) if owner == st => &p * fb(n),
                _ => (st + 3..=n).fold(one.clone(), |acc, k| &acc * fb(k)),
            };
            let bound = &(&three_quarters * &prod) * &m2;
            push(PRODUCT_TAIL, n, less(&abs[n], &bound));
            tail = Some((st, prod));
        }
    }
    // Consecutive agreements n_(i-1) < n_i: the maxima max(|x_(n-2)|, |x_(n-1)|)
    // shrink, by the tail product when the gap is at least four.
    let agree: Vec<usize> = sa.agree_indices.iter().copied().filter(|&n| n < reg).collect();
    for w in agree.windows(2) {
        let (p, c) = (w[0], w[1]);
        if p < 2 {
            continue;
        }
        let mp = max_of([&abs[p - 2], &abs[p - 1]]).unwrap();
        let mc = max_of([&abs[c - 2], &abs[c - 1]]).unwrap();
        push(AGREEMENT_MAXIMA, c, less(&mc, &mp));
        if p + 4 <= c {
            let prod = (p + 3..=c - 2).fold(one.clone(), |acc, k| &acc * fb(k));
            push(
                &format!("{AGREEMENT_MAXIMA} by tail product"),
                c,
                less(&mc, &(&(&three_quarters * &prod) * &mp)),
            );
        }
    }
    rep.equality_sites.extend(equality.into_iter().map(|nstar| EqualitySite { series: s, nstar }));
}
