//! The sign hypothesis under which the conjugate quantity tends to zero,
//! evaluated on a finite trace with exact error signs and certified
//! conjugate signs.

use std::cmp::Ordering;

use num_bigint::BigInt;
use serde::Serialize;

use super::{certified_smaller, initial_conjugates, ConjugateChoice, ConjugateError, ConjugateTrace};
use crate::convergence::{DeltaTrace, Series, Sign, SignAnalysis};
use crate::exactnum::{decimal_string, ComplexInterval, ExactError, FieldElement, Interval, Rational, RootChoice};
use crate::expansion::ExpansionTrace;

/// Default tolerance for "the quantity has reached zero": `10^-6`.
pub const TAIL_TOLERANCE: (i64, i64) = (1, 1_000_000);

/// Whether the chosen conjugates are real or non-real.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConjugateCase {
    BothReal,
    BothImaginary,
    MixedRealImaginary,
}

impl ConjugateCase {
    pub fn of(choice: ConjugateChoice) -> Self {
        match (choice.alpha.is_real(), choice.beta.is_real()) {
            (true, true) => ConjugateCase::BothReal,
            (false, false) => ConjugateCase::BothImaginary,
            _ => ConjugateCase::MixedRealImaginary,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct HypothesisReport {
    pub case: ConjugateCase,
    pub choice: ConjugateChoice,
    /// `N` with alternating signs of both errors after it.
    pub n: usize,
    /// True when `N` was supplied rather than derived from a long enough
    /// alternating tail.
    pub n_provisional: bool,
    pub delta_sign: Sign,
    pub delta_prime_sign: Sign,
    /// Sign of the conjugate factor: `(alpha_0 - alpha'_0)(beta_0 - beta'_0)`,
    /// `Im(alpha'_0) Im(beta'_0)`, or the mixed form with a real part.
    pub conjugate_factor_sign: Sign,
    /// Sign of `Delta_N Delta'_N` times the conjugate factor.
    pub hypothesis_sign: Sign,
    pub satisfied: bool,
    /// A per-coordinate conjugate choice that makes the hypothesis hold when
    /// the given one does not.
    pub swap: Option<ConjugateChoice>,
    pub tail_start: usize,
    /// Upper bound on `max |quantity|` over the last quarter of the trace.
    pub tail_max: String,
    /// `|quantity(n)| < |quantity(N+3)|` on the last quarter, when defined.
    pub tail_below_anchor: Option<bool>,
    pub notes: Vec<String>,
}

/// `N = 1 + ` the last index where either error sequence repeats a sign, or
/// `0` when neither does.
pub fn provisional_n(d: &DeltaTrace) -> usize {
    let last = [Series::Delta, Series::DeltaPrime]
        .iter()
        .filter_map(|&s| SignAnalysis::of(d, s).last_agreement())
        .max();
    last.map_or(0, |n| n + 1)
}

/// The report with `N` derived from the trace. Abstains with `NoValidN` when
/// the alternating tail after the last agreement is shorter than five steps
/// or than twice the largest gap between agreements seen so far.
pub fn hypothesis_report(
    trace: &ExpansionTrace,
    d: &DeltaTrace,
    c: &ConjugateTrace,
) -> Result<HypothesisReport, ConjugateError> {
    let len = d.len();
    let mut agreements: Vec<usize> = [Series::Delta, Series::DeltaPrime]
        .iter()
        .flat_map(|&s| SignAnalysis::of(d, s).agree_indices)
        .collect();
    agreements.sort_unstable();
    agreements.dedup();
    let n = provisional_n(d);
    let max_gap = agreements.windows(2).map(|w| w[1] - w[0]).max().unwrap_or(0);
    let tail = len.saturating_sub(n);
    if tail < 5.max(2 * max_gap) {
        return Err(ConjugateError::NoValidN {
            last: n.saturating_sub(1),
            len,
        });
    }
    let mut rep = hypothesis_report_at(trace, d, c, n)?;
    rep.n_provisional = false;
    Ok(rep)
}

/// The report for a given `N` (`N < len`).
pub fn hypothesis_report_at(
    trace: &ExpansionTrace,
    d: &DeltaTrace,
    c: &ConjugateTrace,
    n: usize,
) -> Result<HypothesisReport, ConjugateError> {
    let len = d.len().min(c.len());
    if n >= len {
        return Err(ConjugateError::NoValidN { last: n, len });
    }
    let mut notes = Vec::new();
    let (ds, dps) = (d.signs()[n], d.signs_prime()[n]);
    let factor = conjugate_factor_sign(trace, c.choice, c.precision_cap)?;
    let hypothesis_sign = product(product(ds, dps), factor);
    if hypothesis_sign == Sign::Zero {
        notes.push("the hypothesis product vanishes; no verdict".to_string());
    }
    let satisfied = hypothesis_sign == Sign::Neg;
    let swap = if satisfied || product(ds, dps) == Sign::Zero {
        None
    } else {
        find_swap(trace, c.choice, product(ds, dps), c.precision_cap)?
    };
    let tail_start = (len - len / 4).max(1);
    let tail_max = (tail_start..len)
        .filter_map(|k| c.quantity_norm_sqr_upper(k))
        .max()
        .map_or("none".to_string(), |m| {
            let s = Interval::point(m).sqrt(64).expect("nonnegative");
            decimal_string(s.hi(), 12)
        });
    let tail_below_anchor = c.quantity(n + 3).and_then(|anchor| {
        let rest: Vec<&ComplexInterval> = (tail_start.max(n + 4)..len).filter_map(|k| c.quantity(k)).collect();
        (!rest.is_empty()).then(|| rest.iter().all(|z| certified_smaller(z, anchor)))
    });
    Ok(HypothesisReport {
        case: ConjugateCase::of(c.choice),
        choice: c.choice,
        n,
        n_provisional: true,
        delta_sign: ds,
        delta_prime_sign: dps,
        conjugate_factor_sign: factor,
        hypothesis_sign,
        satisfied,
        swap,
        tail_start,
        tail_max,
        tail_below_anchor,
        notes,
    })
}

fn product(a: Sign, b: Sign) -> Sign {
    match (a, b) {
        (Sign::Zero, _) | (_, Sign::Zero) => Sign::Zero,
        (x, y) if x == y => Sign::Pos,
        _ => Sign::Neg,
    }
}

/// Alternatives to `choice`, one coordinate changed first, then both; the
/// first whose factor makes the hypothesis negative.
fn find_swap(
    trace: &ExpansionTrace,
    choice: ConjugateChoice,
    delta_product: Sign,
    cap: u32,
) -> Result<Option<ConjugateChoice>, ConjugateError> {
    let roots: Vec<RootChoice> = trace
        .field()
        .root_choices()
        .into_iter()
        .filter(|r| *r != RootChoice::Real)
        .collect();
    let mut candidates: Vec<ConjugateChoice> = Vec::new();
    for &r in &roots {
        candidates.push(ConjugateChoice { alpha: r, beta: choice.beta });
        candidates.push(ConjugateChoice { alpha: choice.alpha, beta: r });
    }
    for &a in &roots {
        for &b in &roots {
            candidates.push(ConjugateChoice { alpha: a, beta: b });
        }
    }
    for cand in candidates.into_iter().filter(|c| *c != choice) {
        let f = conjugate_factor_sign(trace, cand, cap)?;
        if product(delta_product, f) == Sign::Neg {
            return Ok(Some(cand));
        }
    }
    Ok(None)
}

/// Certified sign of the conjugate factor for `choice`, raising precision
/// until decided or the cap is reached. A rational coordinate, whose
/// conjugates all coincide with it, gives `Sign::Zero`.
pub fn conjugate_factor_sign(
    trace: &ExpansionTrace,
    choice: ConjugateChoice,
    cap: u32,
) -> Result<Sign, ConjugateError> {
    let (a0, b0) = (trace.alpha(0), trace.beta(0));
    if a0.as_rational().is_some() || b0.as_rational().is_some() {
        return Ok(Sign::Zero);
    }
    let mut bits = 64;
    loop {
        let (ap, bp) = initial_conjugates(trace, choice, bits, cap)?;
        let part = |x: &FieldElement, z: &ComplexInterval, real: bool| -> Option<Ordering> {
            if real || choice_is_mixed(choice) {
                // x - z for a real conjugate, x - Re(z) otherwise.
                x.enclose(bits).sub(&z.re).strict_sign()
            } else {
                z.im.strict_sign()
            }
        };
        let sa = part(a0, &ap, choice.alpha.is_real());
        let sb = part(b0, &bp, choice.beta.is_real());
        if let (Some(x), Some(y)) = (sa, sb) {
            return Ok(product(ord_sign(x), ord_sign(y)));
        }
        if bits >= cap {
            return Err(ExactError::PrecisionExhausted(cap).into());
        }
        bits = (bits * 2).min(cap);
    }
}

fn choice_is_mixed(choice: ConjugateChoice) -> bool {
    ConjugateCase::of(choice) == ConjugateCase::MixedRealImaginary
}

fn ord_sign(o: Ordering) -> Sign {
    match o {
        Ordering::Less => Sign::Neg,
        Ordering::Equal => Sign::Zero,
        Ordering::Greater => Sign::Pos,
    }
}

/// `10^-6` as a rational.
pub fn tail_tolerance() -> Rational {
    Rational::new(BigInt::from(TAIL_TOLERANCE.0), BigInt::from(TAIL_TOLERANCE.1))
}
