//! Finite-trace classification of the ideal-convergence hypotheses.
//!
//! Limit hypotheses are replaced by surrogates over the trailing `window`
//! fraction of the trace:
//! - "infinitely many agreements" holds when an agreement index falls in the window;
//! - `limsup x_n < 1` for `x = {alpha}` or `{beta}` holds when the maximum over the
//!   second half of the window does not exceed the maximum over the first half;
//! - `prod {beta_n} != 0` holds when the product over the window is at least `1/2`;
//! - `beta_n` bounded holds when the largest `b_n` in the second half of the window
//!   does not exceed the largest in the first half.
//!
//! Traces shorter than six steps, and terminated traces, are undecidable.

use std::cell::OnceCell;
use std::cmp::Ordering;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use super::{
    enclose_relative, less, max_of, ConvergenceError, DeltaTrace, Series, SignAnalysis,
};
use crate::exactnum::interval::{ln_enclosure, pow2_neg};
use crate::exactnum::{format_element, format_rational, FieldElement, Interval, Rational};
use crate::expansion::ExpansionTrace;

/// Default trailing fraction of the trace used by the surrogates.
pub const DEFAULT_WINDOW: (i64, i64) = (1, 2);

const MIN_DECIDABLE_LEN: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    HoldsOnTrace,
    FailsOnTrace,
    UndecidableOnFiniteTrace,
}

impl Verdict {
    fn of(b: bool) -> Verdict {
        if b {
            Verdict::HoldsOnTrace
        } else {
            Verdict::FailsOnTrace
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Flag {
    pub verdict: Verdict,
    /// Whether the verdict can no longer change once the trace is extended.
    pub monotone: bool,
}

impl Flag {
    fn windowed(v: Verdict) -> Flag {
        Flag {
            verdict: v,
            monotone: false,
        }
    }
}

/// Agreements separated by gaps of at least four.
#[derive(Clone, Debug, Serialize)]
pub struct GapEvidence {
    pub agreements: Vec<usize>,
    pub large_gaps: usize,
    pub large_gaps_in_window: usize,
    pub hypothesis: Flag,
}

/// `liminf beta_n > 1` together with infinitely many agreements.
#[derive(Clone, Debug, Serialize)]
pub struct AgreementEvidence {
    pub max_frac_alpha_first_half: String,
    pub max_frac_alpha_second_half: String,
    pub agreements_in_window: usize,
    pub hypothesis: Flag,
}

/// Geometric decay `|Delta_n| < {alpha_0} c^(n-N)`, `|Delta'_n| < c^(n-N)`.
#[derive(Clone, Debug, Serialize)]
pub struct GeometricRate {
    pub epsilon: String,
    pub epsilon_exact: String,
    pub c: String,
    pub n: usize,
    /// `N` is the smallest index with the maximum below one on the trace,
    /// which need not match any asymptotic choice.
    pub n_is_greedy: bool,
    pub checked: usize,
    pub failures: Vec<usize>,
    pub failures_prime: Vec<usize>,
    pub hypothesis: Flag,
    pub bounds: Flag,
}

/// Power-law bound `|p_n/r_n - alpha_0| < {alpha_0} c^(-N) / r_n^(1+a)`.
#[derive(Clone, Debug, Serialize)]
pub struct PowerLaw {
    /// `M = max b_n + 1`, so that `beta_n < M` on the trace.
    pub m: String,
    pub m_at_most_two: bool,
    pub a: String,
    pub checked: usize,
    pub failures: Vec<usize>,
    pub failures_prime: Vec<usize>,
    pub hypothesis: Flag,
    pub bounds: Flag,
}

#[derive(Clone, Debug, Serialize)]
pub struct ProductEvidence {
    pub window_beta_product: String,
    pub agreements_in_window: usize,
    pub hypothesis: Flag,
}

/// `(2 + a_n) / b_n <= theta < 1` over the window.
#[derive(Clone, Debug, Serialize)]
pub struct PerronCondition {
    pub theta: Option<String>,
    pub hypothesis: Flag,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceReport {
    pub window: String,
    pub window_start: usize,
    pub trace_len: usize,
    pub terminated: bool,
    pub gap_frequency: GapEvidence,
    pub beta_liminf: AgreementEvidence,
    pub geometric_rate: GeometricRate,
    pub power_law: PowerLaw,
    pub beta_product: ProductEvidence,
    pub finite_agreements: ProductEvidence,
    pub perron_condition: PerronCondition,
    pub notes: Vec<String>,
}

pub fn classify_ideal_convergence(
    trace: &ExpansionTrace,
    d: &DeltaTrace,
    window: &Rational,
) -> Result<ConvergenceReport, ConvergenceError> {
    if !window.is_positive() || window > &Rational::one() {
        return Err(ConvergenceError::WindowInvalid);
    }
    let len = trace.len();
    let nt = trace.nonterminal_len();
    let terminated = trace.terminal_index().is_some();
    let span = (window * Rational::from_integer(BigInt::from(len))).ceil().to_integer();
    let span: usize = span.try_into().unwrap_or(len);
    let ws = len - span.min(len);
    let mid = ws + nt.saturating_sub(ws) / 2;
    let decidable = len >= MIN_DECIDABLE_LEN && !terminated && mid > ws && nt > mid;
    let gate = |v: Verdict| {
        Flag::windowed(if decidable {
            v
        } else {
            Verdict::UndecidableOnFiniteTrace
        })
    };
    let mut notes = Vec::new();
    if len < MIN_DECIDABLE_LEN {
        notes.push(format!("trace has {len} steps; limit hypotheses need at least {MIN_DECIDABLE_LEN}"));
    }
    if terminated {
        notes.push("expansion terminated; limit hypotheses do not apply".to_string());
    }

    let sa = SignAnalysis::of(d, Series::Delta);
    let agreements = sa.agree_indices.clone();
    let in_window = agreements.iter().filter(|&&n| n >= ws).count();
    let gaps: Vec<usize> = agreements.windows(2).filter(|w| w[0] + 4 <= w[1]).map(|w| w[1]).collect();
    let gaps_in_window = gaps.iter().filter(|&&n| n >= ws).count();
    let gap_frequency = GapEvidence {
        agreements: agreements.clone(),
        large_gaps: gaps.len(),
        large_gaps_in_window: gaps_in_window,
        hypothesis: gate(Verdict::of(gaps_in_window > 0)),
    };

    let fa_first = max_of((ws..mid).map(|n| trace.frac_alpha(n)));
    let fa_second = max_of((mid..nt).map(|n| trace.frac_alpha(n)));
    let fb_first = max_of((ws..mid).map(|n| trace.frac_beta(n)));
    let fb_second = max_of((mid..nt).map(|n| trace.frac_beta(n)));
    let no_drift = |a: &Option<FieldElement>, b: &Option<FieldElement>| match (a, b) {
        (Some(a), Some(b)) => !less(a, b),
        _ => false,
    };
    let alpha_ok = no_drift(&fa_first, &fa_second);
    let beta_ok = no_drift(&fb_first, &fb_second);
    let show = |x: &Option<FieldElement>| x.as_ref().map_or("none".to_string(), |x| x.to_decimal(12));
    let beta_liminf = AgreementEvidence {
        max_frac_alpha_first_half: show(&fa_first),
        max_frac_alpha_second_half: show(&fa_second),
        agreements_in_window: in_window,
        hypothesis: gate(Verdict::of(alpha_ok && in_window > 0)),
    };

    let (geometric_rate, eps) = geometric_rate(trace, d, nt, gate(Verdict::of(alpha_ok && beta_ok)));

    let max_b = trace.digits().iter().map(|g| g.b.clone()).max().unwrap_or_else(BigInt::zero);
    let b_first = trace.digits()[ws..mid.min(len)].iter().map(|g| g.b.clone()).max();
    let b_second = trace.digits()[mid.min(len)..nt].iter().map(|g| g.b.clone()).max();
    let bounded = matches!((&b_first, &b_second), (Some(a), Some(b)) if b <= a);
    let m = &max_b + BigInt::one();
    if m <= BigInt::from(2) {
        notes.push("M <= 2: the bounded-beta hypothesis is outside its stated range".to_string());
    }
    let power_law = power_law(trace, d, nt, &m, &geometric_rate, eps.as_ref(), gate(Verdict::of(bounded)));

    let product = window_product(trace, ws, nt);
    let half = Rational::new(BigInt::one(), BigInt::from(2));
    let product_large = product.as_ref().map(|p| p.1 >= half);
    let product_str = product.as_ref().map_or("none".to_string(), |p| p.0.clone());
    let beta_product = ProductEvidence {
        window_beta_product: product_str.clone(),
        agreements_in_window: in_window,
        hypothesis: gate(Verdict::of(in_window > 0 && product_large == Some(true))),
    };
    let finite_agreements = ProductEvidence {
        window_beta_product: product_str,
        agreements_in_window: in_window,
        hypothesis: gate(Verdict::of(in_window == 0 && product_large == Some(false))),
    };

    let theta = trace.digits()[ws..nt]
        .iter()
        .map(|g| Rational::new(BigInt::from(2) + &g.a, g.b.clone()))
        .max();
    let perron_condition = PerronCondition {
        theta: theta.as_ref().map(format_rational),
        hypothesis: gate(Verdict::of(theta.is_some_and(|t| t < Rational::one()))),
    };
    notes.push("N is chosen greedily on the trace and may differ from an asymptotic choice".to_string());

    Ok(ConvergenceReport {
        window: format_rational(window),
        window_start: ws,
        trace_len: len,
        terminated,
        gap_frequency,
        beta_liminf,
        geometric_rate,
        power_law,
        beta_product,
        finite_agreements,
        perron_condition,
        notes,
    })
}

/// Epsilon, `c = epsilon^(1/3)` and `N`, with `|Delta_n|^3 < {alpha_0}^3 eps^(n-N)`
/// and `|Delta'_n|^3 < eps^(n-N)` checked exactly for `N + 3 <= n < nt`.
fn geometric_rate(
    trace: &ExpansionTrace,
    d: &DeltaTrace,
    nt: usize,
    hypothesis: Flag,
) -> (GeometricRate, Option<FieldElement>) {
    let f = trace.field();
    let one = FieldElement::one(f);
    let half = FieldElement::from_rational(f, Rational::new(BigInt::one(), BigInt::from(2)));
    let rate: Vec<FieldElement> = (0..nt)
        .map(|n| max_of([&(&(&one + trace.frac_alpha(n)) * &half), trace.frac_beta(n)]).unwrap())
        .collect();
    // Smallest N with every rate at or after N below one.
    let n0 = (0..nt).rev().find(|&n| !less(&rate[n], &one)).map_or(0, |n| n + 1);
    let eps = max_of(rate[n0.min(nt)..].iter());
    let mut failures = Vec::new();
    let mut failures_prime = Vec::new();
    let mut checked = 0;
    if let Some(eps) = &eps {
        let fa0_cubed = trace.frac_alpha(0).pow(3);
        let mut pow = eps.pow(3);
        for n in n0 + 3..nt {
            let x = d.delta(n as i64).abs().pow(3);
            if !less(&x, &(&fa0_cubed * &pow)) {
                failures.push(n);
            }
            let y = d.delta_prime(n as i64).abs().pow(3);
            if !less(&y, &pow) {
                failures_prime.push(n);
            }
            checked += 1;
            pow = &pow * eps;
        }
    }
    let bounds_ok = eps.is_some() && failures.is_empty() && failures_prime.is_empty();
    let (epsilon, epsilon_exact, c) = match &eps {
        Some(e) => (e.to_decimal(12), format_element(e), cube_root_decimal(e)),
        None => ("none".into(), "none".into(), "none".into()),
    };
    let rep = GeometricRate {
        epsilon,
        epsilon_exact,
        c,
        n: n0,
        n_is_greedy: true,
        checked,
        failures,
        failures_prime,
        hypothesis,
        bounds: Flag {
            verdict: Verdict::of(bounds_ok),
            monotone: false,
        },
    };
    (rep, eps)
}

/// `a = -ln c / ln(3M)` and the power-law bounds for `3 <= n < nt`, by
/// certified logarithms.
fn power_law(
    trace: &ExpansionTrace,
    d: &DeltaTrace,
    nt: usize,
    m: &BigInt,
    geo: &GeometricRate,
    eps: Option<&FieldElement>,
    hypothesis: Flag,
) -> PowerLaw {
    let mut failures = Vec::new();
    let mut failures_prime = Vec::new();
    let mut checked = 0;
    let mut a_str = "none".to_string();
    let fa0 = trace.frac_alpha(0);
    if let (Some(eps), false) = (eps, fa0.is_zero()) {
        let three_m = Rational::from_integer(BigInt::from(3) * m);
        let n_third = Rational::new(BigInt::from(geo.n), BigInt::from(3));
        let three = Rational::from_integer(BigInt::from(3));
        let consts = |bits: u32| {
            let ln_eps = enclose_relative(eps, bits).ln(bits).expect("epsilon > 0");
            let ln_3m = ln_enclosure(&three_m, bits).scale(&three);
            let a = ln_eps.neg().div(&ln_3m).expect("ln 3M > 0");
            // -(N/3) ln eps = ln c^(-N)
            let shift = ln_eps.scale(&n_third).neg();
            let ln_fa0 = enclose_relative(fa0, bits).ln(bits).expect("{alpha_0} > 0");
            (a, shift, ln_fa0)
        };
        let base = consts(96);
        a_str = decimal_of(&base.0);
        let ladder: [OnceCell<_>; 3] = [OnceCell::from(base), OnceCell::new(), OnceCell::new()];
        for n in 3..nt {
            let ok = |x: &FieldElement, with_fa0: bool| {
                if x.is_zero() {
                    return true;
                }
                LADDER.iter().zip(&ladder).any(|(&bits, cell)| {
                    let (a, shift, ln_fa0) = cell.get_or_init(|| consts(bits));
                    let ln_r = ln_enclosure(&Rational::from_integer(trace.r(n as i64).clone()), bits);
                    let lhs = enclose_relative(x, bits).abs().ln(bits).expect("nonzero");
                    let mut rhs = shift.sub(&a.mul(&ln_r));
                    if with_fa0 {
                        rhs = rhs.add(ln_fa0);
                    }
                    lhs.hi() < rhs.lo()
                })
            };
            if !ok(d.delta(n as i64), true) {
                failures.push(n);
            }
            if !ok(d.delta_prime(n as i64), false) {
                failures_prime.push(n);
            }
            checked += 1;
        }
    }
    let bounds_ok = eps.is_some() && !fa0.is_zero() && failures.is_empty() && failures_prime.is_empty();
    PowerLaw {
        m: m.to_string(),
        m_at_most_two: m <= &BigInt::from(2),
        a: a_str,
        checked,
        failures,
        failures_prime,
        hypothesis,
        bounds: Flag {
            verdict: Verdict::of(bounds_ok),
            monotone: false,
        },
    }
}

/// Working precisions for the certified logarithms, tried in order.
const LADDER: [u32; 3] = [96, 256, 1024];

/// Product of `{beta_n}` over `[ws, nt)`: a display string and a rational
/// that lies on the same side of `1/2` as the exact product.
fn window_product(trace: &ExpansionTrace, ws: usize, nt: usize) -> Option<(String, Rational)> {
    if ws >= nt {
        return None;
    }
    let half = Rational::new(BigInt::one(), BigInt::from(2));
    let bits = 192;
    let mut acc = Interval::from_int(1);
    for n in ws..nt {
        acc = acc.mul(&trace.frac_beta(n).enclose(bits)).round_out(bits);
    }
    let shown = format!("{:.6e}", acc.to_f64());
    if acc.hi() < &half {
        return Some((shown, acc.hi().clone()));
    }
    if acc.lo() >= &half {
        return Some((shown, acc.lo().clone()));
    }
    let exact = (ws..nt).fold(FieldElement::one(trace.field()), |p, n| &p * trace.frac_beta(n));
    let rep = match (&exact - &FieldElement::from_rational(trace.field(), half.clone())).sign() {
        Ordering::Less => Rational::zero(),
        _ => half,
    };
    Some((shown, rep))
}

/// `x^(1/3)` to twelve decimals by bisection on an enclosure of `x`.
fn cube_root_decimal(x: &FieldElement) -> String {
    let iv = x.enclose(96);
    let target = iv.mid();
    let mut lo = Rational::zero();
    let mut hi = Rational::one().max(target.clone());
    let tol = pow2_neg(48);
    while &hi - &lo > tol {
        let m = (&lo + &hi) / Rational::from_integer(BigInt::from(2));
        if &m * &m * &m < target {
            lo = m;
        } else {
            hi = m;
        }
    }
    crate::exactnum::decimal_string(&lo, 12)
}

fn decimal_of(iv: &Interval) -> String {
    crate::exactnum::decimal_string(&iv.mid(), 12)
}
