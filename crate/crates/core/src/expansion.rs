//! The Jacobi-Perron map, expansion traces and convergent matrices.
//!
//! A state `(alpha, beta)` lives in the domain `0 <= alpha <= beta, 1 <= beta`.
//! One step emits the digit `([alpha], [beta])` and moves to
//! `({beta} / {alpha}, 1 / {alpha})`, stopping when `{alpha} = 0`.

use std::collections::HashMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed};
use serde::Serialize;
use thiserror::Error;

use crate::exactnum::{FieldElement, NumberField};
use crate::report::Check;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExpansionError {
    #[error("point is outside the domain 0 <= alpha <= beta, 1 <= beta")]
    NotInDomain,
    #[error("alpha and beta belong to different number fields")]
    FieldMismatch,
    #[error("digit {index} violates 0 <= a <= b, 1 <= b")]
    InvalidDigit { index: usize },
    #[error("digit sequence is inadmissible at position {index}: a_{index} >= 1 is required after a = b")]
    Inadmissible { index: usize },
    #[error("horizon must be at least 1")]
    InvalidHorizon,
    #[error("digit sequence is empty")]
    Empty,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Digit {
    pub a: BigInt,
    pub b: BigInt,
}

impl Digit {
    pub fn new(a: i64, b: i64) -> Self {
        Digit {
            a: BigInt::from(a),
            b: BigInt::from(b),
        }
    }

    pub fn is_valid(&self) -> bool {
        !self.a.is_negative() && self.a <= self.b && self.b >= BigInt::one()
    }
}

impl fmt::Display for Digit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.a, self.b)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct State {
    pub alpha: FieldElement,
    pub beta: FieldElement,
}

impl State {
    /// Builds a state, lifting a rational coordinate into the other
    /// coordinate's field when needed.
    pub fn new(alpha: FieldElement, beta: FieldElement) -> Result<Self, ExpansionError> {
        let target = if alpha.field().is_rational() {
            beta.field().clone()
        } else {
            alpha.field().clone()
        };
        let lift = |x: &FieldElement| x.rehome(&target).map_err(|_| ExpansionError::FieldMismatch);
        Ok(State {
            alpha: lift(&alpha)?,
            beta: lift(&beta)?,
        })
    }

    pub fn field(&self) -> &std::sync::Arc<NumberField> {
        self.alpha.field()
    }

    /// Exact membership in `0 <= alpha <= beta, 1 <= beta`.
    pub fn in_domain(&self) -> bool {
        let one = FieldElement::one(self.field());
        !self.alpha.is_negative() && self.alpha <= self.beta && self.beta >= one
    }
}

pub enum StepOutcome {
    Next(Digit, State),
    Terminal(Digit),
}

/// One application of the Jacobi-Perron map.
pub fn jp_step(s: &State) -> Result<StepOutcome, ExpansionError> {
    if !s.in_domain() {
        return Err(ExpansionError::NotInDomain);
    }
    let (a, fa) = s.alpha.floor_frac();
    let (b, fb) = s.beta.floor_frac();
    let digit = Digit { a, b };
    if fa.is_zero() {
        return Ok(StepOutcome::Terminal(digit));
    }
    let beta = fa.inverse().expect("nonzero fractional part");
    let alpha = &fb * &beta;
    Ok(StepOutcome::Next(digit, State { alpha, beta }))
}

/// One column `(r, p, q)` of a convergent matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Convergent {
    pub r: BigInt,
    pub p: BigInt,
    pub q: BigInt,
}

impl Convergent {
    fn new(r: i64, p: i64, q: i64) -> Self {
        Convergent {
            r: BigInt::from(r),
            p: BigInt::from(p),
            q: BigInt::from(q),
        }
    }

    /// `c1 * b + c2 * a + c3`.
    fn combine(c1: &Convergent, c2: &Convergent, c3: &Convergent, d: &Digit) -> Self {
        Convergent {
            r: &c1.r * &d.b + &c2.r * &d.a + &c3.r,
            p: &c1.p * &d.b + &c2.p * &d.a + &c3.p,
            q: &c1.q * &d.b + &c2.q * &d.a + &c3.q,
        }
    }
}

/// `L_n`, stored as its columns at indices `n - 2`, `n - 1`, `n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConvergentMatrix {
    pub columns: [Convergent; 3],
}

impl ConvergentMatrix {
    /// Entry at row `i` (0 = r, 1 = p, 2 = q) and column `j`.
    pub fn entry(&self, i: usize, j: usize) -> &BigInt {
        let c = &self.columns[j];
        match i {
            0 => &c.r,
            1 => &c.p,
            _ => &c.q,
        }
    }

    pub fn det(&self) -> BigInt {
        let m = |i, j| self.entry(i, j);
        m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1))
            - m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0))
            + m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0))
    }
}

/// Convergent columns for indices `-3, -2, ..., n`, where the first three
/// columns form the identity matrix.
fn convergent_columns(digits: &[Digit]) -> Vec<Convergent> {
    let mut cols = vec![
        Convergent::new(1, 0, 0),
        Convergent::new(0, 1, 0),
        Convergent::new(0, 0, 1),
    ];
    for d in digits {
        let k = cols.len();
        let next = Convergent::combine(&cols[k - 1], &cols[k - 2], &cols[k - 3], d);
        cols.push(next);
    }
    cols
}

pub fn check_admissible(digits: &[Digit]) -> bool {
    first_inadmissible(digits).is_none()
}

fn first_inadmissible(digits: &[Digit]) -> Option<usize> {
    digits
        .windows(2)
        .position(|w| w[0].a == w[0].b && w[1].a < BigInt::one())
        .map(|i| i + 1)
}

/// `L_0, ..., L_n` for an admissible digit word.
pub fn convergent_matrices(digits: &[Digit]) -> Result<Vec<ConvergentMatrix>, ExpansionError> {
    validate_word(digits)?;
    let cols = convergent_columns(digits);
    Ok((0..digits.len())
        .map(|n| ConvergentMatrix {
            columns: [cols[n + 1].clone(), cols[n + 2].clone(), cols[n + 3].clone()],
        })
        .collect())
}

pub(crate) fn validate_word(digits: &[Digit]) -> Result<(), ExpansionError> {
    if digits.is_empty() {
        return Err(ExpansionError::Empty);
    }
    if let Some(index) = digits.iter().position(|d| !d.is_valid()) {
        return Err(ExpansionError::InvalidDigit { index });
    }
    if let Some(index) = first_inadmissible(digits) {
        return Err(ExpansionError::Inadmissible { index });
    }
    Ok(())
}

/// Convergent columns of a word, indexed from `-3`.
#[derive(Clone, Debug)]
pub struct Columns(Vec<Convergent>);

impl Columns {
    pub fn of_word(digits: &[Digit]) -> Result<Self, ExpansionError> {
        validate_word(digits)?;
        Ok(Columns(convergent_columns(digits)))
    }

    /// Column `k` for `k >= -3`.
    pub fn at(&self, k: i64) -> &Convergent {
        &self.0[(k + 3) as usize]
    }

    pub fn r(&self, k: i64) -> &BigInt {
        &self.at(k).r
    }

    /// Index of the last column.
    pub fn last(&self) -> i64 {
        self.0.len() as i64 - 4
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Termination {
    /// `{alpha_m} = 0`; the map stops at step `m + 1`.
    Terminated { step: usize },
    HorizonReached,
    Periodic { u: usize, v: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct PeriodReport {
    pub u: usize,
    pub v: usize,
}

/// The result of expanding a point: digits, exact states, convergents and
/// the products `pi_n = beta_1 ... beta_n`.
#[derive(Clone, Debug)]
pub struct ExpansionTrace {
    digits: Vec<Digit>,
    states: Vec<State>,
    frac_alpha: Vec<FieldElement>,
    frac_beta: Vec<FieldElement>,
    columns: Columns,
    pi: Vec<FieldElement>,
    termination: Termination,
}

pub const DEFAULT_HORIZON: usize = 10_000;

/// Expands `p` for at most `horizon` digits. The expansion keeps running
/// after a repeated state so that the trace always has `horizon` digits
/// unless it terminates.
pub fn expand(p: &State, horizon: usize) -> Result<ExpansionTrace, ExpansionError> {
    if horizon == 0 {
        return Err(ExpansionError::InvalidHorizon);
    }
    if !p.in_domain() {
        return Err(ExpansionError::NotInDomain);
    }
    let field = p.field().clone();
    let mut digits = Vec::new();
    let mut states = vec![p.clone()];
    let mut frac_alpha = Vec::new();
    let mut frac_beta = Vec::new();
    let mut pi = vec![FieldElement::one(&field)];
    // Hashing covers the coordinates only, never the field's refinement cache.
    #[allow(clippy::mutable_key_type)]
    let mut seen: HashMap<State, usize> = HashMap::new();
    seen.insert(p.clone(), 0);
    let mut period: Option<PeriodReport> = None;
    let mut terminated = None;
    loop {
        let n = digits.len();
        let s = &states[n];
        let (a, fa) = s.alpha.floor_frac();
        let (b, fb) = s.beta.floor_frac();
        digits.push(Digit { a, b });
        frac_alpha.push(fa.clone());
        frac_beta.push(fb.clone());
        if fa.is_zero() {
            terminated = Some(n + 1);
            break;
        }
        if digits.len() == horizon {
            break;
        }
        let beta = fa.inverse().expect("nonzero fractional part");
        let alpha = &fb * &beta;
        let next = State { alpha, beta };
        pi.push(&pi[n] * &next.beta);
        if period.is_none() {
            if let Some(&u) = seen.get(&next) {
                period = Some(PeriodReport { u, v: n + 1 - u });
            } else {
                seen.insert(next.clone(), n + 1);
            }
        }
        states.push(next);
    }
    let termination = match (terminated, period) {
        (Some(step), _) => Termination::Terminated { step },
        (None, Some(PeriodReport { u, v })) => Termination::Periodic { u, v },
        (None, None) => Termination::HorizonReached,
    };
    let columns = Columns(convergent_columns(&digits));
    Ok(ExpansionTrace {
        digits,
        states,
        frac_alpha,
        frac_beta,
        columns,
        pi,
        termination,
    })
}

impl ExpansionTrace {
    pub fn field(&self) -> &std::sync::Arc<NumberField> {
        self.states[0].field()
    }

    pub fn initial(&self) -> &State {
        &self.states[0]
    }

    /// Number of digits (`m + 1` for a trace terminated at step `m + 1`).
    pub fn len(&self) -> usize {
        self.digits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.digits.is_empty()
    }

    pub fn digits(&self) -> &[Digit] {
        &self.digits
    }

    pub fn digit(&self, n: usize) -> &Digit {
        &self.digits[n]
    }

    pub fn states(&self) -> &[State] {
        &self.states
    }

    pub fn state(&self, n: usize) -> &State {
        &self.states[n]
    }

    pub fn alpha(&self, n: usize) -> &FieldElement {
        &self.states[n].alpha
    }

    pub fn beta(&self, n: usize) -> &FieldElement {
        &self.states[n].beta
    }

    pub fn frac_alpha(&self, n: usize) -> &FieldElement {
        &self.frac_alpha[n]
    }

    pub fn frac_beta(&self, n: usize) -> &FieldElement {
        &self.frac_beta[n]
    }

    /// `pi_n = beta_1 ... beta_n` (`pi_0 = 1`).
    pub fn pi(&self, n: usize) -> &FieldElement {
        &self.pi[n]
    }

    pub fn columns(&self) -> &Columns {
        &self.columns
    }

    /// Convergent column `k`, for `-3 <= k < len`.
    pub fn conv(&self, k: i64) -> &Convergent {
        self.columns.at(k)
    }

    pub fn r(&self, k: i64) -> &BigInt {
        &self.conv(k).r
    }

    pub fn p(&self, k: i64) -> &BigInt {
        &self.conv(k).p
    }

    pub fn q(&self, k: i64) -> &BigInt {
        &self.conv(k).q
    }

    /// `L_n` as its three active columns.
    pub fn matrix(&self, n: usize) -> ConvergentMatrix {
        let n = n as i64;
        ConvergentMatrix {
            columns: [
                self.conv(n - 2).clone(),
                self.conv(n - 1).clone(),
                self.conv(n).clone(),
            ],
        }
    }

    pub fn matrices(&self) -> Vec<ConvergentMatrix> {
        (0..self.len()).map(|n| self.matrix(n)).collect()
    }

    pub fn termination(&self) -> Termination {
        self.termination
    }

    /// Index `m` of the last state when the expansion terminated.
    pub fn terminal_index(&self) -> Option<usize> {
        match self.termination {
            Termination::Terminated { step } => Some(step - 1),
            _ => None,
        }
    }

    /// Number of states with a nonzero `{alpha_n}`.
    pub fn nonterminal_len(&self) -> usize {
        self.terminal_index().unwrap_or(self.len())
    }

    /// `p_k / r_k` and `q_k / r_k` as rationals (`k >= 0`).
    pub fn convergent_point(&self, k: usize) -> (BigRational, BigRational) {
        let c = self.conv(k as i64);
        (
            BigRational::new(c.p.clone(), c.r.clone()),
            BigRational::new(c.q.clone(), c.r.clone()),
        )
    }

    fn int(&self, n: &BigInt) -> FieldElement {
        FieldElement::from_bigint(self.field(), n)
    }
}

/// Minimal `(u, v)` with `state_u = state_{u+v}` among the stored states.
pub fn detect_period(trace: &ExpansionTrace) -> Option<PeriodReport> {
    #[allow(clippy::mutable_key_type)]
    let mut seen: HashMap<&State, usize> = HashMap::new();
    for (j, s) in trace.states().iter().enumerate() {
        if let Some(&u) = seen.get(s) {
            return Some(PeriodReport { u, v: j - u });
        }
        seen.insert(s, j);
    }
    None
}

/// Exact checks of the identities linking states, convergents and `pi_n`.
pub fn verify_identities(trace: &ExpansionTrace) -> Vec<Check> {
    let mut out = Vec::new();
    let f = trace.field();
    let one = FieldElement::one(f);
    let a0 = trace.alpha(0);
    let b0 = trace.beta(0);
    for n in 0..trace.len() {
        let ni = n as i64;
        out.push(Check::new("det L_n = 1", ni, trace.matrix(n).det() == BigInt::one()));
        if n >= 1 {
            let d = trace.digit(n);
            let expect = Convergent::combine(trace.conv(ni - 1), trace.conv(ni - 2), trace.conv(ni - 3), d);
            out.push(Check::new("convergent recurrence", ni, &expect == trace.conv(ni)));
            let growth = trace.r(ni) >= &(trace.r(ni - 1) + trace.r(ni - 3));
            out.push(Check::new("r_n >= r_(n-1) + r_(n-3)", ni, growth));
        }
        if n + 1 < trace.states().len() {
            // K_n (1, alpha_{n+1}, beta_{n+1}) = beta_{n+1} (1, alpha_n, beta_n)
            let d = trace.digit(n);
            let an1 = trace.alpha(n + 1);
            let bn1 = trace.beta(n + 1);
            let lhs = [
                bn1.clone(),
                &one + &(&trace.int(&d.a) * bn1),
                an1 + &(&trace.int(&d.b) * bn1),
            ];
            let rhs = [bn1.clone(), bn1 * trace.alpha(n), bn1 * trace.beta(n)];
            out.push(Check::new("K_n step identity", ni, lhs == rhs));
        }
        if n >= 1 && n < trace.states().len() {
            let an = trace.alpha(n);
            let bn = trace.beta(n);
            let c1 = trace.conv(ni - 1);
            let c2 = trace.conv(ni - 2);
            let c3 = trace.conv(ni - 3);
            let comb = |x1: &BigInt, x2: &BigInt, x3: &BigInt| {
                &(&trace.int(x1) * bn) + &(&trace.int(x2) * an) + trace.int(x3)
            };
            let pi_form = comb(&c1.r, &c2.r, &c3.r);
            let pi_n = trace.pi(n);
            out.push(Check::new("pi_n = r_(n-1) beta_n + r_(n-2) alpha_n + r_(n-3)", ni, &pi_form == pi_n));
            out.push(Check::new(
                "L_(n-1) (1, alpha_n, beta_n) = pi_n (1, alpha_0, beta_0)",
                ni,
                comb(&c1.p, &c2.p, &c3.p) == pi_n * a0 && comb(&c1.q, &c2.q, &c3.q) == pi_n * b0,
            ));
            out.push(Check::new(
                "alpha_0, beta_0 as weighted convergents",
                ni,
                &comb(&c1.p, &c2.p, &c3.p) / &pi_form == *a0 && &comb(&c1.q, &c2.q, &c3.q) / &pi_form == *b0,
            ));
        }
        if n >= 3 {
            let an = trace.alpha(n);
            for (name, row) in [("p", 1usize), ("q", 2usize)] {
                let ratio = |k: i64| {
                    let c = trace.conv(k);
                    let top = if row == 1 { &c.p } else { &c.q };
                    BigRational::new(top.clone(), c.r.clone())
                };
                // Weights (b_n, a_n, 1) on columns n-1, n-2, n-3.
                let prev = [ratio(ni - 1), ratio(ni - 2), ratio(ni - 3)];
                let cur = ratio(ni);
                let a_pos = trace.digit(n).a.is_positive();
                out.push(Check::new(
                    format!("{name}_n/r_n inside previous three"),
                    ni,
                    sandwiched(&prev, a_pos, &cur),
                ));
                // alpha_0 (or beta_0) with weights (beta_n, alpha_n, 1).
                let x0 = if row == 1 { a0 } else { b0 };
                let prev_f: Vec<FieldElement> = prev.iter().map(|r| trace.field_rational(r)).collect();
                out.push(Check::new(
                    format!("{} inside previous three", if row == 1 { "alpha_0" } else { "beta_0" }),
                    ni,
                    sandwiched(&prev_f, !an.is_zero(), x0),
                ));
            }
        }
    }
    if let Some(m) = trace.terminal_index() {
        // alpha_m is an integer, so the three-column weights collapse onto the last
        // two columns: point = (X_m + {beta_m} X_(m-1)) / (r_m + {beta_m} r_(m-1)).
        let mi = m as i64;
        let fb = trace.frac_beta(m);
        let weighted = |top: &BigInt, prev: &BigInt| {
            &trace.int(top) + &(fb * &trace.int(prev))
        };
        let den = weighted(trace.r(mi), trace.r(mi - 1));
        let ok = &weighted(trace.p(mi), trace.p(mi - 1)) / &den == *a0
            && &weighted(trace.q(mi), trace.q(mi - 1)) / &den == *b0;
        out.push(Check::new("terminal state reproduces the point", mi, ok));
        if fb.is_zero() {
            let (x, y) = trace.convergent_point(m);
            let ok = trace.field_rational(&x) == *a0 && trace.field_rational(&y) == *b0;
            out.push(Check::new("terminal convergent equals the point", mi, ok));
        }
    }
    out
}

/// A positive combination of `prev` (the middle weight possibly zero) lies
/// strictly between the smallest and largest values carrying weight, or
/// equals them when those coincide.
fn sandwiched<T: PartialOrd>(prev: &[T], middle_weighted: bool, x: &T) -> bool {
    let used: Vec<&T> = prev
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != 1 || middle_weighted)
        .map(|(_, v)| v)
        .collect();
    let lo = used.iter().fold(used[0], |m, v| if *v < m { *v } else { m });
    let hi = used.iter().fold(used[0], |m, v| if *v > m { *v } else { m });
    if lo == hi {
        x == lo
    } else {
        lo < x && x < hi
    }
}

impl ExpansionTrace {
    fn field_rational(&self, x: &BigRational) -> FieldElement {
        FieldElement::from_rational(self.field(), x.clone())
    }
}

/// Checks that the stored digits are admissible and each state follows from
/// the previous one by the map.
pub fn verify_trace_consistency(trace: &ExpansionTrace) -> Vec<Check> {
    let mut out = vec![Check::new("digits admissible", -1, check_admissible(trace.digits()))];
    for n in 0..trace.states().len() {
        out.push(Check::new("state in domain", n as i64, trace.state(n).in_domain()));
        if n >= 1 {
            let fa = trace.frac_alpha(n - 1);
            let fb = trace.frac_beta(n - 1);
            let ok = trace.alpha(n) == &(fb / fa) && trace.beta(n) == &fa.inverse().expect("nonzero");
            out.push(Check::new("state follows from previous by the map", n as i64, ok));
        }
    }
    out
}

#[cfg(test)]
mod tests;
