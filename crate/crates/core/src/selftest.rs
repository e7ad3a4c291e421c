//! Built-in invariant suite over fixed inputs, one section per module.
//! Every input is fixed, so the report is identical from run to run.

use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::One;
use serde::Serialize;

use crate::conjugates::{cf_trace, jp_conjugate_trace, verify_conjugate_trace};
use crate::convergence::{
    bounds_report, delta_trace, determinant_checks, envelope_checks, growth_model, perron_checks,
    verify_delta_identities,
};
use crate::exactnum::{
    cube_root_two_field, format_element, make_field, parse_element, Embedding, FieldElement, NumberField,
    Rational, RootChoice,
};
use crate::expansion::{expand, verify_identities, verify_trace_consistency, Digit, ExpansionTrace, State, Termination};
use crate::geometry::{enumerate_and_decay, subdivision_check, verify_cell};
use crate::report::Check;

#[derive(Clone, Debug, Serialize)]
pub struct Section {
    pub name: String,
    pub checks: usize,
    pub failures: Vec<Check>,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct SelftestReport {
    pub sections: Vec<Section>,
    pub pass: bool,
}

pub fn run() -> SelftestReport {
    let sections = vec![
        section("exactnum", exactnum_checks()),
        section("expansion", expansion_checks()),
        section("convergence", convergence_checks()),
        section("conjugates", conjugate_checks()),
        section("geometry", geometry_checks()),
    ];
    let pass = sections.iter().all(|s| s.pass);
    SelftestReport { sections, pass }
}

fn section(name: &str, checks: Vec<Check>) -> Section {
    let failures: Vec<Check> = checks.iter().filter(|c| !c.pass).cloned().collect();
    Section {
        name: name.to_string(),
        checks: checks.len(),
        pass: failures.is_empty(),
        failures,
    }
}

fn q(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

fn elem(f: &Arc<NumberField>, c: &[i64]) -> FieldElement {
    FieldElement::new(f, c.iter().map(|&x| q(x, 1)).collect())
}

fn cubic_state() -> State {
    let f = cube_root_two_field();
    State::new(elem(&f, &[0, 1, 0]), elem(&f, &[0, 0, 1])).expect("cube roots lie in the domain")
}

/// Rational points `(a/k, b/k)` with `0 < a <= b`, `k <= b < 2k`, over a few
/// denominators.
fn rational_points() -> Vec<State> {
    let f = NumberField::rationals();
    let mut out = Vec::new();
    for k in [7i64, 31, 127, 1009, 9973] {
        for (i, j) in [(1, 0), (2, 3), (5, 1), (3, 4)] {
            let b = k + (j * k) / 5;
            let a = (i * b) / 6 + 1;
            let s = State::new(FieldElement::from_rational(&f, q(a, k)), FieldElement::from_rational(&f, q(b, k)));
            out.push(s.expect("points are built inside the domain"));
        }
    }
    out
}

fn exactnum_checks() -> Vec<Check> {
    let f = cube_root_two_field();
    let theta = f.generator();
    let mut checks = vec![Check::new("theta^3 = 2", 0, theta.pow(3) == FieldElement::from_int(&f, 2))];
    let x = elem(&f, &[1, -2, 3]);
    let inv_ok = x.inverse().is_ok_and(|i| i.checked_mul(&x).is_ok_and(|p| p == FieldElement::one(&f)));
    checks.push(Check::new("inverse times element is one", 0, inv_ok));
    checks.push(Check::new("floor of cube root of 2 is 1", 0, theta.floor() == BigInt::one()));
    let round_trip = parse_element(&format_element(&x)).is_ok_and(|y| y == x);
    checks.push(Check::new("text round trip", 0, round_trip));
    let sqrt2 = make_field(vec![BigInt::from(-2), BigInt::from(0), BigInt::one()], q(1, 1), q(2, 1));
    let ok = sqrt2.is_ok_and(|g| g.generator().pow(2) == FieldElement::from_int(&g, 2));
    checks.push(Check::new("square root of 2 field", 0, ok));
    checks
}

fn tagged(mut checks: Vec<Check>, tag: &str) -> Vec<Check> {
    for c in &mut checks {
        c.name = format!("{tag}: {}", c.name);
    }
    checks
}

fn traces() -> Vec<(String, ExpansionTrace)> {
    let mut out = Vec::new();
    if let Ok(t) = expand(&cubic_state(), 80) {
        out.push(("cubic".to_string(), t));
    }
    for (i, s) in rational_points().iter().enumerate() {
        if let Ok(t) = expand(s, 200) {
            out.push((format!("rational {i}"), t));
        }
    }
    out
}

fn expansion_checks() -> Vec<Check> {
    let f = NumberField::rationals();
    let mut checks = Vec::new();
    let half = State::new(FieldElement::from_rational(&f, q(1, 2)), FieldElement::from_rational(&f, q(3, 2)));
    let ok = half.ok().and_then(|s| expand(&s, 10).ok()).is_some_and(|t| {
        t.digits() == [Digit::new(0, 1), Digit::new(1, 2)] && t.convergent_point(1) == (q(1, 2), q(3, 2))
    });
    checks.push(Check::new("(1/2, 3/2) terminates on its convergent", 1, ok));
    let periodic = expand(&cubic_state(), 10).is_ok_and(|t| t.termination() == Termination::Periodic { u: 2, v: 1 });
    checks.push(Check::new("cube roots of 2 and 4 are periodic", 2, periodic));
    for (tag, t) in traces() {
        checks.extend(tagged(verify_identities(&t), &tag));
        checks.extend(tagged(verify_trace_consistency(&t), &tag));
    }
    checks
}

fn convergence_checks() -> Vec<Check> {
    let gm = growth_model();
    let mut checks = Vec::new();
    for (tag, t) in traces() {
        let d = delta_trace(&t);
        checks.extend(tagged(verify_delta_identities(&t, &d), &tag));
        checks.extend(tagged(envelope_checks(&t, &d), &tag));
        checks.extend(tagged(determinant_checks(&t, &d), &tag));
        checks.extend(tagged(perron_checks(&t, &d, &gm), &tag));
        checks.extend(tagged(bounds_report(&t, &d).checks, &tag));
    }
    checks
}

fn conjugate_checks() -> Vec<Check> {
    let mut checks = Vec::new();
    let sqrt2 = make_field(vec![BigInt::from(-2), BigInt::from(0), BigInt::one()], q(1, 1), q(2, 1));
    match sqrt2.map_err(|e| e.to_string()).and_then(|g| {
        cf_trace(&g.generator(), &Embedding::new(RootChoice::OtherReal(0)), 20).map_err(|e| e.to_string())
    }) {
        Ok(cf) => {
            checks.extend(tagged(cf.verify().unwrap_or_default(), "square root of 2"));
            let inside = (2..cf.len()).all(|n| cf.in_unit_interval(n));
            checks.push(Check::new("square root of 2: conjugates in (-1, 0)", 2, inside));
        }
        Err(_) => checks.push(Check::new("square root of 2: continued fraction", 0, false)),
    }
    let ok = expand(&cubic_state(), 30).ok().and_then(|t| {
        let c = jp_conjugate_trace(&t, &Embedding::new(RootChoice::Complex { upper: true })).ok()?;
        verify_conjugate_trace(&t, &c).ok()
    });
    match ok {
        Some(cs) => checks.extend(tagged(cs, "cubic")),
        None => checks.push(Check::new("cubic: conjugate trace", 0, false)),
    }
    checks
}

fn geometry_checks() -> Vec<Check> {
    let digits: Vec<Digit> = (1..=3).flat_map(|b| (0..=b).map(move |a| Digit::new(a, b))).collect();
    let mut words: Vec<Vec<Digit>> = digits.iter().map(|d| vec![d.clone()]).collect();
    let mut checks = Vec::new();
    for _ in 0..3 {
        for w in &words {
            match verify_cell(w) {
                Ok(cs) => checks.extend(cs),
                Err(_) => checks.push(Check::new("cell", w.len() as i64 - 1, false)),
            }
        }
        words = words
            .iter()
            .flat_map(|w| {
                let tri = w.last().is_some_and(|l| l.a == l.b);
                digits
                    .iter()
                    .filter(move |d| !tri || d.a >= BigInt::one())
                    .map(move |d| [w.as_slice(), std::slice::from_ref(d)].concat())
            })
            .collect();
    }
    for d in &digits {
        let ok = subdivision_check(std::slice::from_ref(d), 50).is_ok_and(|r| r.pass);
        checks.push(Check::new("truncated subdivision sums", 0, ok));
    }
    for (m, depth) in [(2u32, 6usize), (3, 4)] {
        let ok = enumerate_and_decay(m, depth).is_ok_and(|r| r.pass);
        checks.push(Check::new(format!("bounded-digit measure decay, m = {m}"), depth as i64, ok));
    }
    checks
}
