//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Every criterion is evaluated as stated. A criterion made of several claims
//! fails if any claim fails. Two claims are false as literally stated and
//! are listed in `KNOWN_UNATTAINABLE`; the test requires that exactly those
//! claims fail and that everything else passes.

use std::io::Write;
use std::process::Command;
use std::sync::{Arc, OnceLock};
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_traits::{One, Signed};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use jp_core::conjugates::{
    cf_trace, jp_conjugate_trace_with, provisional_n, tail_tolerance, hypothesis_report_at, ConjugateChoice,
};
use jp_core::convergence::{
    bounds_report, classify_ideal_convergence, delta_trace, determinant_checks, growth_model, minimal_r,
    verify_delta_identities, Verdict,
};
use jp_core::exactnum::{cube_root_two_field, make_field, Embedding, FieldElement, NumberField, Rational, RootChoice};
use jp_core::expansion::{
    expand, jp_step, verify_identities, verify_trace_consistency, Digit, ExpansionTrace, State, StepOutcome, Termination,
};
use jp_core::geometry::{cell, cell_measure, enumerate_and_decay, polygon_area, CellKind};

/// Claims that are false as printed, keyed by criterion number.
const KNOWN_UNATTAINABLE: &[(usize, &str)] = &[
    // |Delta_0| = |a_0 - alpha_0| = {alpha_0} exactly, so the strict bound
    // cannot hold at n = 0.
    (4, "|Delta_0| < {alpha_0} (strict at n = 0)"),
    // lambda^3 / (3 lambda - 2) = 1.313423...; 1.0739... is lambda^2 / 2.
    (5, "lambda^3/(3 lambda - 2) = 1.0739..."),
];

struct Claim {
    name: String,
    pass: bool,
}

fn claim(name: impl Into<String>, pass: bool) -> Claim {
    Claim { name: name.into(), pass }
}

struct Outcome {
    title: &'static str,
    claims: Vec<Claim>,
    elapsed: Duration,
}

fn q(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

fn elem(f: &Arc<NumberField>, c: &[i64]) -> FieldElement {
    FieldElement::new(f, c.iter().map(|&x| q(x, 1)).collect())
}

fn cubic_state() -> State {
    let f = cube_root_two_field();
    State::new(elem(&f, &[0, 1, 0]), elem(&f, &[0, 0, 1])).unwrap()
}

/// 100 seeded random rational points in the domain with denominators at most
/// `10^4`, expanded to termination.
fn rational_traces() -> &'static Vec<ExpansionTrace> {
    static CELL: OnceLock<Vec<ExpansionTrace>> = OnceLock::new();
    CELL.get_or_init(|| {
        let f = NumberField::rationals();
        let mut rng = ChaCha8Rng::seed_from_u64(20240601);
        (0..100)
            .map(|_| {
                let bd: i64 = rng.gen_range(1..=10_000);
                let bn: i64 = rng.gen_range(bd..5 * bd);
                let ad: i64 = rng.gen_range(1..=10_000);
                let an: i64 = rng.gen_range(0..=(bn * ad) / bd);
                let s = State::new(
                    FieldElement::from_rational(&f, q(an, ad)),
                    FieldElement::from_rational(&f, q(bn, bd)),
                )
                .unwrap();
                expand(&s, 10_000).unwrap()
            })
            .collect()
    })
}

/// The cube-root trace with indices `0..=200`.
fn cubic_trace() -> &'static ExpansionTrace {
    static CELL: OnceLock<ExpansionTrace> = OnceLock::new();
    CELL.get_or_init(|| expand(&cubic_state(), 201).unwrap())
}

fn all_traces() -> Vec<&'static ExpansionTrace> {
    rational_traces().iter().chain(std::iter::once(cubic_trace())).collect()
}

fn timed(title: &'static str, f: impl FnOnce() -> Vec<Claim>) -> Outcome {
    let start = Instant::now();
    let claims = f();
    Outcome {
        title,
        claims,
        elapsed: start.elapsed(),
    }
}

fn within(limit_secs: u64, start: Instant) -> Claim {
    claim(format!("runtime < {limit_secs} s"), start.elapsed() < Duration::from_secs(limit_secs))
}

fn terminating_reconstruction() -> Vec<Claim> {
    let start = Instant::now();
    let f = NumberField::rationals();
    let s = State::new(FieldElement::from_rational(&f, q(1, 2)), FieldElement::from_rational(&f, q(3, 2))).unwrap();
    let t = expand(&s, 10).unwrap();
    vec![
        claim("digits (0,1),(1,2)", t.digits() == [Digit::new(0, 1), Digit::new(1, 2)]),
        claim("p_1/r_1 = 1/2, q_1/r_1 = 3/2", t.convergent_point(1) == (q(1, 2), q(3, 2))),
        within(1, start),
    ]
}

fn cubic_periodicity() -> Vec<Claim> {
    let start = Instant::now();
    let f = cube_root_two_field();
    let t = expand(&cubic_state(), 10).unwrap();
    let s2 = t.state(2).clone();
    let fixed = matches!(jp_step(&s2), Ok(StepOutcome::Next(d, s)) if d == Digit::new(3, 3) && s == s2);
    vec![
        claim("Periodic(u=2, v=1)", t.termination() == Termination::Periodic { u: 2, v: 1 }),
        claim("period digit (3,3)", *t.digit(2) == Digit::new(3, 3)),
        claim("alpha_2 = theta + 2", s2.alpha == elem(&f, &[2, 1, 0])),
        claim("beta_2 = theta^2 + theta + 1", s2.beta == elem(&f, &[1, 1, 1])),
        claim("state 2 is an exact fixed point", fixed),
        within(1, start),
    ]
}

fn identity_suite() -> Vec<Claim> {
    let start = Instant::now();
    let mut bad = Vec::new();
    for (i, t) in all_traces().into_iter().enumerate() {
        let d = delta_trace(t);
        let mut checks = verify_identities(t);
        checks.extend(verify_trace_consistency(t));
        checks.extend(verify_delta_identities(t, &d));
        checks.extend(determinant_checks(t, &d));
        bad.extend(checks.into_iter().filter(|c| !c.pass).map(|c| format!("trace {i}: {} at {}", c.name, c.index)));
    }
    let cubic_depth = cubic_trace().len() > 200;
    vec![
        claim(format!("identities hold exactly ({} failures)", bad.len()), bad.is_empty()),
        claim("cubic trace reaches depth 200", cubic_depth),
        within(60, start),
    ]
}

fn error_envelope() -> Vec<Claim> {
    let gm = growth_model();
    let (mut n0, mut later, mut prime, mut perron) = (true, true, true, true);
    for t in all_traces() {
        let d = delta_trace(t);
        let fa0 = t.frac_alpha(0);
        for n in 0..d.len() {
            let below = (&d.delta(n as i64).abs() - fa0).is_negative();
            if n == 0 {
                n0 &= below;
            } else {
                later &= below;
            }
            prime &= (&d.delta_prime(n as i64).abs() - &FieldElement::one(t.field())).is_negative();
        }
        for n in 3..t.len().min(201) {
            perron &= gm.between_powers(n, t.r(n as i64)).0;
        }
    }
    let minimal = (3..=200).all(|n| gm.between_powers(n, &minimal_r(n)) == (true, true));
    vec![
        claim("|Delta_0| < {alpha_0} (strict at n = 0)", n0),
        claim("|Delta_n| < {alpha_0} for n >= 1", later),
        claim("|Delta'_n| < 1", prime),
        claim("lambda^(n-2) < r_n for 3 <= n <= 200", perron),
        claim("minimal digits: lambda^(n-2) < r_n < lambda^(n-1)", minimal),
    ]
}

fn growth_constants() -> Vec<Claim> {
    let gm = growth_model();
    let tol = FieldElement::from_rational(&gm.field, q(1, 1_000_000));
    let limit = gm.limit_const.to_decimal(6);
    vec![
        claim("lambda = 1.4655712...", gm.lambda.to_decimal(7) == "1.4655712"),
        claim("lambda^3/(3 lambda - 2) = 1.0739...", gm.limit_const.to_decimal(4) == "1.0739"),
        claim(
            format!("r_60/lambda^58 within 1e-6 of lambda^3/(3 lambda - 2) = {limit}"),
            (&gm.minimal_ratio_error(60) - &tol).is_negative(),
        ),
    ]
}

fn rate_bounds() -> Vec<Claim> {
    let start = Instant::now();
    let t = cubic_trace();
    let d = delta_trace(t);
    let rep = classify_ideal_convergence(t, &d, &q(1, 2)).unwrap();
    let g = &rep.geometric_rate;
    let p = &rep.power_law;
    vec![
        claim(
            format!("|Delta_n| < {{alpha_0}} c^(n-N) for N+3 <= n <= 200 (N = {}, c = {})", g.n, g.c),
            g.failures.is_empty() && g.bounds.verdict == Verdict::HoldsOnTrace && g.checked == 198 - g.n,
        ),
        claim(
            format!("|p_n/r_n - alpha_0| < {{alpha_0}} c^(-N)/r_n^(1+a) for 3 <= n <= 200 (M = {}, a = {})", p.m, p.a),
            p.failures.is_empty() && p.bounds.verdict == Verdict::HoldsOnTrace && p.checked == 198,
        ),
        within(30, start),
    ]
}

fn lemma_sweep() -> Vec<Claim> {
    let mut failures = 0;
    let mut total = 0;
    for t in all_traces() {
        let d = delta_trace(t);
        let rep = bounds_report(t, &d);
        total += rep.checks.len();
        failures += rep.checks.iter().filter(|c| !c.pass).count();
    }
    vec![claim(format!("bounds_report: {failures} failures of {total}"), failures == 0 && total > 0)]
}

fn conjugate_limit() -> Vec<Claim> {
    let t = expand(&cubic_state(), 61).unwrap();
    let d = delta_trace(&t);
    let n = provisional_n(&d);
    let e = Embedding::new(RootChoice::Complex { upper: true });
    let mut chosen = None;
    for upper in [true, false] {
        let choice = ConjugateChoice::genuine(RootChoice::Complex { upper });
        let c = jp_conjugate_trace_with(&t, choice, &e).unwrap();
        let rep = hypothesis_report_at(&t, &d, &c, n).unwrap();
        let pick = if rep.satisfied { Some(choice) } else { rep.swap };
        if let Some(p) = pick {
            chosen = Some(p);
            break;
        }
    }
    let tol = tail_tolerance();
    let limit = chosen.is_some_and(|choice| {
        let c = jp_conjugate_trace_with(&t, choice, &e).unwrap();
        (50..=60).all(|k| c.quantity_below(k, &tol))
    });
    let sqrt2 = make_field(vec![BigInt::from(-2), BigInt::from(0), BigInt::one()], q(1, 1), q(2, 1)).unwrap();
    let cf = cf_trace(&sqrt2.generator(), &Embedding::new(RootChoice::OtherReal(0)), 20).unwrap();
    let tol8 = q(1, 100_000_000);
    vec![
        claim(format!("hypothesis-satisfying complex choice at provisional N = {n}"), chosen.is_some()),
        claim("|beta'_n + (r_(n-2)/r_(n-1)) alpha'_n + r_(n-3)/r_(n-1)| < 1e-6 on [50, 60]", limit),
        claim("sqrt 2: |gamma'_20 + r_19/r_20| < 1e-8", cf.quantity[20].norm_sqr().hi() < &(&tol8 * &tol8)),
        claim("sqrt 2: gamma'_n in (-1, 0) for 2 <= n <= 20", (2..=20).all(|k| cf.in_unit_interval(k))),
    ]
}

/// Admissible words of the given length with `b <= max_b`.
fn words(len: usize, max_b: i64) -> Vec<Vec<Digit>> {
    let digits: Vec<Digit> = (1..=max_b).flat_map(|b| (0..=b).map(move |a| Digit::new(a, b))).collect();
    let mut out: Vec<Vec<Digit>> = vec![vec![]];
    for _ in 0..len {
        let mut next = Vec::new();
        for w in &out {
            let tri = w.last().is_some_and(|l| l.a == l.b);
            for d in digits.iter().filter(|d| !tri || d.a.is_positive()) {
                let mut v = w.clone();
                v.push(d.clone());
                next.push(v);
            }
        }
        out = next;
    }
    out
}

fn geometry_exactness() -> Vec<Claim> {
    let start = Instant::now();
    let mut mismatches = 0;
    let mut count = 0;
    for len in 1..=4 {
        for w in words(len, 3) {
            count += 1;
            let area = polygon_area(&cell(&w).unwrap());
            if area != cell_measure(&w, &Rational::one()).unwrap().full {
                mismatches += 1;
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut scaled_ok = true;
    let mut kinds = [0usize; 2];
    for _ in 0..500 {
        let len = rng.gen_range(1..=8);
        let mut w: Vec<Digit> = Vec::with_capacity(len);
        for _ in 0..len {
            let b: i64 = rng.gen_range(1..=9);
            let lo = i64::from(w.last().is_some_and(|l: &Digit| l.a == l.b));
            w.push(Digit::new(rng.gen_range(lo..=b), b));
        }
        kinds[usize::from(CellKind::of(w.last().unwrap()) == CellKind::Triangle)] += 1;
        for k in 1..=3 {
            let t = q(k, 4);
            let m = cell_measure(&w, &t).unwrap();
            scaled_ok &= m.below > &t * &t * &m.full;
        }
    }
    vec![
        claim(format!("polygon area = closed form on {count} words"), mismatches == 0 && count > 0),
        claim(
            format!("S(t) > t^2 S(1) on 500 random words ({} quadrangles, {} triangles)", kinds[0], kinds[1]),
            scaled_ok,
        ),
        within(60, start),
    ]
}

fn measure_decay() -> Vec<Claim> {
    let start = Instant::now();
    let two = enumerate_and_decay(2, 8).unwrap();
    let three = enumerate_and_decay(3, 6).unwrap();
    vec![
        claim("|D_2(0)| = 3/2", two.rows[0].measure == q(3, 2)),
        claim("|D_2(1)| = 5/8", two.rows[1].measure == q(5, 8)),
        claim("decay for m = 2 up to n = 8", two.pass && two.rows.len() == 9),
        claim("decay for m = 3 up to n = 6", three.pass && three.rows.len() == 7),
        within(300, start),
    ]
}

fn cli_determinism() -> Vec<Claim> {
    let run = || Command::new(env!("CARGO_BIN_EXE_jp")).arg("selftest").output().unwrap();
    let (a, b) = (run(), run());
    vec![
        claim("jp selftest exits 0", a.status.code() == Some(0)),
        claim("byte-identical reports", a.stdout == b.stdout && a.status == b.status && !a.stdout.is_empty()),
    ]
}

#[test]
fn acceptance() {
    let outcomes = vec![
        timed("terminating reconstruction", terminating_reconstruction),
        timed("cubic periodicity", cubic_periodicity),
        timed("identity suite", identity_suite),
        timed("error envelope", error_envelope),
        timed("growth constants", growth_constants),
        timed("rate bounds on the cubic trace", rate_bounds),
        timed("contraction lemma sweep", lemma_sweep),
        timed("conjugate limit", conjugate_limit),
        timed("geometry exactness", geometry_exactness),
        timed("measure decay", measure_decay),
        timed("CLI determinism", cli_determinism),
    ];
    // Written to the stdout handle rather than through `println!` so the
    // lines stay visible under the test harness's output capture.
    let mut text = String::from("\n");
    let mut unexpected = Vec::new();
    for (i, o) in outcomes.iter().enumerate() {
        let k = i + 1;
        let pass = o.claims.iter().all(|c| c.pass);
        text += &format!(
            "ACCEPTANCE {k:>2} {} {} ({:.2} s)\n",
            if pass { "PASS" } else { "FAIL" },
            o.title,
            o.elapsed.as_secs_f64()
        );
        for c in &o.claims {
            let known = KNOWN_UNATTAINABLE.iter().any(|&(n, name)| n == k && name == c.name);
            let tag = match (c.pass, known) {
                (true, _) => "ok",
                (false, true) => "FAIL (unattainable as stated)",
                (false, false) => "FAIL",
            };
            text += &format!("    {tag}: {}\n", c.name);
            if c.pass == known {
                unexpected.push(format!("criterion {k}: {} ({})", c.name, if c.pass { "passed" } else { "failed" }));
            }
        }
    }
    std::io::stdout().lock().write_all(text.as_bytes()).unwrap();
    for &(k, name) in KNOWN_UNATTAINABLE {
        assert!(
            outcomes[k - 1].claims.iter().any(|c| c.name == name),
            "known claim missing: {name}"
        );
    }
    assert!(unexpected.is_empty(), "unexpected outcomes: {unexpected:?}");
}
