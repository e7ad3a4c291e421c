use std::sync::Arc;

use num_bigint::BigInt;
use proptest::prelude::*;

use super::*;
use crate::exactnum::{cube_root_two_field, Rational};
use crate::report::failures;

fn q(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

fn rat_state(a: Rational, b: Rational) -> State {
    let f = NumberField::rationals();
    State::new(FieldElement::from_rational(&f, a), FieldElement::from_rational(&f, b)).unwrap()
}

fn elem(f: &Arc<NumberField>, c: &[i64]) -> FieldElement {
    FieldElement::new(f, c.iter().map(|&x| q(x, 1)).collect())
}

fn cubic_state() -> State {
    let f = cube_root_two_field();
    State::new(elem(&f, &[0, 1, 0]), elem(&f, &[0, 0, 1])).unwrap()
}

fn digits(v: &[(i64, i64)]) -> Vec<Digit> {
    v.iter().map(|&(a, b)| Digit::new(a, b)).collect()
}

#[test]
fn step_examples() {
    match jp_step(&rat_state(q(1, 2), q(3, 2))).unwrap() {
        StepOutcome::Next(d, s) => {
            assert_eq!(d, Digit::new(0, 1));
            assert_eq!(s.alpha.as_rational(), Some(q(1, 1)));
            assert_eq!(s.beta.as_rational(), Some(q(2, 1)));
        }
        StepOutcome::Terminal(_) => panic!("expected a next state"),
    }
    assert!(matches!(
        jp_step(&rat_state(q(1, 1), q(2, 1))).unwrap(),
        StepOutcome::Terminal(d) if d == Digit::new(1, 2)
    ));
    let f = cube_root_two_field();
    match jp_step(&cubic_state()).unwrap() {
        StepOutcome::Next(d, s) => {
            assert_eq!(d, Digit::new(1, 1));
            assert_eq!(s.alpha, elem(&f, &[1, 1, 0]));
            assert_eq!(s.beta, elem(&f, &[1, 1, 1]));
        }
        StepOutcome::Terminal(_) => panic!("expected a next state"),
    }
    assert_eq!(
        jp_step(&rat_state(q(2, 1), q(1, 1))).err(),
        Some(ExpansionError::NotInDomain)
    );
}

#[test]
fn expand_examples() {
    let t = expand(&rat_state(q(1, 2), q(3, 2)), 10).unwrap();
    assert_eq!(t.digits(), digits(&[(0, 1), (1, 2)]).as_slice());
    assert_eq!(t.termination(), Termination::Terminated { step: 2 });
    assert_eq!(t.convergent_point(1), (q(1, 2), q(3, 2)));

    let t = expand(&cubic_state(), 10).unwrap();
    assert_eq!(t.len(), 10);
    assert_eq!(&t.digits()[..4], digits(&[(1, 1), (2, 3), (3, 3), (3, 3)]).as_slice());
    assert!(t.digits()[2..].iter().all(|d| *d == Digit::new(3, 3)));
    assert_eq!(t.termination(), Termination::Periodic { u: 2, v: 1 });

    let t = expand(&rat_state(q(0, 1), q(1, 1)), 5).unwrap();
    assert_eq!(t.digits(), digits(&[(0, 1)]).as_slice());
    assert_eq!(t.termination(), Termination::Terminated { step: 1 });

    assert_eq!(expand(&cubic_state(), 0).err(), Some(ExpansionError::InvalidHorizon));
}

#[test]
fn cubic_fixed_point() {
    let f = cube_root_two_field();
    let s = State::new(elem(&f, &[2, 1, 0]), elem(&f, &[1, 1, 1])).unwrap();
    match jp_step(&s).unwrap() {
        StepOutcome::Next(d, next) => {
            assert_eq!(d, Digit::new(3, 3));
            assert_eq!(next, s);
        }
        StepOutcome::Terminal(_) => panic!("fixed point does not terminate"),
    }
    let t = expand(&s, 5).unwrap();
    assert_eq!(detect_period(&t), Some(PeriodReport { u: 0, v: 1 }));
}

#[test]
fn matrix_examples() {
    let m = convergent_matrices(&digits(&[(0, 1), (1, 2)])).unwrap();
    let l1 = &m[1];
    assert_eq!(l1.columns[2], Convergent::new(2, 1, 3));
    assert_eq!(l1.det(), BigInt::from(1));

    let ones = vec![Digit::new(0, 1); 7];
    let cols = Columns::of_word(&ones).unwrap();
    let r: Vec<i64> = (0..7).map(|k| cols.r(k).try_into().unwrap()).collect();
    assert_eq!(r, vec![1, 1, 1, 2, 3, 4, 6]);

    for (a, b) in [(0, 1), (3, 5), (7, 7)] {
        let m = convergent_matrices(&digits(&[(a, b)])).unwrap();
        assert_eq!(m[0].det(), BigInt::from(1));
    }
    assert_eq!(
        convergent_matrices(&digits(&[(1, 1), (0, 2)])).err(),
        Some(ExpansionError::Inadmissible { index: 1 })
    );
    assert_eq!(
        convergent_matrices(&digits(&[(2, 1)])).err(),
        Some(ExpansionError::InvalidDigit { index: 0 })
    );
}

#[test]
fn admissibility_examples() {
    assert!(check_admissible(&digits(&[(1, 1), (2, 3)])));
    assert!(!check_admissible(&digits(&[(1, 1), (0, 2)])));
    assert!(check_admissible(&digits(&[(0, 1), (0, 1)])));
}

#[test]
fn identities_on_examples() {
    let t = expand(&rat_state(q(1, 2), q(3, 2)), 10).unwrap();
    let checks = verify_identities(&t);
    assert!(failures(&checks).is_empty(), "{:?}", failures(&checks));
    assert!(checks.iter().any(|c| c.name.starts_with("terminal")));

    let t = expand(&cubic_state(), 40).unwrap();
    let checks = verify_identities(&t);
    assert!(failures(&checks).is_empty(), "{:?}", failures(&checks));
    // pi_1 = beta_1 = theta^2 + theta + 1
    let f = t.field().clone();
    assert_eq!(t.pi(1), &elem(&f, &[1, 1, 1]));
    assert!(checks
        .iter()
        .any(|c| c.index == 5 && c.name.contains("p_n/r_n") && c.pass));
    assert!(failures(&verify_trace_consistency(&t)).is_empty());
}

#[test]
fn period_detection_on_rational_trace_is_none() {
    let t = expand(&rat_state(q(3, 7), q(11, 5)), 50).unwrap();
    assert!(detect_period(&t).is_none());
}

#[test]
fn boundary_points_are_accepted() {
    let t = expand(&rat_state(q(3, 2), q(3, 2)), 10).unwrap();
    assert!(check_admissible(t.digits()));
    assert!(failures(&verify_identities(&t)).is_empty());
}

fn minimal_r(n: usize) -> BigInt {
    let mut r = vec![BigInt::from(1); 3];
    while r.len() <= n {
        let k = r.len();
        let next = &r[k - 1] + &r[k - 3];
        r.push(next);
    }
    r[n].clone()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn rational_points_terminate_and_reconstruct(
        an in 0i64..10_000, ad in 1i64..10_000, bn in 0i64..40_000, bd in 1i64..10_000
    ) {
        let a = q(an, ad);
        let b = q(bn, bd);
        prop_assume!(b >= q(1, 1) && a <= b);
        let t = expand(&rat_state(a, b), 10_000).unwrap();
        let terminated = matches!(t.termination(), Termination::Terminated { .. });
        prop_assert!(terminated);
        prop_assert!(check_admissible(t.digits()));
        let checks = verify_identities(&t);
        prop_assert!(failures(&checks).is_empty(), "{:?}", failures(&checks));
        prop_assert!(failures(&verify_trace_consistency(&t)).is_empty());
        for n in 0..t.len() {
            prop_assert!(t.r(n as i64) >= &minimal_r(n));
        }
    }

    #[test]
    fn cubic_points_stay_in_domain(c in prop::collection::vec(-6i64..6, 6)) {
        let f = cube_root_two_field();
        let x = elem(&f, &c[..3]).abs();
        let y = elem(&f, &c[3..]).abs();
        let (lo, hi) = if x <= y { (x, y) } else { (y, x) };
        let hi = &hi + &FieldElement::one(&f);
        let t = expand(&State::new(lo, hi).unwrap(), 12).unwrap();
        prop_assert!(failures(&verify_trace_consistency(&t)).is_empty());
        prop_assert!(failures(&verify_identities(&t)).is_empty());
    }
}

#[test]
fn convergent_ratio_tie_when_middle_digit_vanishes() {
    let f = cube_root_two_field();
    let s = State::new(elem(&f, &[0, 2, 0]), elem(&f, &[1, 1, 3])).unwrap();
    let t = expand(&s, 8).unwrap();
    assert_eq!(t.digit(6), &Digit::new(0, 1));
    let ratio = |k: i64| Rational::new(t.q(k).clone(), t.r(k).clone());
    assert_eq!(ratio(3), ratio(5));
    assert_eq!(ratio(6), ratio(3));
    assert!(failures(&verify_identities(&t)).is_empty());
}
