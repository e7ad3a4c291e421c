use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use proptest::prelude::*;

use super::*;
use crate::exactnum::{cube_root_two_field, NumberField, Rational};
use crate::expansion::{expand, State};
use crate::report::failures;

fn q(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

fn elem(f: &Arc<NumberField>, c: &[i64]) -> FieldElement {
    FieldElement::new(f, c.iter().map(|&x| q(x, 1)).collect())
}

fn rat_trace(a: Rational, b: Rational, horizon: usize) -> ExpansionTrace {
    let f = NumberField::rationals();
    let s = State::new(FieldElement::from_rational(&f, a), FieldElement::from_rational(&f, b)).unwrap();
    expand(&s, horizon).unwrap()
}

fn cubic_trace(horizon: usize) -> ExpansionTrace {
    let f = cube_root_two_field();
    let s = State::new(elem(&f, &[0, 1, 0]), elem(&f, &[0, 0, 1])).unwrap();
    expand(&s, horizon).unwrap()
}

/// Rational within `2^-bits` of the real cube root of 2, by integer bisection.
fn cbrt2_approx(bits: u32) -> Rational {
    let scale = BigInt::one() << (3 * bits);
    let target = BigInt::from(2) * &scale;
    let (mut lo, mut hi) = (BigInt::one() << bits, BigInt::one() << (bits + 1));
    while &hi - &lo > BigInt::one() {
        let mid: BigInt = (&lo + &hi) >> 1;
        if &mid * &mid * &mid <= target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Rational::new(lo, BigInt::one() << bits)
}

/// Signs of `p_n - theta r_n` and `q_n - theta^2 r_n` from a 4000-bit
/// rational approximation and an independent convergent recurrence.
fn oracle_signs(digits: &[(i64, i64)]) -> (Vec<i8>, Vec<i8>) {
    let t = cbrt2_approx(4000);
    let t2 = &t * &t;
    let mut cols: Vec<[BigInt; 3]> = vec![
        [BigInt::one(), BigInt::zero(), BigInt::zero()],
        [BigInt::zero(), BigInt::one(), BigInt::zero()],
        [BigInt::zero(), BigInt::zero(), BigInt::one()],
    ];
    let (mut s1, mut s2) = (Vec::new(), Vec::new());
    for &(a, b) in digits {
        let k = cols.len();
        let next: [BigInt; 3] = std::array::from_fn(|i| {
            &cols[k - 1][i] * b + &cols[k - 2][i] * a + &cols[k - 3][i]
        });
        let r = Rational::from_integer(next[0].clone());
        let d1 = Rational::from_integer(next[1].clone()) - &t * &r;
        let d2 = Rational::from_integer(next[2].clone()) - &t2 * &r;
        let sg = |x: &Rational| if x.is_positive() { 1 } else { -1 };
        s1.push(sg(&d1));
        s2.push(sg(&d2));
        cols.push(next);
    }
    (s1, s2)
}

fn as_i8(s: &[Sign]) -> Vec<i8> {
    s.iter()
        .map(|x| match x {
            Sign::Neg => -1,
            Sign::Zero => 0,
            Sign::Pos => 1,
        })
        .collect()
}

fn all_checks(t: &ExpansionTrace) -> Vec<Check> {
    let d = delta_trace(t);
    let mut c = verify_delta_identities(t, &d);
    c.extend(determinant_checks(t, &d));
    c.extend(envelope_checks(t, &d));
    c.extend(bounds_report(t, &d).checks);
    for s in [Series::Delta, Series::DeltaPrime] {
        c.extend(SignAnalysis::of(&d, s).pattern_checks(d.signs_of(s), s.label()));
    }
    c
}

#[test]
fn delta_examples() {
    let t = rat_trace(q(1, 2), q(3, 2), 10);
    let d = delta_trace(&t);
    assert_eq!(d.delta(0).as_rational(), Some(q(-1, 2)));
    assert!(d.delta(1).is_zero());

    let t = cubic_trace(5);
    let d = delta_trace(&t);
    let f = t.field().clone();
    let want = &elem(&f, &[-1, 1, 0]) * &elem(&f, &[-2, 1, 1]);
    assert_eq!(d.delta(1), &want);
    assert_eq!(d.delta(-1), &FieldElement::zero(&f));
    assert_eq!(d.delta(-2), &FieldElement::one(&f));
    assert_eq!(d.delta_prime(-1), &FieldElement::one(&f));
}

#[test]
fn sign_analysis_examples() {
    use Sign::*;
    let sa = sign_analysis(&[Neg, Pos, Neg, Pos, Neg]);
    assert!(sa.agree_indices.is_empty());
    assert!((0..5).all(|n| sa.nstar(n).is_none()));

    let sa = sign_analysis(&[Neg, Neg, Pos, Neg]);
    assert_eq!(sa.agree_indices, vec![1]);
    assert_eq!(sa.nstar(3), Some(1));
    assert_eq!(sa.nstar(0), None);

    let sa = sign_analysis(&[Neg, Pos, Zero, Pos, Pos]);
    assert_eq!(sa.effective_len, 2);
    assert!(sa.agree_indices.is_empty());
}

#[test]
fn cubic_signs_match_high_precision_oracle() {
    let t = cubic_trace(30);
    let d = delta_trace(&t);
    let digits: Vec<(i64, i64)> = t
        .digits()
        .iter()
        .map(|g| (g.a.clone().try_into().unwrap(), g.b.clone().try_into().unwrap()))
        .collect();
    let (s1, s2) = oracle_signs(&digits);
    assert_eq!(as_i8(d.signs()), s1);
    assert_eq!(as_i8(d.signs_prime()), s2);
    let oracle_agree: Vec<usize> = (1..s1.len()).filter(|&n| s1[n - 1] == s1[n]).collect();
    assert_eq!(SignAnalysis::of(&d, Series::Delta).agree_indices, oracle_agree);
    assert_eq!(&oracle_agree[..4], &[5, 10, 15, 21]);
}

#[test]
fn determinant_examples() {
    let t = cubic_trace(8);
    let f = t.field().clone();
    assert_eq!(determinant_dkl(&t, -2, -1).unwrap(), FieldElement::one(&f));
    assert_eq!(&determinant_dkl(&t, -1, 0).unwrap(), t.frac_alpha(0));
    let mut prod = FieldElement::one(&f);
    for n in 0..=5i64 {
        prod = &prod * t.frac_alpha(n as usize);
        assert_eq!(determinant_dkl(&t, n - 1, n).unwrap(), prod);
    }
    assert_eq!(
        determinant_dkl(&t, -3, 0).err(),
        Some(ConvergenceError::IndexOutOfRange { k: -3, l: 0, last: 7 })
    );
    assert!(determinant_dkl(&t, 2, 2).is_err());
    assert!(determinant_dkl(&t, 0, 8).is_err());
}

#[test]
fn cubic_suite_to_depth_200() {
    let t = cubic_trace(200);
    let checks = all_checks(&t);
    assert!(failures(&checks).is_empty(), "{:?}", failures(&checks));
    assert!(checks.iter().any(|c| c.name == FRAC_ONE && c.index == 1 && c.pass));
    for name in ["alternating contraction (delta)", "agreement contraction (delta)", "three-step contraction (delta')"] {
        assert!(checks.iter().any(|c| c.name == name), "no sites for {name}");
    }
}

const FRAC_ONE: &str = "fractional product below one";

#[test]
fn terminating_trace_has_no_sites_past_termination() {
    let t = rat_trace(q(3, 7), q(11, 5), 50);
    let m = t.terminal_index().unwrap() as i64;
    let d = delta_trace(&t);
    let rep = bounds_report(&t, &d);
    assert!(rep.checks.iter().all(|c| c.index < m));
    assert!(failures(&all_checks(&t)).is_empty());
}

#[test]
fn growth_constants() {
    let gm = growth_model();
    assert_eq!(minimal_r(6), BigInt::from(6));
    let seq: Vec<BigInt> = (0..7).map(minimal_r).collect();
    assert_eq!(seq, [1, 1, 1, 2, 3, 4, 6].map(BigInt::from));
    assert_eq!(gm.lambda.pow(3), &gm.lambda.pow(2) + &FieldElement::one(&gm.field));
    assert_eq!(gm.lambda.to_decimal(7), "1.4655712");
    // lambda^3 / (3 lambda - 2) = 1.3134..., the true limit of r_n / lambda^(n-2).
    assert_eq!(gm.limit_const.to_decimal(6), "1.313423");
    assert_eq!((&gm.lambda.pow(2) / &FieldElement::from_int(&gm.field, 2)).to_decimal(4), "1.0739");
    assert!((gm.delta_abs.to_f64() - 0.826).abs() < 1e-3);
    let tol = FieldElement::from_rational(&gm.field, q(1, 1_000_000));
    assert!(less(&gm.minimal_ratio_error(60), &tol));
    for n in 3..=200 {
        assert_eq!(gm.between_powers(n, &minimal_r(n)), (true, true));
    }
}

#[test]
fn perron_bounds_on_cubic() {
    let t = cubic_trace(200);
    let d = delta_trace(&t);
    let c = perron_checks(&t, &d, &growth_model());
    assert_eq!(c.len(), 3 * 197);
    assert!(failures(&c).is_empty(), "{:?}", failures(&c));
}

#[test]
fn classify_cubic() {
    let t = cubic_trace(200);
    let d = delta_trace(&t);
    let rep = classify_ideal_convergence(&t, &d, &q(1, 2)).unwrap();
    assert_eq!(rep.power_law.m, "4");
    assert_eq!(rep.power_law.bounds.verdict, Verdict::HoldsOnTrace);
    assert_eq!(rep.power_law.hypothesis.verdict, Verdict::HoldsOnTrace);
    assert_eq!(rep.power_law.checked, 197);
    assert_eq!(rep.geometric_rate.bounds.verdict, Verdict::HoldsOnTrace);
    assert_eq!(rep.geometric_rate.n, 0);
    assert_eq!(rep.gap_frequency.hypothesis.verdict, Verdict::HoldsOnTrace);
    assert_eq!(rep.finite_agreements.hypothesis.verdict, Verdict::FailsOnTrace);
    // Periodic part: (2 + 3) / 3 > 1.
    assert_eq!(rep.perron_condition.theta.as_deref(), Some("5/3"));
    assert_eq!(rep.perron_condition.hypothesis.verdict, Verdict::FailsOnTrace);
    // epsilon = max((1 + {alpha_n}) / 2, {beta_n}) is attained by {beta_1} = theta^2 + theta - 2.
    assert!(rep.geometric_rate.epsilon.starts_with("0.8473"));
}

#[test]
fn classify_policy() {
    let t = cubic_trace(5);
    let d = delta_trace(&t);
    let rep = classify_ideal_convergence(&t, &d, &q(1, 2)).unwrap();
    for v in [
        &rep.gap_frequency.hypothesis,
        &rep.beta_liminf.hypothesis,
        &rep.geometric_rate.hypothesis,
        &rep.power_law.hypothesis,
        &rep.beta_product.hypothesis,
        &rep.finite_agreements.hypothesis,
        &rep.perron_condition.hypothesis,
    ] {
        assert_eq!(v.verdict, Verdict::UndecidableOnFiniteTrace);
    }
    for w in [q(0, 1), q(-1, 2), q(3, 2)] {
        assert_eq!(
            classify_ideal_convergence(&t, &d, &w).err(),
            Some(ConvergenceError::WindowInvalid)
        );
    }
    assert!(classify_ideal_convergence(&t, &d, &q(1, 1)).is_ok());
}

#[test]
fn agreement_transfer_on_cubic() {
    let t = cubic_trace(60);
    let d = delta_trace(&t);
    for a in agreement_transfer_checks(&d, regular_len(&t, &d)) {
        assert!(a.alternates, "{a:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn rational_suite(an in 0i64..10_000, ad in 1i64..10_000, bn in 0i64..40_000, bd in 1i64..10_000) {
        let a = q(an, ad);
        let b = q(bn, bd);
        prop_assume!(b >= q(1, 1) && a <= b);
        let t = rat_trace(a, b, 10_000);
        let checks = all_checks(&t);
        prop_assert!(failures(&checks).is_empty(), "{:?}", failures(&checks));
        let d = delta_trace(&t);
        let c = perron_checks(&t, &d, &growth_model());
        prop_assert!(failures(&c).is_empty(), "{:?}", failures(&c));
        for x in agreement_transfer_checks(&d, regular_len(&t, &d)) {
            prop_assert!(x.alternates, "{:?}", x);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn cubic_points_suite(c in prop::collection::vec(-5i64..6, 6)) {
        let f = cube_root_two_field();
        let x = elem(&f, &c[..3]).abs();
        let y = elem(&f, &c[3..]).abs();
        let (lo, hi) = if x <= y { (x, y) } else { (y, x) };
        let hi = &hi + &FieldElement::one(&f);
        let t = expand(&State::new(lo, hi).unwrap(), 40).unwrap();
        let checks = all_checks(&t);
        prop_assert!(failures(&checks).is_empty(), "{:?}", failures(&checks));
    }
}
