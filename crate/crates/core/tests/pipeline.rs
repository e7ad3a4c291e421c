//! Cross-module runs through the public API: text input, expansion, error
//! analysis, conjugates and cells of the digits actually produced.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use proptest::prelude::*;

use jp_core::conjugates::{jp_conjugate_trace, verify_conjugate_trace};
use jp_core::convergence::{bounds_report, delta_trace, determinant_checks, verify_delta_identities};
use jp_core::exactnum::{parse_point, Embedding, FieldElement, NumberField, Rational, RootChoice};
use jp_core::expansion::{expand, verify_identities, State, Termination};
use jp_core::geometry::{cell, cell_measure, polygon_area, Point};
use jp_core::report::Check;

const CUBIC: &str = "alg:[-2,0,0,1]@[1,2];coords=[0,1,0],alg:[-2,0,0,1]@[1,2];coords=[0,0,1]";

fn q(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

fn failing(checks: &[Check]) -> Vec<String> {
    checks.iter().filter(|c| !c.pass).map(|c| format!("{} at {}", c.name, c.index)).collect()
}

/// Closed containment in a convex polygon given in either orientation.
fn in_convex_polygon(p: &Point, poly: &[Point]) -> bool {
    let mut sides = [false, false];
    for i in 0..poly.len() {
        let (a, b) = (&poly[i], &poly[(i + 1) % poly.len()]);
        let cross = (&b.0 - &a.0) * (&p.1 - &a.1) - (&b.1 - &a.1) * (&p.0 - &a.0);
        if cross.is_positive() {
            sides[0] = true;
        } else if cross.is_negative() {
            sides[1] = true;
        }
    }
    !(sides[0] && sides[1])
}

#[test]
fn cubic_text_to_conjugates() {
    let (a, b) = parse_point(CUBIC).unwrap();
    let t = expand(&State::new(a, b).unwrap(), 40).unwrap();
    assert_eq!(t.termination(), Termination::Periodic { u: 2, v: 1 });
    let d = delta_trace(&t);
    let mut checks = verify_identities(&t);
    checks.extend(verify_delta_identities(&t, &d));
    checks.extend(determinant_checks(&t, &d));
    checks.extend(bounds_report(&t, &d).checks);
    assert_eq!(failing(&checks), Vec::<String>::new());
    let c = jp_conjugate_trace(&t, &Embedding::new(RootChoice::Complex { upper: true })).unwrap();
    assert_eq!(failing(&verify_conjugate_trace(&t, &c).unwrap()), Vec::<String>::new());
}

#[test]
fn cells_of_produced_digits_contain_the_point() {
    let (a, b) = parse_point("rat:355/113,rat:22/7").unwrap();
    let point = (a.as_rational().unwrap(), b.as_rational().unwrap());
    let t = expand(&State::new(a, b).unwrap(), 100).unwrap();
    assert!(matches!(t.termination(), Termination::Terminated { .. }));
    let mut previous = None;
    for n in 1..=t.digits().len() {
        let c = cell(&t.digits()[..n]).unwrap();
        assert!(in_convex_polygon(&point, &c.vertices), "level {n}");
        let area = polygon_area(&c);
        assert!(area.is_positive());
        if let Some(p) = previous {
            assert!(area < p, "cells shrink at level {n}");
        }
        previous = Some(area);
    }
}

proptest! {
    #[test]
    fn rational_points_lie_in_their_cells(
        bd in 1i64..400, bk in 0i64..1200, ad in 1i64..400, frac in 0u32..=1000
    ) {
        let beta = q(bd + bk, bd);
        let an = ((&beta * q(ad * i64::from(frac), 1000)).floor()).to_integer();
        let alpha = Rational::new(an, BigInt::from(ad));
        let f = NumberField::rationals();
        let s = State::new(FieldElement::from_rational(&f, alpha.clone()), FieldElement::from_rational(&f, beta.clone()));
        let t = expand(&s.unwrap(), 200).unwrap();
        let terminated = matches!(t.termination(), Termination::Terminated { .. });
        prop_assert!(terminated);
        for n in 1..=t.digits().len() {
            let w = &t.digits()[..n];
            let c = cell(w).unwrap();
            prop_assert!(in_convex_polygon(&(alpha.clone(), beta.clone()), &c.vertices));
            let m = cell_measure(w, &Rational::one()).unwrap();
            prop_assert_eq!(polygon_area(&c), m.full.clone());
            prop_assert!(m.below >= Rational::zero());
        }
    }
}
