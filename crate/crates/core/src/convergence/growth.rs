//! Minimal growth of the denominators: with all digits `(0, 1)`,
//! `r_n = r_(n-1) + r_(n-3)` and `r_n` grows like `lambda^n`, where `lambda`
//! is the real root of `x^3 - x^2 - 1`.

use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::One;

use super::{enclose_relative, DeltaTrace};
use crate::exactnum::{make_field, FieldElement, Interval, NumberField, Rational};
use crate::expansion::ExpansionTrace;
use crate::report::Check;

pub struct GrowthModel {
    pub field: Arc<NumberField>,
    /// `lambda` as the generator of `Q(lambda)`.
    pub lambda: FieldElement,
    /// `|delta_i| = sqrt(lambda (lambda - 1))`, the modulus of the complex roots.
    pub delta_abs: Interval,
    /// `lambda^3 / (3 lambda - 2)`, the limit of `r_n / lambda^(n-2)`.
    pub limit_const: FieldElement,
}

pub fn growth_model() -> GrowthModel {
    let int = |n: i64| Rational::from_integer(BigInt::from(n));
    let field = make_field(
        [-1, 0, -1, 1].iter().map(|&c| BigInt::from(c)).collect(),
        int(1),
        int(2),
    )
    .expect("x^3 - x^2 - 1 is irreducible with one root in [1, 2]");
    let lambda = field.generator();
    let three = FieldElement::from_int(&field, 3);
    let two = FieldElement::from_int(&field, 2);
    let limit_const = &lambda.pow(3) / &(&(&three * &lambda) - &two);
    let one = FieldElement::one(&field);
    let sq = &lambda * &(&lambda - &one);
    let delta_abs = sq.enclose(160).sqrt(128).expect("lambda (lambda - 1) > 0");
    GrowthModel {
        field,
        lambda,
        delta_abs,
        limit_const,
    }
}

/// `r_n` for the all-`(0, 1)` digit sequence: `1, 1, 1, 2, 3, 4, 6, ...`.
pub fn minimal_r(n: usize) -> BigInt {
    let mut r = [BigInt::one(), BigInt::one(), BigInt::one()];
    for _ in 3..=n {
        let next = &r[2] + &r[0];
        r = [r[1].clone(), r[2].clone(), next];
    }
    r[n.min(2)].clone()
}

impl GrowthModel {
    /// `lambda^k` exactly.
    pub fn lambda_pow(&self, k: u32) -> FieldElement {
        self.lambda.pow(k)
    }

    /// `r_n / lambda^(n-2)` for the minimal sequence, exactly (`n >= 2`).
    pub fn minimal_ratio(&self, n: usize) -> FieldElement {
        let r = FieldElement::from_bigint(&self.field, &minimal_r(n));
        &r / &self.lambda_pow((n - 2) as u32)
    }

    /// `|r_n / lambda^(n-2) - lambda^3 / (3 lambda - 2)|` for the minimal sequence.
    pub fn minimal_ratio_error(&self, n: usize) -> FieldElement {
        (&self.minimal_ratio(n) - &self.limit_const).abs()
    }

    /// Whether `lambda^(n-2) < r < lambda^(n-1)` holds as exact comparisons
    /// in `Q(lambda)`.
    pub fn between_powers(&self, n: usize, r: &BigInt) -> (bool, bool) {
        let r = FieldElement::from_bigint(&self.field, r);
        let lo = (&r - &self.lambda_pow((n - 2) as u32)).is_positive();
        let hi = (&self.lambda_pow((n - 1) as u32) - &r).is_positive();
        (lo, hi)
    }
}

/// `lambda^(n-2) < r_n` exactly for `3 <= n < len`, and the resulting
/// approximation bounds `|Delta_n| lambda^(n-2) < {alpha_0} r_n` and
/// `|Delta'_n| lambda^(n-2) < r_n` by certified interval arithmetic.
pub fn perron_checks(trace: &ExpansionTrace, d: &DeltaTrace, gm: &GrowthModel) -> Vec<Check> {
    let mut out = Vec::new();
    let fa0 = trace.frac_alpha(0);
    let fa0_iv = (!fa0.is_zero()).then(|| enclose_relative(fa0, 80));
    for n in 3..trace.len() {
        let r = trace.r(n as i64);
        let (lo, _) = gm.between_powers(n, r);
        out.push(Check::new("lambda^(n-2) < r_n", n as i64, lo));
        let lam = enclose_relative(&gm.lambda_pow((n - 2) as u32), 80);
        let r_iv = Interval::point(Rational::from_integer(r.clone()));
        let dn = d.delta(n as i64);
        let ok = match (&fa0_iv, dn.is_zero()) {
            (_, true) => true,
            (None, false) => false,
            (Some(a), false) => certified_below(&enclose_relative(dn, 80).abs().mul(&lam), &a.mul(&r_iv)),
        };
        out.push(Check::new("|p_n/r_n - alpha_0| < {alpha_0} lambda^(2-n)", n as i64, ok));
        let dp = d.delta_prime(n as i64);
        let ok = dp.is_zero() || certified_below(&enclose_relative(dp, 80).abs().mul(&lam), &r_iv);
        out.push(Check::new("|q_n/r_n - beta_0| < lambda^(2-n)", n as i64, ok));
    }
    out
}

fn certified_below(a: &Interval, b: &Interval) -> bool {
    a.hi() < b.lo()
}
