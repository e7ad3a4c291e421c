//! Exact arithmetic over the rationals and over real number fields of
//! degree at most three, with certified numerical embeddings.

pub mod embed;
pub mod field;
pub mod interval;
pub mod poly;
pub mod text;

use num_rational::BigRational;
use thiserror::Error;

pub use embed::{embed, embed_abs, ComplexBall, ComplexInterval, Embedding, RootChoice};
pub use field::{decimal_string, make_field, FieldElement, NumberField};
pub use interval::Interval;
pub use text::{format_element, format_rational, parse_element, parse_point, parse_rational};

pub type Rational = BigRational;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExactError {
    #[error("minimal polynomial has degree {0}; only degrees 1 to 3 are supported")]
    UnsupportedDegree(usize),
    #[error("polynomial is reducible: it has the rational root {0}")]
    Reducible(Rational),
    #[error("no root of the polynomial in the isolating interval")]
    NoRootInInterval,
    #[error("more than one root of the polynomial in the isolating interval")]
    MultipleRootsInInterval,
    #[error("isolating interval must satisfy lo < hi")]
    EmptyInterval,
    #[error("division by zero")]
    DivisionByZero,
    #[error("elements belong to different number fields")]
    FieldMismatch,
    #[error("embedding '{0}' does not exist for this field")]
    InvalidEmbedding(String),
    #[error("could not certify the error bound within {0} bits of precision")]
    PrecisionExhausted(u32),
    #[error("parse error: {0}")]
    Parse(String),
}

/// Binary field operations, for callers that select the operation at run time.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FieldOp {
    Add,
    Sub,
    Mul,
    Div,
}

pub fn field_arithmetic(
    a: &FieldElement,
    b: &FieldElement,
    op: FieldOp,
) -> Result<FieldElement, ExactError> {
    match op {
        FieldOp::Add => a.checked_add(b),
        FieldOp::Sub => a.checked_sub(b),
        FieldOp::Mul => a.checked_mul(b),
        FieldOp::Div => a.checked_div(b),
    }
}

/// `Q(cbrt 2)` with `theta` in `[1, 2]`.
pub fn cube_root_two_field() -> std::sync::Arc<NumberField> {
    use num_bigint::BigInt;
    make_field(
        vec![BigInt::from(-2), BigInt::from(0), BigInt::from(0), BigInt::from(1)],
        Rational::from_integer(BigInt::from(1)),
        Rational::from_integer(BigInt::from(2)),
    )
    .expect("x^3 - 2 is irreducible with one root in [1, 2]")
}
