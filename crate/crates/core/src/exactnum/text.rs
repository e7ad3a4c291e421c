//! Textual element format.
//!
//! ```text
//! rat:<p>/<q>
//! alg:[c0,c1,...,cd]@[lo,hi];coords=[a0,a1,...]
//! ```
//!
//! Minimal-polynomial coefficients are ascending integers; `lo`, `hi` and the
//! coordinates are rationals written `p/q` (or plain integers).

use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use super::field::{make_field, FieldElement, NumberField};
use super::{ExactError, Rational};

fn parse_err(msg: impl Into<String>) -> ExactError {
    ExactError::Parse(msg.into())
}

pub fn parse_rational(s: &str) -> Result<Rational, ExactError> {
    let s = s.trim();
    let (n, d) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let n: BigInt = n
        .parse()
        .map_err(|_| parse_err(format!("bad integer '{n}' in rational '{s}'")))?;
    let d: BigInt = d
        .parse()
        .map_err(|_| parse_err(format!("bad integer '{d}' in rational '{s}'")))?;
    if d.is_zero() {
        return Err(parse_err(format!("zero denominator in '{s}'")));
    }
    Ok(Rational::new(n, d))
}

pub fn format_rational(q: &Rational) -> String {
    format!("{}/{}", q.numer(), q.denom())
}

fn bracketed(s: &str) -> Result<Vec<&str>, ExactError> {
    let s = s.trim();
    let inner = s
        .strip_prefix('[')
        .and_then(|r| r.strip_suffix(']'))
        .ok_or_else(|| parse_err(format!("expected [..] list, got '{s}'")))?;
    if inner.trim().is_empty() {
        return Ok(Vec::new());
    }
    Ok(inner.split(',').map(str::trim).collect())
}

/// Parses one element. Rationals land in the field of rationals.
pub fn parse_element(s: &str) -> Result<FieldElement, ExactError> {
    let s = s.trim();
    if let Some(rest) = s.strip_prefix("rat:") {
        let q = parse_rational(rest)?;
        return Ok(FieldElement::from_rational(&NumberField::rationals(), q));
    }
    let rest = s
        .strip_prefix("alg:")
        .ok_or_else(|| parse_err(format!("element must start with 'rat:' or 'alg:', got '{s}'")))?;
    let (poly_part, rest) = rest
        .split_once('@')
        .ok_or_else(|| parse_err("missing '@' after minimal polynomial"))?;
    let (iv_part, coords_part) = rest
        .split_once(";coords=")
        .ok_or_else(|| parse_err("missing ';coords=' section"))?;
    let minpoly = bracketed(poly_part)?
        .into_iter()
        .map(|c| {
            c.parse::<BigInt>()
                .map_err(|_| parse_err(format!("bad polynomial coefficient '{c}'")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let iv = bracketed(iv_part)?;
    if iv.len() != 2 {
        return Err(parse_err("isolating interval needs two endpoints"));
    }
    let lo = parse_rational(iv[0])?;
    let hi = parse_rational(iv[1])?;
    let coords = bracketed(coords_part)?
        .into_iter()
        .map(parse_rational)
        .collect::<Result<Vec<_>, _>>()?;
    let field = make_field(minpoly, lo, hi)?;
    if coords.len() > field.degree() {
        return Err(parse_err(format!(
            "{} coordinates given for a degree-{} field",
            coords.len(),
            field.degree()
        )));
    }
    Ok(FieldElement::new(&field, coords))
}

/// Splits on commas that are not inside brackets.
fn split_top_level(s: &str) -> Vec<&str> {
    let mut depth = 0i32;
    let mut parts = Vec::new();
    let mut start = 0;
    for (i, ch) in s.char_indices() {
        match ch {
            '[' => depth += 1,
            ']' => depth -= 1,
            ',' if depth == 0 => {
                parts.push(&s[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    parts.push(&s[start..]);
    parts
}

/// Parses a list of comma-separated elements and moves them into one common
/// field. Rationals are lifted into the algebraic field if there is one;
/// elements from two different algebraic fields are rejected.
pub fn parse_elements(s: &str) -> Result<Vec<FieldElement>, ExactError> {
    let elems = split_top_level(s)
        .into_iter()
        .map(parse_element)
        .collect::<Result<Vec<_>, _>>()?;
    let target: Arc<NumberField> = elems
        .iter()
        .find(|e| !e.field().is_rational())
        .map(|e| Arc::clone(e.field()))
        .unwrap_or_else(|| Arc::clone(elems[0].field()));
    elems.iter().map(|e| e.rehome(&target)).collect()
}

/// Parses a point `x,y` given as two elements.
pub fn parse_point(s: &str) -> Result<(FieldElement, FieldElement), ExactError> {
    let v = parse_elements(s)?;
    if v.len() != 2 {
        return Err(parse_err(format!("a point needs two elements, got {}", v.len())));
    }
    let mut it = v.into_iter();
    Ok((it.next().unwrap(), it.next().unwrap()))
}

pub fn format_element(x: &FieldElement) -> String {
    let f = x.field();
    if f.is_rational() && f.minpoly() == [BigInt::zero(), BigInt::one()] {
        return format!("rat:{}", format_rational(&x.coords()[0]));
    }
    let poly: Vec<String> = f.minpoly().iter().map(|c| c.to_string()).collect();
    let (lo, hi) = f.interval();
    let coords: Vec<String> = x.coords().iter().map(format_rational).collect();
    format!(
        "alg:[{}]@[{},{}];coords=[{}]",
        poly.join(","),
        format_rational(lo),
        format_rational(hi),
        coords.join(",")
    )
}

impl std::fmt::Display for FieldElement {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&format_element(self))
    }
}
