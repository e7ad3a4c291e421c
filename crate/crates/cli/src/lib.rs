//! Command-line front end: parses element specs, runs one module, and renders
//! a deterministic JSON or CSV report.
//!
//! Exit codes: `0` success, `1` some invariant check failed, `2` usage or
//! input error.

use std::fmt::Write as _;

use clap::{Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use num_traits::ToPrimitive;
use serde_json::{json, Value};

use jp_core::conjugates::{
    jp_conjugate_trace, provisional_n, hypothesis_report, hypothesis_report_at, verify_conjugate_trace, ConjugateError,
};
use jp_core::convergence::{
    bounds_report, classify_ideal_convergence, delta_trace, determinant_checks, envelope_checks, growth_model,
    perron_checks, verify_delta_identities, Series, SignAnalysis,
};
use jp_core::exactnum::interval::rational_to_f64;
use jp_core::exactnum::{format_element, format_rational, parse_point, parse_rational, Embedding, Rational, RootChoice};
use jp_core::expansion::{expand, verify_identities, Digit, ExpansionTrace, State};
use jp_core::geometry::{
    cell, cell_measure, enumerate_and_decay_with_cap, format_word, parse_word, polygon_area, region_measure,
    verify_cell, CellKind, Region, DEFAULT_WORD_CAP,
};
use jp_core::report::Check;
use jp_core::selftest;

/// Environment variable holding the default precision cap in bits.
pub const PRECISION_CAP_ENV: &str = "JP_PRECISION_CAP";

#[derive(Parser, Debug)]
#[command(name = "jp", version, about = "Exact two-dimensional Jacobi-Perron toolkit")]
pub struct Cli {
    /// Output format; `decay` defaults to csv, everything else to json.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Largest working precision in bits for certified numerics. Overrides
    /// the JP_PRECISION_CAP environment variable.
    #[arg(long, global = true, value_parser = clap::value_parser!(u32).range(1..))]
    pub precision_cap: Option<u32>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Expand a point and list digits, states and convergents.
    Expand {
        /// Point as two elements, e.g. "rat:1/2,rat:3/2".
        #[arg(long)]
        point: String,
        #[arg(long, default_value_t = 100)]
        horizon: usize,
    },
    /// Error signs, contraction checks and ideal-convergence classification.
    Diagnose {
        #[arg(long)]
        point: String,
        #[arg(long, default_value_t = 100)]
        horizon: usize,
        /// Trailing fraction of the trace used by the surrogates, e.g. 0.5 or 1/2.
        #[arg(long, default_value = "1/2")]
        window: String,
    },
    /// Conjugate trace under a non-identity embedding and the sign hypothesis report.
    Conjugates {
        #[arg(long)]
        point: String,
        /// real2, real3, complex or complex-conj.
        #[arg(long, default_value = "complex")]
        embedding: String,
        #[arg(long, default_value_t = 60)]
        horizon: usize,
    },
    /// Vertices, area and measures of the cell of a digit word.
    Cells {
        /// Digits as "a/b,a/b,...".
        #[arg(long)]
        word: String,
        #[arg(long, default_value = "1/2")]
        t: String,
    },
    /// Measures of the unions of cells with digits b < m, level by level.
    Decay {
        #[arg(long)]
        m: u32,
        #[arg(long)]
        depth: usize,
        /// Largest number of words to enumerate.
        #[arg(long, default_value_t = DEFAULT_WORD_CAP)]
        cap: u64,
    },
    /// Run the built-in invariant suite.
    Selftest,
}

/// The rendered result of one invocation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Outcome {
    fn usage(msg: impl Into<String>) -> Self {
        Outcome {
            code: 2,
            stdout: String::new(),
            stderr: msg.into(),
        }
    }
}

/// Runs the CLI on the given arguments (including the program name) with the
/// precision cap from the environment value `env_cap`.
pub fn run<I, T>(args: I, env_cap: Option<&str>) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            return if code == 0 {
                Outcome { code, stdout: text, stderr: String::new() }
            } else {
                Outcome::usage(text)
            };
        }
    };
    let cap = match (cli.precision_cap, env_cap) {
        (Some(c), _) => Some(c),
        (None, Some(s)) => match s.trim().parse::<u32>() {
            Ok(c) if c > 0 => Some(c),
            _ => return Outcome::usage(format!("error: {PRECISION_CAP_ENV} must be a positive integer, got '{s}'\n")),
        },
        (None, None) => None,
    };
    let result = match &cli.command {
        Command::Expand { point, horizon } => cmd_expand(point, *horizon, cli.format),
        Command::Diagnose { point, horizon, window } => cmd_diagnose(point, *horizon, window, cli.format),
        Command::Conjugates { point, embedding, horizon } => cmd_conjugates(point, embedding, *horizon, cap, cli.format),
        Command::Cells { word, t } => cmd_cells(word, t, cli.format),
        Command::Decay { m, depth, cap } => cmd_decay(*m, *depth, *cap, cli.format),
        Command::Selftest => cmd_selftest(cli.format),
    };
    finish(result)
}

/// Exit 0 when every check passes, 1 when a check fails, 2 on errors.
fn finish(result: CmdResult) -> Outcome {
    match result {
        Ok((pass, stdout)) => Outcome {
            code: if pass { 0 } else { 1 },
            stdout,
            stderr: String::new(),
        },
        Err(msg) => Outcome::usage(format!("error: {msg}\n")),
    }
}

type CmdResult = Result<(bool, String), String>;

fn render_json(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("values are serializable");
    s.push('\n');
    s
}

fn to_value<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("report types are serializable")
}

fn int_value(n: &BigInt) -> Value {
    n.to_i64().map_or_else(|| Value::String(n.to_string()), Value::from)
}

fn rat(q: &Rational) -> String {
    format_rational(q)
}

/// `0.5`, `1/2` or `3` as an exact rational.
pub fn parse_decimal_or_fraction(s: &str) -> Result<Rational, String> {
    let s = s.trim();
    if let Some((whole, frac)) = s.split_once('.') {
        let neg = whole.starts_with('-');
        let digits = format!("{}{frac}", whole.trim_start_matches('-'));
        let n: BigInt = digits.parse().map_err(|_| format!("bad decimal '{s}'"))?;
        let d = num_traits::pow(BigInt::from(10), frac.len());
        let q = Rational::new(n, d);
        return Ok(if neg { -q } else { q });
    }
    parse_rational(s).map_err(|e| e.to_string())
}

fn load_point(spec: &str) -> Result<State, String> {
    let (a, b) = parse_point(spec).map_err(|e| e.to_string())?;
    State::new(a, b).map_err(|e| e.to_string())
}

fn load_trace(spec: &str, horizon: usize) -> Result<ExpansionTrace, String> {
    expand(&load_point(spec)?, horizon).map_err(|e| e.to_string())
}

fn digit_pair(d: &Digit) -> Value {
    json!([int_value(&d.a), int_value(&d.b)])
}

fn failures_value(checks: &[Check]) -> Value {
    let failed: Vec<&Check> = checks.iter().filter(|c| !c.pass).collect();
    json!({ "total": checks.len(), "failures": to_value(&failed) })
}

fn cmd_expand(point: &str, horizon: usize, format: Option<Format>) -> CmdResult {
    let t = load_trace(point, horizon)?;
    let checks = verify_identities(&t);
    let pass = checks.iter().all(|c| c.pass);
    if format == Some(Format::Csv) {
        let mut out = String::from("n,a,b,r,p,q\n");
        for (n, d) in t.digits().iter().enumerate() {
            let k = n as i64;
            writeln!(out, "{n},{},{},{},{},{}", d.a, d.b, t.r(k), t.p(k), t.q(k)).expect("string write");
        }
        return Ok((pass, out));
    }
    let convergents: Vec<Value> = (0..t.len() as i64)
        .map(|k| json!({ "r": t.r(k).to_string(), "p": t.p(k).to_string(), "q": t.q(k).to_string() }))
        .collect();
    let states: Vec<Value> = t
        .states()
        .iter()
        .map(|s| json!({ "alpha": format_element(&s.alpha), "beta": format_element(&s.beta) }))
        .collect();
    let v = json!({
        "initial": { "alpha": format_element(t.alpha(0)), "beta": format_element(t.beta(0)) },
        "digits": t.digits().iter().map(digit_pair).collect::<Vec<_>>(),
        "states": states,
        "convergents": convergents,
        "termination": to_value(&t.termination()),
        "checks": failures_value(&checks),
    });
    Ok((pass, render_json(&v)))
}

fn cmd_diagnose(point: &str, horizon: usize, window: &str, format: Option<Format>) -> CmdResult {
    let window = parse_decimal_or_fraction(window)?;
    let t = load_trace(point, horizon)?;
    let d = delta_trace(&t);
    let report = classify_ideal_convergence(&t, &d, &window).map_err(|e| e.to_string())?;
    let mut checks = verify_delta_identities(&t, &d);
    checks.extend(envelope_checks(&t, &d));
    checks.extend(determinant_checks(&t, &d));
    checks.extend(perron_checks(&t, &d, &growth_model()));
    let bounds = bounds_report(&t, &d);
    checks.extend(bounds.checks.iter().cloned());
    let pass = checks.iter().all(|c| c.pass);
    if format == Some(Format::Csv) {
        let mut out = String::from("n,delta_sign,delta_prime_sign\n");
        for (n, (s, sp)) in d.signs().iter().zip(d.signs_prime()).enumerate() {
            writeln!(out, "{n},{},{}", s.as_char(), sp.as_char()).expect("string write");
        }
        return Ok((pass, out));
    }
    let agreements = |s| SignAnalysis::of(&d, s).agree_indices;
    let v = json!({
        "initial": { "alpha": format_element(t.alpha(0)), "beta": format_element(t.beta(0)) },
        "horizon": horizon,
        "delta_signs": d.sign_string(Series::Delta),
        "delta_prime_signs": d.sign_string(Series::DeltaPrime),
        "agreements": agreements(Series::Delta),
        "agreements_prime": agreements(Series::DeltaPrime),
        "report": to_value(&report),
        "equality_sites": to_value(&bounds.equality_sites),
        "checks": failures_value(&checks),
    });
    Ok((pass, render_json(&v)))
}

/// `real2`, `real3`, ... pick the other real roots; `complex` and
/// `complex-conj` the non-real pair.
pub fn parse_embedding(s: &str) -> Result<RootChoice, String> {
    match s.trim() {
        "complex" => Ok(RootChoice::Complex { upper: true }),
        "complex-conj" => Ok(RootChoice::Complex { upper: false }),
        other => other
            .strip_prefix("real")
            .and_then(|k| k.parse::<usize>().ok())
            .filter(|&k| k >= 2)
            .map(|k| RootChoice::OtherReal(k - 2))
            .ok_or_else(|| format!("unknown embedding '{other}'; expected real2, real3, complex or complex-conj")),
    }
}

fn cmd_conjugates(point: &str, embedding: &str, horizon: usize, cap: Option<u32>, format: Option<Format>) -> CmdResult {
    let root = parse_embedding(embedding)?;
    let t = load_trace(point, horizon)?;
    if t.field().is_rational() {
        return Err(ConjugateError::RationalInput.to_string());
    }
    if !t.field().root_choices().contains(&root) {
        return Err(format!("embedding '{embedding}' does not exist for this field"));
    }
    let mut e = Embedding::new(root);
    if let Some(c) = cap {
        e = e.with_cap(c);
    }
    let c = jp_conjugate_trace(&t, &e).map_err(|e| e.to_string())?;
    let checks = verify_conjugate_trace(&t, &c).map_err(|e| e.to_string())?;
    let pass = checks.iter().all(|c| c.pass);
    let quantity: Vec<Value> = (1..c.len())
        .filter_map(|n| {
            c.quantity(n).map(|z| {
                let bound = c.quantity_norm_sqr_upper(n);
                json!({
                    "n": n,
                    "value": z.to_decimal(12),
                    "abs_approx": bound.as_ref().map(|u| format!("{:.6e}", rational_to_f64(u).sqrt())),
                    "abs_sqr_upper": bound.as_ref().map(rat),
                })
            })
        })
        .collect();
    if format == Some(Format::Csv) {
        let mut out = String::from("n,alpha_prime,beta_prime,quantity\n");
        for n in 0..c.len() {
            let q = c.quantity(n).map(|z| z.to_decimal(12)).unwrap_or_default();
            writeln!(out, "{n},{},{},{q}", c.alpha_prime[n].to_decimal(12), c.beta_prime[n].to_decimal(12))
                .expect("string write");
        }
        return Ok((pass, out));
    }
    let d = delta_trace(&t);
    let report = match hypothesis_report(&t, &d, &c) {
        Ok(r) => json!({ "valid_n": true, "report": to_value(&r) }),
        Err(ConjugateError::NoValidN { last, len }) => {
            let n = provisional_n(&d);
            let provisional = hypothesis_report_at(&t, &d, &c, n).ok().map(|r| to_value(&r));
            json!({
                "valid_n": false,
                "reason": format!("sign agreements continue up to index {last} of {len}; no alternating tail to fix N"),
                "provisional": provisional,
            })
        }
        Err(e) => return Err(e.to_string()),
    };
    let v = json!({
        "initial": { "alpha": format_element(t.alpha(0)), "beta": format_element(t.beta(0)) },
        "embedding": root.to_string(),
        "horizon": horizon,
        "route": to_value(&c.route),
        "precision_bits": c.precision_bits,
        "precision_cap": c.precision_cap,
        "quantity": quantity,
        "hypothesis": report,
        "checks": failures_value(&checks),
    });
    Ok((pass, render_json(&v)))
}

fn cmd_cells(word: &str, t: &str, format: Option<Format>) -> CmdResult {
    let w = parse_word(word).map_err(|e| e.to_string())?;
    let t = parse_decimal_or_fraction(t)?;
    let m = cell_measure(&w, &t).map_err(|e| e.to_string())?;
    let c = cell(&w).map_err(|e| e.to_string())?;
    let checks = verify_cell(&w).map_err(|e| e.to_string())?;
    let area = polygon_area(&c);
    let pass = checks.iter().all(|c| c.pass) && area == m.full;
    if format == Some(Format::Csv) {
        let mut out = String::from("vertex,x,y\n");
        for (i, (x, y)) in c.vertices.iter().enumerate() {
            writeln!(out, "{i},{},{}", rat(x), rat(y)).expect("string write");
        }
        return Ok((pass, out));
    }
    let (inside, outside) = match c.kind {
        CellKind::Quadrangle => (Region::DtComplement(t.clone()), Region::Dt(t.clone())),
        CellKind::Triangle => (Region::DtPrimeComplement(t.clone()), Region::DtPrime(t.clone())),
    };
    let region = |r: &Region| -> Result<Value, String> {
        let m = region_measure(&w, r).map_err(|e| e.to_string())?;
        Ok(json!({ "region": r.to_string(), "polygon": rat(&m.polygon), "formula": rat(&m.formula) }))
    };
    let v = json!({
        "word": format_word(&w),
        "kind": c.kind.to_string(),
        "vertices": c.vertices.iter().map(|(x, y)| json!([rat(x), rat(y)])).collect::<Vec<_>>(),
        "r": { "r_n_minus_2": c.matrix.columns[0].r.to_string(), "r_n_minus_1": c.matrix.columns[1].r.to_string(), "r_n": c.matrix.columns[2].r.to_string() },
        "area": rat(&area),
        "t": rat(&t),
        "measure_below_t": rat(&m.below),
        "measure_full": rat(&m.full),
        "regions": [region(&inside)?, region(&outside)?],
        "checks": failures_value(&checks),
    });
    Ok((pass, render_json(&v)))
}

fn cmd_decay(m: u32, depth: usize, cap: u64, format: Option<Format>) -> CmdResult {
    let rep = enumerate_and_decay_with_cap(m, depth, cap).map_err(|e| e.to_string())?;
    if format.unwrap_or(Format::Csv) == Format::Csv {
        let mut out = String::from("n,measure_num,measure_den,bound_num,bound_den,pass\n");
        for r in &rep.rows {
            let (bn, bd) = r
                .bound
                .as_ref()
                .map_or((String::new(), String::new()), |b| (b.numer().to_string(), b.denom().to_string()));
            writeln!(out, "{},{},{},{bn},{bd},{}", r.n, r.measure.numer(), r.measure.denom(), r.pass)
                .expect("string write");
        }
        return Ok((rep.pass, out));
    }
    let rows: Vec<Value> = rep
        .rows
        .iter()
        .map(|r| {
            json!({
                "n": r.n,
                "words": r.words.to_string(),
                "measure": rat(&r.measure),
                "bound": r.bound.as_ref().map(rat),
                "next_from_tails": rat(&r.next_from_tails),
                "pass": r.pass,
            })
        })
        .collect();
    let v = json!({ "m": m, "depth": depth, "rows": rows, "tails_match": rep.tails_match, "pass": rep.pass });
    Ok((rep.pass, render_json(&v)))
}

fn cmd_selftest(format: Option<Format>) -> CmdResult {
    let rep = selftest::run();
    if format == Some(Format::Csv) {
        let mut out = String::from("section,checks,failures,pass\n");
        for s in &rep.sections {
            writeln!(out, "{},{},{},{}", s.name, s.checks, s.failures.len(), s.pass).expect("string write");
        }
        return Ok((rep.pass, out));
    }
    Ok((rep.pass, render_json(&to_value(&rep))))
}
