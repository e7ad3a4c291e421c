//! End-to-end runs of the `jp` binary.

use std::process::{Command, Output};

use serde_json::Value;

const CUBIC: &str = "alg:[-2,0,0,1]@[1,2];coords=[0,1,0],alg:[-2,0,0,1]@[1,2];coords=[0,0,1]";

fn jp(args: &[&str], env_cap: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_jp"));
    cmd.args(args).env_remove("JP_PRECISION_CAP");
    if let Some(c) = env_cap {
        cmd.env("JP_PRECISION_CAP", c);
    }
    cmd.output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("stdout is JSON")
}

#[test]
fn expand_terminating_point() {
    let o = jp(&["expand", "--point", "rat:1/2,rat:3/2", "--horizon", "10"], None);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v = json(&o);
    assert_eq!(v["digits"], serde_json::json!([[0, 1], [1, 2]]));
    assert_eq!(v["checks"]["failures"], serde_json::json!([]));
}

#[test]
fn expand_csv_lists_convergents() {
    let o = jp(&["expand", "--point", "rat:1/2,rat:3/2", "--format", "csv"], None);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "n,a,b,r,p,q\n0,0,1,1,0,1\n1,1,2,2,1,3\n");
}

#[test]
fn expand_outside_domain_is_a_usage_error() {
    let o = jp(&["expand", "--point", "rat:2/1,rat:1/1"], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(o.stdout.is_empty());
    let err = stderr(&o);
    assert!(err.starts_with("error: ") && err.ends_with('\n'), "{err}");
}

#[test]
fn malformed_arguments_exit_two() {
    for args in [
        &["frobnicate"][..],
        &["expand"],
        &["expand", "--point", "rat:1/2"],
        &["cells", "--word", "2/1"],
        &["decay", "--m", "1", "--depth", "2"],
        &["decay", "--m", "2", "--depth", "3", "--cap", "5"],
        &["expand", "--point", "rat:1/2,rat:3/2", "--format", "xml"],
        &["conjugates", "--point", "rat:1/2,rat:3/2"],
        &["conjugates", "--point", CUBIC, "--embedding", "real2"],
    ] {
        let o = jp(args, None);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(!o.stderr.is_empty(), "{args:?}");
    }
}

#[test]
fn help_and_version_exit_zero() {
    for flag in ["--help", "--version"] {
        let o = jp(&[flag], None);
        assert_eq!(o.status.code(), Some(0));
        assert!(!o.stdout.is_empty());
    }
}

#[test]
fn decay_defaults_to_csv() {
    let o = jp(&["decay", "--m", "2", "--depth", "1"], None);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(
        stdout(&o),
        "n,measure_num,measure_den,bound_num,bound_den,pass\n0,3,2,,,true\n1,5,8,9,8,true\n"
    );
    let j = jp(&["decay", "--m", "3", "--depth", "2", "--format", "json"], None);
    assert_eq!(j.status.code(), Some(0));
    let v = json(&j);
    assert_eq!(v["rows"][0]["measure"], "4/1");
    assert_eq!(v["pass"], true);
}

#[test]
fn cells_report_exact_measures() {
    let o = jp(&["cells", "--word", "0/1,1/2"], None);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["area"], "5/72");
    assert_eq!(v["measure_full"], "5/72");
    assert_eq!(v["kind"], "quadrangle");
    let c = jp(&["cells", "--word", "0/1,1/2", "--format", "csv"], None);
    assert_eq!(stdout(&c), "vertex,x,y\n0,1/2,3/2\n1,1/2,2/1\n2,1/3,5/3\n3,1/3,4/3\n");
}

#[test]
fn diagnose_cubic() {
    let o = jp(&["diagnose", "--point", CUBIC, "--horizon", "40"], None);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(json(&o)["checks"]["failures"], serde_json::json!([]));
    let c = jp(&["diagnose", "--point", CUBIC, "--horizon", "40", "--format", "csv"], None);
    assert_eq!(c.status.code(), Some(0));
    assert!(stdout(&c).starts_with("n,delta_sign,delta_prime_sign\n"));
}

#[test]
fn conjugates_cubic_reports_provisional_hypothesis() {
    let o = jp(&["conjugates", "--point", CUBIC, "--horizon", "61"], None);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v = json(&o);
    assert_eq!(v["hypothesis"]["valid_n"], false);
    assert_eq!(v["hypothesis"]["provisional"]["n"], 59);
    assert_eq!(v["hypothesis"]["provisional"]["satisfied"], true);
}

#[test]
fn precision_flag_overrides_environment() {
    let args = ["conjugates", "--point", CUBIC, "--horizon", "20"];
    let with = |extra: &[&str], env: Option<&str>| {
        let all: Vec<&str> = args.iter().chain(extra).copied().collect();
        jp(&all, env)
    };
    let default = with(&[], None);
    assert_eq!(default.status.code(), Some(0));
    assert_eq!(json(&default)["precision_cap"], 4096);
    let starved = with(&[], Some("16"));
    assert_eq!(starved.status.code(), Some(2));
    assert!(stderr(&starved).contains("16 bits"));
    let rescued = with(&["--precision-cap", "4096"], Some("16"));
    assert_eq!(rescued.status.code(), Some(0));
    assert_eq!(rescued.stdout, default.stdout);
    let env_set = with(&[], Some("2048"));
    assert_eq!(json(&env_set)["precision_cap"], 2048);
    assert_eq!(with(&["--precision-cap", "16"], Some("4096")).status.code(), Some(2));
    assert_eq!(with(&[], Some("lots")).status.code(), Some(2));
}

#[test]
fn repeated_runs_are_byte_identical() {
    for args in [
        &["expand", "--point", CUBIC, "--horizon", "30"][..],
        &["conjugates", "--point", CUBIC, "--horizon", "30"],
        &["decay", "--m", "3", "--depth", "3", "--format", "json"],
    ] {
        let (a, b) = (jp(args, None), jp(args, None));
        assert_eq!(a.status.code(), Some(0), "{args:?}");
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
}

#[test]
fn selftest_csv_summary() {
    let o = jp(&["selftest", "--format", "csv"], None);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "section,checks,failures,pass");
    let names: Vec<&str> = lines[1..].iter().map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(names, ["exactnum", "expansion", "convergence", "conjugates", "geometry"]);
    assert!(lines[1..].iter().all(|l| l.ends_with(",0,true")));
}
