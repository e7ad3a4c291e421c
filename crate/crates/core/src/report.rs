//! Pass/fail records shared by the verification routines.

use serde::Serialize;

/// One exact check at one index of a trace.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Check {
    pub name: String,
    pub index: i64,
    pub pass: bool,
}

impl Check {
    pub fn new(name: impl Into<String>, index: i64, pass: bool) -> Self {
        Check {
            name: name.into(),
            index,
            pass,
        }
    }
}

/// The checks that failed.
pub fn failures(checks: &[Check]) -> Vec<&Check> {
    checks.iter().filter(|c| !c.pass).collect()
}

pub fn all_pass(checks: &[Check]) -> bool {
    checks.iter().all(|c| c.pass)
}
