//! Named pass/fail checks shared by all reports.

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    AtMost,
    AtLeast,
    /// `measured` is informational; `pass` carries the verdict
    Flag,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub tolerance: f64,
    pub comparison: Comparison,
    pub pass: bool,
}

impl Check {
    pub fn at_most(name: impl Into<String>, measured: f64, tolerance: f64) -> Self {
        Check { name: name.into(), measured, tolerance, comparison: Comparison::AtMost, pass: measured <= tolerance }
    }

    pub fn at_least(name: impl Into<String>, measured: f64, tolerance: f64) -> Self {
        Check { name: name.into(), measured, tolerance, comparison: Comparison::AtLeast, pass: measured >= tolerance }
    }

    pub fn flag(name: impl Into<String>, measured: f64, pass: bool) -> Self {
        Check { name: name.into(), measured, tolerance: f64::NAN, comparison: Comparison::Flag, pass }
    }
}

pub fn all_pass(checks: &[Check]) -> bool {
    checks.iter().all(|c| c.pass)
}
