//! Pass/fail records shared by parameter certification and lemma checks.

use serde::{Deserialize, Serialize};

/// One checked inequality. `margin` is signed so that a nonnegative margin
/// means the inequality holds; `tolerance` is the statistical slack granted
/// before a negative margin counts as a failure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub bound: f64,
    pub margin: f64,
    pub tolerance: f64,
    pub passed: bool,
    /// Informational checks are reported but never fail a report.
    pub gating: bool,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

impl Check {
    /// Checks `measured ≥ bound − tolerance`.
    pub fn at_least(name: impl Into<String>, measured: f64, bound: f64, tolerance: f64) -> Self {
        Self::from_margin(name, measured, bound, measured - bound, tolerance)
    }

    /// Checks `measured ≤ bound + tolerance`.
    pub fn at_most(name: impl Into<String>, measured: f64, bound: f64, tolerance: f64) -> Self {
        Self::from_margin(name, measured, bound, bound - measured, tolerance)
    }

    fn from_margin(
        name: impl Into<String>,
        measured: f64,
        bound: f64,
        margin: f64,
        tolerance: f64,
    ) -> Self {
        Self {
            name: name.into(),
            measured,
            bound,
            margin,
            tolerance,
            passed: margin + tolerance >= 0.0 && margin.is_finite(),
            gating: true,
            detail: String::new(),
        }
    }

    pub fn informational(mut self) -> Self {
        self.gating = false;
        self
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = detail.into();
        self
    }
}

/// An ordered list of checks.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub checks: Vec<Check>,
}

impl Report {
    pub fn push(&mut self, check: Check) {
        self.checks.push(check);
    }

    pub fn extend(&mut self, other: Report) {
        self.checks.extend(other.checks);
    }

    /// True iff every gating check passed.
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed || !c.gating)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| c.gating && !c.passed)
    }

    /// Looks up a check by exact name.
    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// All checks whose name starts with `prefix`.
    pub fn family<'a>(&'a self, prefix: &'a str) -> impl Iterator<Item = &'a Check> + 'a {
        self.checks.iter().filter(move |c| c.name.starts_with(prefix))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tolerance_rescues_small_violations_only() {
        assert!(Check::at_least("a", 0.99, 1.0, 0.02).passed);
        assert!(!Check::at_least("a", 0.97, 1.0, 0.02).passed);
        assert!(Check::at_most("b", 1.0, 1.0, 0.0).passed);
        assert!(!Check::at_most("b", f64::NAN, 1.0, 0.0).passed);
    }

    #[test]
    fn informational_failures_do_not_fail_report() {
        let mut r = Report::default();
        r.push(Check::at_least("x", 0.0, 1.0, 0.0).informational());
        assert!(r.passed());
        r.push(Check::at_least("y", 0.0, 1.0, 0.0));
        assert!(!r.passed());
        assert_eq!(r.failures().count(), 1);
    }
}
