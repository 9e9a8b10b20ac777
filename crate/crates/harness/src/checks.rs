use std::fmt;

/// One pass/fail line: `measured` compared against `bound`.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    pub bound: f64,
    pub detail: String,
}

impl Check {
    /// Passes when `measured <= bound`.
    pub fn at_most(name: impl Into<String>, measured: f64, bound: f64) -> Self {
        Self { name: name.into(), passed: measured <= bound, measured, bound, detail: String::new() }
    }

    /// Passes when `measured >= bound`.
    pub fn at_least(name: impl Into<String>, measured: f64, bound: f64) -> Self {
        Self { name: name.into(), passed: measured >= bound, measured, bound, detail: String::new() }
    }

    pub fn boolean(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        let v = if passed { 1.0 } else { 0.0 };
        Self { name: name.into(), passed, measured: v, bound: 1.0, detail: detail.into() }
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = detail.into();
        self
    }

    pub fn failed(name: impl Into<String>, detail: impl Into<String>) -> Self {
        Self::boolean(name, false, detail)
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{status} {}: measured {:.6e}, bound {:.6e}", self.name, self.measured, self.bound)?;
        if !self.detail.is_empty() {
            write!(f, " ({})", self.detail)?;
        }
        Ok(())
    }
}

pub fn all_passed(checks: &[Check]) -> bool {
    checks.iter().all(|c| c.passed)
}
