//! Verification reports: every checker returns structured pass/fail data
//! rather than panicking, so the CLI can certify and falsify through the
//! same path and emit machine-readable JSON.

use serde::{Deserialize, Serialize};

/// How the comparison target of a check was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    /// Target follows from exact arithmetic on the discrete representation.
    Exact,
    /// Target is a closed-form constant evaluated in floating point.
    ClosedForm,
    /// Target was itself produced by a numerical method (quadrature, fit).
    Numeric,
}

/// One named check: an observed quantity compared against a bound.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub passed: bool,
    /// The measured quantity (residual, ratio, estimate...).
    pub observed: f64,
    /// The threshold or reference it was compared against.
    pub bound: f64,
    /// Tolerance used in the comparison (absolute or relative per check).
    pub tolerance: f64,
    pub provenance: Provenance,
    /// Context: witness radii, parameters, failure diagnostics.
    pub detail: String,
}

/// A suite of checks with a stable, versioned JSON layout.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerificationReport {
    pub schema_version: u32,
    pub suite: String,
    pub records: Vec<CheckRecord>,
}

impl VerificationReport {
    pub fn new(suite: impl Into<String>) -> Self {
        VerificationReport {
            schema_version: 1,
            suite: suite.into(),
            records: Vec::new(),
        }
    }

    /// Record a check where `observed` must not exceed `bound + tolerance`.
    #[allow(clippy::too_many_arguments)]
    pub fn check_upper(
        &mut self,
        name: impl Into<String>,
        observed: f64,
        bound: f64,
        tolerance: f64,
        provenance: Provenance,
        detail: impl Into<String>,
    ) -> bool {
        let passed = observed.is_finite() && observed <= bound + tolerance;
        self.records.push(CheckRecord {
            name: name.into(),
            passed,
            observed,
            bound,
            tolerance,
            provenance,
            detail: detail.into(),
        });
        passed
    }

    /// Record a check where `observed` must match `target` within
    /// `tolerance` relative error (absolute when target is 0).
    #[allow(clippy::too_many_arguments)]
    pub fn check_close(
        &mut self,
        name: impl Into<String>,
        observed: f64,
        target: f64,
        tolerance: f64,
        provenance: Provenance,
        detail: impl Into<String>,
    ) -> bool {
        let err = if target == 0.0 {
            observed.abs()
        } else {
            (observed - target).abs() / target.abs()
        };
        let passed = observed.is_finite() && err <= tolerance;
        self.records.push(CheckRecord {
            name: name.into(),
            passed,
            observed,
            bound: target,
            tolerance,
            provenance,
            detail: detail.into(),
        });
        passed
    }

    /// Record an externally decided check.
    #[allow(clippy::too_many_arguments)]
    pub fn check_flag(
        &mut self,
        name: impl Into<String>,
        passed: bool,
        observed: f64,
        bound: f64,
        provenance: Provenance,
        detail: impl Into<String>,
    ) -> bool {
        self.records.push(CheckRecord {
            name: name.into(),
            passed,
            observed,
            bound,
            tolerance: 0.0,
            provenance,
            detail: detail.into(),
        });
        passed
    }

    pub fn passed(&self) -> bool {
        self.records.iter().all(|r| r.passed)
    }

    pub fn pass_count(&self) -> usize {
        self.records.iter().filter(|r| r.passed).count()
    }

    /// Append all records of `other` (names are already suite-qualified).
    pub fn merge(&mut self, other: VerificationReport) {
        self.records.extend(other.records);
    }

    /// One console line per record plus a summary line.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            let tag = if r.passed { "PASS" } else { "FAIL" };
            out.push_str(&format!(
                "[{tag}] {}: observed={:.9e} bound={:.9e} tol={:.1e} ({})\n",
                r.name,
                r.observed,
                r.bound,
                r.tolerance,
                match r.provenance {
                    Provenance::Exact => "exact",
                    Provenance::ClosedForm => "closed-form",
                    Provenance::Numeric => "numeric",
                }
            ));
            if !r.passed && !r.detail.is_empty() {
                out.push_str(&format!("       detail: {}\n", r.detail));
            }
        }
        out.push_str(&format!(
            "suite {}: {} ({}/{} checks)\n",
            self.suite,
            if self.passed() { "PASS" } else { "FAIL" },
            self.pass_count(),
            self.records.len()
        ));
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(s: &str) -> crate::Result<Self> {
        serde_json::from_str(s).map_err(|e| crate::Error::Parse(format!("report JSON: {e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_round_trip_and_status() {
        let mut r = VerificationReport::new("demo");
        r.check_upper("a", 1.0, 2.0, 0.0, Provenance::Exact, "");
        r.check_close("b", 3.0, 3.0 + 1e-12, 1e-9, Provenance::ClosedForm, "");
        assert!(r.passed());
        r.check_upper("c", 5.0, 2.0, 0.0, Provenance::Numeric, "witness r=1");
        assert!(!r.passed());
        assert_eq!(r.pass_count(), 2);

        let txt = r.render();
        assert!(txt.contains("[PASS] a:"));
        assert!(txt.contains("[FAIL] c:"));
        assert!(txt.contains("suite demo: FAIL (2/3 checks)"));

        let json = r.to_json();
        let back = VerificationReport::from_json(&json).unwrap();
        assert_eq!(back.records.len(), 3);
        assert_eq!(back.schema_version, 1);
        assert!(!back.passed());
    }

    #[test]
    fn check_close_handles_zero_target() {
        let mut r = VerificationReport::new("zero");
        r.check_close("z", 1e-12, 0.0, 1e-9, Provenance::Exact, "");
        assert!(r.passed());
        r.check_close("z2", 1e-3, 0.0, 1e-9, Provenance::Exact, "");
        assert!(!r.passed());
    }

    #[test]
    fn non_finite_observed_fails() {
        let mut r = VerificationReport::new("nan");
        r.check_upper("n", f64::NAN, 1.0, 0.0, Provenance::Numeric, "");
        assert!(!r.passed());
    }
}
