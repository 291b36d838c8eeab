//! Pass/fail check records shared by every verification routine.

use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProofId {
    Ghz,
    Hardy,
    Swap,
    Ks,
}

impl fmt::Display for ProofId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProofId::Ghz => "ghz",
            ProofId::Hardy => "hardy",
            ProofId::Swap => "swap",
            ProofId::Ks => "ks",
        })
    }
}

/// A measured or expected quantity: a single number or a list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Quantity {
    Scalar(f64),
    Seq(Vec<f64>),
}

impl Quantity {
    fn components(&self) -> &[f64] {
        match self {
            Quantity::Scalar(x) => std::slice::from_ref(x),
            Quantity::Seq(xs) => xs,
        }
    }
}

impl From<f64> for Quantity {
    fn from(x: f64) -> Self {
        Quantity::Scalar(x)
    }
}

impl From<Vec<f64>> for Quantity {
    fn from(xs: Vec<f64>) -> Self {
        Quantity::Seq(xs)
    }
}

fn short(x: f64) -> String {
    if x != 0.0 && x.abs() < 1e-4 {
        format!("{x:.3e}")
    } else {
        x.to_string()
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Quantity::Scalar(x) => f.write_str(&short(*x)),
            Quantity::Seq(xs) => {
                let parts: Vec<String> = xs.iter().map(|&x| short(x)).collect();
                write!(f, "[{}]", parts.join(", "))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub measured: Quantity,
    pub expected: Quantity,
    pub tolerance: f64,
}

impl CheckResult {
    /// Passes iff the two quantities have the same shape and every component
    /// differs by at most `tolerance`.
    pub fn compare(
        name: impl Into<String>,
        measured: impl Into<Quantity>,
        expected: impl Into<Quantity>,
        tolerance: f64,
    ) -> Self {
        let measured = measured.into();
        let expected = expected.into();
        let (m, e) = (measured.components(), expected.components());
        let passed = m.len() == e.len()
            && m.iter().zip(e).all(|(a, b)| (a - b).abs() <= tolerance);
        Self {
            name: name.into(),
            passed,
            measured,
            expected,
            tolerance,
        }
    }

    /// Integer-valued comparison with zero tolerance.
    pub fn count(name: impl Into<String>, measured: u64, expected: u64) -> Self {
        Self::compare(name, measured as f64, expected as f64, 0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub proof_id: ProofId,
    pub checks: Vec<CheckResult>,
    pub overall: bool,
}

impl VerificationReport {
    pub fn new(proof_id: ProofId) -> Self {
        Self {
            proof_id,
            checks: Vec::new(),
            overall: true,
        }
    }

    pub fn push(&mut self, check: CheckResult) {
        self.overall &= check.passed;
        self.checks.push(check);
    }

    pub fn extend(&mut self, checks: impl IntoIterator<Item = CheckResult>) {
        for c in checks {
            self.push(c);
        }
    }

    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failed(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let verdict = if self.overall { "PASS" } else { "FAIL" };
        let _ = writeln!(out, "== {} ({} checks): {verdict}", self.proof_id, self.checks.len());
        for c in &self.checks {
            let mark = if c.passed { "PASS" } else { "FAIL" };
            let _ = writeln!(
                out,
                "[{mark}] {}: measured={} expected={} tol={:e}",
                c.name, c.measured, c.expected, c.tolerance
            );
        }
        out
    }
}
