//! Residual reports shared by the verification harnesses.

use serde::Serialize;

#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct Check {
    pub name: String,
    pub lhs: String,
    pub rhs: String,
    /// Valuation of lhs - rhs, capped by the working precision.
    pub residual_valuation: i64,
    /// Valuation the identity must reach to pass.
    pub certificate: i64,
    pub pass: bool,
}

impl Check {
    pub fn new(
        name: impl Into<String>,
        lhs: impl ToString,
        rhs: impl ToString,
        residual_valuation: i64,
        certificate: i64,
    ) -> Self {
        Check {
            name: name.into(),
            lhs: lhs.to_string(),
            rhs: rhs.to_string(),
            residual_valuation,
            certificate,
            pass: residual_valuation >= certificate,
        }
    }

    /// A yes/no check with no numeric residual.
    pub fn flag(name: impl Into<String>, pass: bool, detail: impl ToString) -> Self {
        Check {
            name: name.into(),
            lhs: detail.to_string(),
            rhs: String::new(),
            residual_valuation: 0,
            certificate: 0,
            pass,
        }
    }
}

pub fn all_pass(checks: &[Check]) -> bool {
    checks.iter().all(|c| c.pass)
}
