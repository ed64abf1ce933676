//! Residuals and machine-readable verification reports ("report-v1").

use serde::Serialize;

/// Largest coefficient magnitude seen by a check, with a witness label
/// (bidegree and word, or whatever locates the offender).
#[derive(Clone, Debug, Serialize)]
pub struct Residual {
    pub max_abs: f64,
    pub witness: String,
}

impl Residual {
    pub fn zero() -> Self {
        Residual {
            max_abs: 0.0,
            witness: String::new(),
        }
    }

    pub fn new(max_abs: f64, witness: impl Into<String>) -> Self {
        Residual {
            max_abs,
            witness: witness.into(),
        }
    }

    pub fn join(&mut self, other: Residual) {
        if other.max_abs > self.max_abs {
            *self = other;
        }
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.max_abs <= tol
    }
}

/// One per-check record of a verification run.
#[derive(Clone, Debug, Serialize)]
pub struct CheckRecord {
    pub name: String,
    pub inputs: serde_json::Value,
    pub residual: f64,
    pub witness: String,
    pub tolerance: f64,
    pub pass: bool,
    pub wall_ms: u128,
}

/// A full report, serialized as versioned JSON.
#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub schema: &'static str,
    pub suite: String,
    pub records: Vec<CheckRecord>,
}

impl Report {
    pub fn new(suite: impl Into<String>) -> Self {
        Report {
            schema: "report-v1",
            suite: suite.into(),
            records: Vec::new(),
        }
    }

    pub fn push(
        &mut self,
        name: impl Into<String>,
        inputs: serde_json::Value,
        residual: &Residual,
        tolerance: f64,
        wall_ms: u128,
    ) {
        self.records.push(CheckRecord {
            name: name.into(),
            inputs,
            residual: residual.max_abs,
            witness: residual.witness.clone(),
            tolerance,
            pass: residual.passes(tolerance),
            wall_ms,
        });
    }

    pub fn all_pass(&self) -> bool {
        self.records.iter().all(|r| r.pass)
    }
}
