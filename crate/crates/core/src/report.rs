use std::collections::BTreeMap;

use serde::Serialize;

/// A counterexample attached to a failed predicate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub description: String,
    /// Basis indices involved, if the failure is localized.
    pub indices: Vec<usize>,
}

/// Outcome of a predicate with its numerical diagnostics.
///
/// A `false` verdict always carries a witness.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredicateReport {
    pub verdict: bool,
    pub residuals: BTreeMap<String, f64>,
    pub witness: Option<Witness>,
}

impl PredicateReport {
    pub fn new(verdict: bool) -> Self {
        Self {
            verdict,
            residuals: BTreeMap::new(),
            witness: None,
        }
    }

    pub fn with_residual(mut self, name: impl Into<String>, value: f64) -> Self {
        self.residuals.insert(name.into(), value);
        self
    }

    pub fn with_witness(mut self, description: impl Into<String>, indices: Vec<usize>) -> Self {
        self.witness = Some(Witness {
            description: description.into(),
            indices,
        });
        self
    }

    /// Marks the report as failed with the given witness.
    pub fn fail(mut self, description: impl Into<String>, indices: Vec<usize>) -> Self {
        self.verdict = false;
        self.with_witness(description, indices)
    }

    pub fn residual(&self, name: &str) -> Option<f64> {
        self.residuals.get(name).copied()
    }

    /// Copies residuals from `other` under `prefix.name`.
    pub fn absorb(mut self, prefix: &str, other: &PredicateReport) -> Self {
        for (k, v) in &other.residuals {
            self.residuals.insert(format!("{prefix}.{k}"), *v);
        }
        self
    }
}
