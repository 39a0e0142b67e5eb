use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Numerical thresholds shared by every predicate.
///
/// All residuals in this crate are measured in the maximum-absolute-entry
/// norm, so the defaults are entrywise bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToleranceContext {
    /// Bound on `|P - P^dagger|` and `|P^2 - P|` for a projection.
    pub eps_proj: f64,
    /// Bound on commutator residuals.
    pub eps_comm: f64,
    /// Entries at or below this magnitude count as zero.
    pub eps_zero: f64,
    /// Eigenvalues closer than this are grouped as degenerate.
    pub eps_eig: f64,
}

impl Default for ToleranceContext {
    fn default() -> Self {
        Self {
            eps_proj: 1e-10,
            eps_comm: 1e-10,
            eps_zero: 1e-12,
            eps_eig: 1e-8,
        }
    }
}

impl ToleranceContext {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("eps_proj", self.eps_proj),
            ("eps_comm", self.eps_comm),
            ("eps_zero", self.eps_zero),
            ("eps_eig", self.eps_eig),
        ];
        for (name, value) in fields {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "tolerance {name} must be strictly positive, got {value}"
                )));
            }
        }
        Ok(())
    }
}
