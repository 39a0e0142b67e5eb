//! Run settings: built-in defaults, then `QBE_*` environment overrides,
//! then an optional TOML file, then command-line flags.
//!
//! ```toml
//! K = 0.5
//!
//! [tolerance]
//! eps_proj = 1e-10
//! eps_comm = 1e-10
//! eps_zero = 1e-12
//! eps_eig = 1e-8
//! ```

use std::path::Path;

use ballistic_core::ToleranceContext;
use serde::Deserialize;

use crate::error::{CliError, CliResult};

pub const ENV_VARS: [&str; 4] = ["QBE_EPS_PROJ", "QBE_EPS_COMM", "QBE_EPS_ZERO", "QBE_EPS_EIG"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Settings {
    pub tol: ToleranceContext,
    /// Hopping strength of the Feynman Hamiltonian.
    pub k: f64,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            tol: ToleranceContext::default(),
            k: 1.0,
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    #[serde(rename = "K")]
    k: Option<f64>,
    #[serde(default)]
    tolerance: ToleranceOverrides,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ToleranceOverrides {
    eps_proj: Option<f64>,
    eps_comm: Option<f64>,
    eps_zero: Option<f64>,
    eps_eig: Option<f64>,
}

impl ToleranceOverrides {
    fn apply(&self, tol: &mut ToleranceContext) {
        let slots = [
            (&mut tol.eps_proj, self.eps_proj),
            (&mut tol.eps_comm, self.eps_comm),
            (&mut tol.eps_zero, self.eps_zero),
            (&mut tol.eps_eig, self.eps_eig),
        ];
        for (slot, value) in slots {
            if let Some(v) = value {
                *slot = v;
            }
        }
    }
}

impl Settings {
    /// Resolves settings from an environment lookup and an optional file.
    pub fn resolve(
        env: impl Fn(&str) -> Option<String>,
        config: Option<&Path>,
        k_flag: Option<f64>,
    ) -> CliResult<Self> {
        let mut s = Settings::default();
        let mut from_env = ToleranceOverrides::default();
        let targets = [
            &mut from_env.eps_proj,
            &mut from_env.eps_comm,
            &mut from_env.eps_zero,
            &mut from_env.eps_eig,
        ];
        for (var, slot) in ENV_VARS.iter().zip(targets) {
            if let Some(raw) = env(var) {
                let v = raw
                    .trim()
                    .parse::<f64>()
                    .map_err(|_| CliError::input(format!("{var}={raw:?} is not a number")))?;
                *slot = Some(v);
            }
        }
        from_env.apply(&mut s.tol);

        if let Some(path) = config {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::input(format!("cannot read config {}: {e}", path.display())))?;
            let file: ConfigFile = toml::from_str(&text)
                .map_err(|e| CliError::input(format!("config {}: {e}", path.display())))?;
            file.tolerance.apply(&mut s.tol);
            if let Some(k) = file.k {
                s.k = k;
            }
        }
        if let Some(k) = k_flag {
            s.k = k;
        }
        s.tol.validate()?;
        if !(s.k.is_finite() && s.k > 0.0) {
            return Err(CliError::input(format!("K must be positive, got {}", s.k)));
        }
        Ok(s)
    }
}
