//! On-disk description of a user-supplied degrees-of-freedom prior.
//!
//! The file is JSON with a `schema_version`, the `sigma^2` exponent `a`,
//! an open support interval, and one of three density forms:
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "a": 1.0,
//!   "support": { "min": 0.0, "max": null },
//!   "density": { "form": "exponential", "rate": 0.1 }
//! }
//! ```
//!
//! Forms: `constant` (flat), `exponential` with a positive `rate`
//! (density proportional to `exp(-rate * nu)`), and `power` with an
//! `exponent` (density proportional to `nu^exponent`). Densities are
//! unnormalized; the audit decides whether they integrate.

use std::path::Path;

use serde::Deserialize;
use treg_core::priors::{CustomNuPrior, NuSupport, PriorSpec};
use treg_core::{Error, Result};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CustomPriorFile {
    schema_version: u32,
    a: f64,
    support: SupportField,
    density: DensityField,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SupportField {
    min: f64,
    max: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "form", rename_all = "lowercase", deny_unknown_fields)]
enum DensityField {
    Constant,
    Exponential { rate: f64 },
    Power { exponent: f64 },
}

/// Reads and validates a custom prior file.
pub fn load(path: &Path) -> Result<CustomNuPrior> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let file: CustomPriorFile = serde_json::from_str(&text)
        .map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
    if file.schema_version != crate::SCHEMA_VERSION {
        return Err(Error::InvalidInput(format!(
            "unsupported custom prior schema_version {} (expected {})",
            file.schema_version,
            crate::SCHEMA_VERSION
        )));
    }
    let support = NuSupport::new(file.support.min, file.support.max)?;
    match file.density {
        DensityField::Constant => CustomNuPrior::new(file.a, support, |_| 0.0),
        DensityField::Exponential { rate } => {
            if !rate.is_finite() || rate <= 0.0 {
                return Err(Error::InvalidInput(format!(
                    "exponential density requires rate > 0, got {rate}"
                )));
            }
            CustomNuPrior::new(file.a, support, move |nu| -rate * nu)
        }
        DensityField::Power { exponent } => {
            if !exponent.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "power density requires a finite exponent, got {exponent}"
                )));
            }
            CustomNuPrior::new(file.a, support, move |nu| exponent * nu.ln())
        }
    }
}

/// Resolves a `--prior` argument into a [`PriorSpec`] for `p` covariates.
pub fn build_prior(spec: &str, p: usize) -> Result<PriorSpec> {
    match spec {
        "independence" => PriorSpec::independence_jeffreys(p),
        "jeffreys-rule" => PriorSpec::jeffreys_rule(p),
        other => {
            if let Some(path) = other.strip_prefix("custom:") {
                let custom = load(Path::new(path))?;
                PriorSpec::custom(custom, p)
            } else {
                Err(Error::InvalidInput(format!(
                    "unknown prior '{other}'; expected 'independence', 'jeffreys-rule', \
                     or 'custom:<file.json>'"
                )))
            }
        }
    }
}
