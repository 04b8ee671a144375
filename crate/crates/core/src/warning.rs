use serde::{Deserialize, Serialize};

/// Non-fatal conditions attached to estimates and test results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Warning {
    /// The pseudo-observations lie on a monotone curve, so the copula has no density.
    DegenerateCopula { detail: String },
    /// A fitted density lost or gained noticeable mass when negative lobes were clipped.
    PreClipMass { density: String, mass: f64 },
    /// The independence test did not reject; asymmetry inference assumes dependence.
    PossibleIndependence { p_value: f64, alpha: f64 },
}

impl std::fmt::Display for Warning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Warning::DegenerateCopula { detail } => write!(f, "degenerate copula: {detail}"),
            Warning::PreClipMass { density, mass } => {
                write!(f, "{density} density had mass {mass:.4} before clipping")
            }
            Warning::PossibleIndependence { p_value, alpha } => write!(
                f,
                "independence not rejected (p = {p_value:.4} at alpha = {alpha}); asymmetry inference assumes MI > 0"
            ),
        }
    }
}
