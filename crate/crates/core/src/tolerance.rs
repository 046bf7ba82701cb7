use serde::{Deserialize, Serialize};

/// Absolute tolerances used by checks and certificates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Exact-geometry identities (round trips, reparametrization).
    pub geometry: f64,
    /// Finite-difference checks.
    pub finite_difference: f64,
    /// Per-iterate flow certificates and sampled margins.
    pub certificate: f64,
    /// Per-step resolvent estimates.
    pub estimate: f64,
    /// First-order optimality at proximal outputs.
    pub optimality: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            geometry: 1e-10,
            finite_difference: 1e-6,
            certificate: 1e-8,
            estimate: 1e-7,
            optimality: 1e-5,
        }
    }
}

impl Tolerances {
    /// Replaces the certificate and estimate tolerances.
    pub fn with_certificate(self, tol: f64) -> Self {
        Self {
            certificate: tol,
            estimate: tol,
            ..self
        }
    }
}
