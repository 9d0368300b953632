use thiserror::Error;

pub type Result<T> = std::result::Result<T, CapillaryError>;

/// Errors raised by the capillarity solvers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum CapillaryError {
    #[error("{quantity} = {value} is outside the admissible domain {domain}")]
    Domain {
        quantity: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error("temperature {temperature} is not subcritical; the isotherm is monotone")]
    Supercritical { temperature: f64 },

    #[error("{what} did not converge after {iterations} iterations (residuals: {residuals:?})")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
        residuals: Vec<f64>,
    },

    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    #[error("operation requires {expected} geometry, got {found}")]
    Geometry {
        expected: &'static str,
        found: &'static str,
    },

    #[error("density profile is not monotone across the interface")]
    NonMonotone,

    #[error("no equilibrium {kind} exists: {reason}")]
    NoSolution { kind: &'static str, reason: String },

    #[error("shooting bracket failure: {0}")]
    Bracket(String),

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("degenerate density jump: rho_l = {rho_l} must exceed rho_v = {rho_v}")]
    DegenerateJump { rho_v: f64, rho_l: f64 },

    #[error("regularized layer leaks outside the integration box (edge mismatch {mismatch:e})")]
    SupportOverflow { mismatch: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

impl CapillaryError {
    pub(crate) fn domain(quantity: &'static str, value: f64, domain: &'static str) -> Self {
        CapillaryError::Domain {
            quantity,
            value,
            domain,
        }
    }
}
