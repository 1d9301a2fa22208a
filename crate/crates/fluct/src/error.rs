use num_complex::Complex64;
use thiserror::Error;

/// Errors produced by model validation and the analytic machinery.
///
/// Validation-style errors carry the offending field path so front ends can
/// report machine-readable diagnostics; structural errors (root counts, pole
/// hits, conditioning) indicate the analytic pipeline cannot proceed.
#[derive(Debug, Clone, Error)]
pub enum FluctError {
    /// A model or config field failed validation.
    #[error("invalid {field}: {message}")]
    Validation { field: String, message: String },

    /// An operation was called on a model outside its supported class.
    #[error("model class mismatch: expected {expected}, {detail}")]
    ModelClass {
        expected: &'static str,
        detail: String,
    },

    /// A transform was evaluated at (or too close to) a pole.
    #[error("evaluation at {at} hits a pole near eigenvalue {eigenvalue} (distance {distance:.3e})")]
    PoleEvaluation {
        at: Complex64,
        eigenvalue: Complex64,
        distance: f64,
    },

    /// A root of the cleared exponent polynomial sits within tolerance of the
    /// imaginary axis, so the left/right half-plane split is unreliable.
    #[error("root {root} lies within {tolerance:.1e} of the imaginary axis; half-plane split is ill-conditioned")]
    RootConditioning { root: Complex64, tolerance: f64 },

    /// The computed left-half-plane root count disagrees with the structural
    /// invariant (poles + 0/1 depending on the small-time downward part).
    #[error("root/pole count mismatch: {roots} roots vs {poles} poles, expected roots = poles + {expected_gap}")]
    RootCountMismatch {
        roots: usize,
        poles: usize,
        expected_gap: usize,
    },

    /// Residue extraction could not be stabilised (unmergeable near-repeated
    /// roots or a vanishing deflated denominator).
    #[error("ill-conditioned residue extraction: {detail}")]
    IllConditioned { detail: String },

    /// A transform limit that the theory does not cover (for example a
    /// zero-discount query without the required drift structure).
    #[error("unsupported limit: {detail}")]
    UnsupportedLimit { detail: String },

    /// r = 0 with nonpositive mean: stopping in finite time is never optimal,
    /// so there is no threshold solution to report.
    #[error("zero discount with nonpositive mean: it is not optimal to stop in a finite time")]
    NotOptimalToStop,

    /// The printed spectrally negative downward formula requires beta above
    /// the largest real root for its integral to converge.
    #[error("divergent integral: beta = {beta} must exceed phi(alpha) = {phi}")]
    DivergentIntegral { beta: f64, phi: f64 },
}

impl FluctError {
    pub fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        FluctError::Validation {
            field: field.into(),
            message: message.into(),
        }
    }

    /// True for errors about the analytic structure of the problem (exit
    /// code 3 territory) as opposed to bad user input (exit code 2).
    pub fn is_structural(&self) -> bool {
        matches!(
            self,
            FluctError::PoleEvaluation { .. }
                | FluctError::RootConditioning { .. }
                | FluctError::RootCountMismatch { .. }
                | FluctError::IllConditioned { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, FluctError>;
