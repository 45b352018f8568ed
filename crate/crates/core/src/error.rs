use thiserror::Error;

/// Errors raised by the cavity model, integrators and spectrum extraction.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum CasimirError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("mode index {index} outside 1..={max}")]
    IndexRange { index: usize, max: usize },

    #[error("position x = {x} outside [0, {length}]")]
    Domain { x: f64, length: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("resonance undefined for non-integer γ (γ = {0})")]
    NonIntegerGamma(f64),

    #[error("integrator exceeded {max_steps} steps before reaching t = {target}")]
    StepLimitExceeded { max_steps: usize, target: f64 },

    #[error("non-finite state encountered at t = {0}")]
    NonFinite(f64),

    #[error("step size underflow at t = {t} (h = {h:e}); tolerance cannot be met")]
    ToleranceFailure { t: f64, h: f64 },

    #[error("sample times must be sorted within [0, {stop}]")]
    SampleTimes { stop: f64 },

    #[error("wall is not at rest length at T = {t} (L(T)/L0 - 1 = {offset:e}); nearest valid stop time is T = {nearest}")]
    MatchingDomain { t: f64, offset: f64, nearest: f64 },
}

impl CasimirError {
    /// Whether the error comes from the inputs rather than from a numerical
    /// breakdown during integration.
    pub fn is_input_error(&self) -> bool {
        !matches!(
            self,
            CasimirError::StepLimitExceeded { .. } | CasimirError::NonFinite(_) | CasimirError::ToleranceFailure { .. }
        )
    }
}

pub type Result<T, E = CasimirError> = std::result::Result<T, E>;
