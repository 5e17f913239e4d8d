use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Coarse grouping used to map failures onto process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Validation,
    Numerical,
    Physics,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error(
        "frequency {omega} lies within the exclusion radius of the permeability pole at {pole}"
    )]
    Pole { omega: f64, pole: f64 },

    #[error("frequency {xi} lies within the exclusion radius of the band edge at {edge}")]
    Edge { xi: f64, edge: f64 },

    #[error("frequency {xi} is outside the gap ({lower}, {upper})")]
    OutOfGap { xi: f64, lower: f64, upper: f64 },

    #[error("frequency {xi} is outside the allowed band: {reason}")]
    OutOfBand { xi: f64, reason: &'static str },

    #[error("derivative diverges at {xi} (within the exclusion radius of {edge})")]
    DerivativeOverflow { xi: f64, edge: f64 },

    #[error("value {value} is outside the admissible range: {reason}")]
    Range { value: f64, reason: String },

    #[error("resonance: {what} vanishes (|{what}| = {value:e})")]
    Resonance { what: &'static str, value: f64 },

    #[error("no sign change on [{lo}, {hi}]: f(lo) = {f_lo}, f(hi) = {f_hi}")]
    NoSignChange {
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("{what}: analytic value {analytic} disagrees with finite difference {numeric}")]
    CrossCheck {
        what: &'static str,
        analytic: f64,
        numeric: f64,
    },

    #[error("singular Jacobian at {at:?}")]
    SingularJacobian { at: Vec<f64> },

    #[error("pole in the two-particle phase: h_j - h_l = -i*beta")]
    PhasePole,

    #[error("soliton with {l} pairs does not fit in the gap: maximum admissible l is {max_l}")]
    BandEscape { l: usize, max_l: usize },

    #[error("gap soliton velocity undefined at zero momentum")]
    ZeroVelocity,

    #[error("particle {index}: {reason}")]
    Mapping { index: usize, reason: String },

    #[error("necessary condition violated for particles {violating:?}")]
    NcViolation { violating: Vec<usize> },
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::InvalidParameter { .. } | Error::Range { .. } | Error::BandEscape { .. } => {
                ErrorClass::Validation
            }
            Error::NcViolation { .. } | Error::Mapping { .. } => ErrorClass::Physics,
            _ => ErrorClass::Numerical,
        }
    }

    /// Short stable identifier, used to mark skipped rows in tables.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidParameter { .. } => "invalid_parameter",
            Error::Pole { .. } => "pole",
            Error::Edge { .. } => "edge",
            Error::OutOfGap { .. } => "out_of_gap",
            Error::OutOfBand { .. } => "out_of_band",
            Error::DerivativeOverflow { .. } => "derivative_overflow",
            Error::Range { .. } => "range",
            Error::Resonance { .. } => "resonance",
            Error::NoSignChange { .. } => "no_sign_change",
            Error::NoConvergence { .. } => "no_convergence",
            Error::CrossCheck { .. } => "cross_check",
            Error::SingularJacobian { .. } => "singular_jacobian",
            Error::PhasePole => "phase_pole",
            Error::BandEscape { .. } => "band_escape",
            Error::ZeroVelocity => "zero_velocity",
            Error::Mapping { .. } => "mapping",
            Error::NcViolation { .. } => "nc_violation",
        }
    }

    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
