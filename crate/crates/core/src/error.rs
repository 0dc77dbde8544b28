use core::fmt;

use alloc::string::String;

/// Errors raised by the simulation core.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An input was outside the domain of a formula.
    Domain(&'static str),
    /// A parameter record violated an invariant.
    InvalidParams(String),
    /// The effective cavity decay is non-positive; the quantity asked for is
    /// undefined in the gain regime.
    GainRegime { kappa_fb: f64 },
    /// A covariance matrix (or block) violates the uncertainty principle.
    Unphysical { min_symplectic: f64 },
    /// A radicand was negative beyond the clamping tolerance.
    NumericalDegeneracy { radicand: f64 },
    /// The integrator diverged (non-finite state or step-size underflow).
    Divergence { t: f64, reason: &'static str },
    /// Drive frequencies are not commensurate within tolerance.
    QuasiPeriodic { ratio: f64 },
    /// The Poincaré residual did not fall below tolerance in the allotted time.
    NotConverged { residual: f64, t: f64 },
    /// The caller aborted (typically a wall-clock budget).
    Aborted { t: f64 },
    /// Samples do not cover one full period.
    Coverage { samples: usize, needed: usize },
    /// A sweep specification is malformed.
    Spec(String),
}

pub type Result<T> = core::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain(what) => write!(f, "domain error: {what}"),
            Error::InvalidParams(msg) => write!(f, "invalid parameters: {msg}"),
            Error::GainRegime { kappa_fb } => {
                write!(f, "effective decay kappa_fb = {kappa_fb} is not positive")
            }
            Error::Unphysical { min_symplectic } => write!(
                f,
                "unphysical covariance matrix: min symplectic eigenvalue {min_symplectic} < 1/2"
            ),
            Error::NumericalDegeneracy { radicand } => {
                write!(f, "negative radicand {radicand} beyond clamping tolerance")
            }
            Error::Divergence { t, reason } => write!(f, "integration diverged at t = {t}: {reason}"),
            Error::QuasiPeriodic { ratio } => {
                write!(f, "drive frequencies are incommensurate (ratio {ratio})")
            }
            Error::NotConverged { residual, t } => {
                write!(f, "limit cycle not converged by t = {t} (residual {residual:e})")
            }
            Error::Aborted { t } => write!(f, "integration aborted at t = {t}"),
            Error::Coverage { samples, needed } => {
                write!(f, "{samples} samples do not span a period (need {needed})")
            }
            Error::Spec(msg) => write!(f, "invalid sweep spec: {msg}"),
        }
    }
}

impl core::error::Error for Error {}
