use thiserror::Error;

/// Errors produced by the modeling and fitting routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("slab mode cut off: {0}")]
    ModeCutOff(String),

    #[error("position ({rho_nm:.1} nm, {z_nm:.1} nm) lies outside the field grid")]
    OutOfDomain { rho_nm: f64, z_nm: f64 },

    #[error("field map has not been normalized")]
    Unnormalized,

    #[error(
        "mode {label} not converged: last two estimates {previous_nm:.4} nm and {last_nm:.4} nm \
         differ by more than {tolerance_nm} nm"
    )]
    NotConverged {
        label: String,
        previous_nm: f64,
        last_nm: f64,
        tolerance_nm: f64,
    },

    #[error("linear algebra failure: {0}")]
    Numerical(String),

    #[error("coupling rate {requested:.4e} Hz outside reachable range [{min:.4e}, {max:.4e}] Hz")]
    OutOfCouplingRange { requested: f64, min: f64, max: f64 },

    #[error("etch cannot red-shift the resonance (current {current_nm} nm, target {target_nm} nm); use thermal tuning or adsorption instead")]
    EtchCannotRedShift { current_nm: f64, target_nm: f64 },

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            reason: format!("must be positive and finite, got {value}"),
        })
    }
}
