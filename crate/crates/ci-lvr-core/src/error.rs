//! Error type shared across the crate.

use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An argument is outside the mathematical domain of the operation.
    Domain(&'static str),
    /// Contract inadmissible: the funding fee does not exceed `r·K`.
    Admissibility { fee_rate: f64, floor: f64 },
    /// An iterative solve hit its iteration cap.
    Convergence(&'static str),
    /// A root-finding target is unreachable on the admissible range.
    NoSolution(&'static str),
    /// Invalid simulation configuration.
    Config(&'static str),
    /// An in-band price fell in no tile of a chained strip.
    Tiling { price: f64 },
    /// No simulated path exited within the horizon.
    Horizon { censored: usize },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain(msg) => write!(f, "domain error: {msg}"),
            Error::Admissibility { fee_rate, floor } => write!(
                f,
                "inadmissible contract: fee rate {fee_rate} must exceed r*K = {floor}"
            ),
            Error::Convergence(msg) => write!(f, "convergence failure: {msg}"),
            Error::NoSolution(msg) => write!(f, "no solution: {msg}"),
            Error::Config(msg) => write!(f, "invalid configuration: {msg}"),
            Error::Tiling { price } => write!(
                f,
                "tiling violation: no strike band contains in-range price {price}"
            ),
            Error::Horizon { censored } => write!(
                f,
                "no path exited within the horizon ({censored} censored)"
            ),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}
