//! Crate-wide error type.
//!
//! Every variant belongs to one of the library modules; [`Error::code`]
//! returns a stable `module.Variant` identifier that the CLI surfaces in its
//! machine-readable error output.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("complex power/log argument {re} + {im}i lies on the branch cut")]
    BranchCutViolation { re: f64, im: f64 },

    #[error("Im(u) = {im} outside the analyticity strip ({lower}, {upper})")]
    OutsideStrip { im: f64, lower: f64, upper: f64 },

    #[error("price {price} is not above the intrinsic value {intrinsic}")]
    PriceBelowIntrinsic { price: f64, intrinsic: f64 },

    #[error("price is not finite")]
    PriceNotFinite,

    #[error("implied volatility out of numeric range (|y/sigma| would exceed {limit})")]
    OutOfNumericRange { limit: f64 },

    #[error("quadrature did not converge (error estimate {estimate:e})")]
    QuadratureNotConverged { estimate: f64 },

    #[error("alpha = {alpha} is not supported here (closed-form G density needs alpha in {{0, 1/2}})")]
    UnsupportedAlpha { alpha: f64 },

    #[error("expiry {expiry}: {found} call/put couples, at least 2 distinct strikes required")]
    TooFewCouples { expiry: String, found: usize },

    #[error("expiry {expiry}: fitted discount factor slope is non-negative")]
    NonPositiveDiscount { expiry: String },

    #[error("no OIS curve supplied")]
    MissingOisCurve,

    #[error("expiry {expiry}: no quotes bracket the forward")]
    NoBracketingQuotes { expiry: String },

    #[error("optimizer did not converge after {evaluations} evaluations")]
    OptimizerNotConverged { evaluations: usize },

    #[error("no usable quotes for the smile fit")]
    EmptyQuoteSet,

    #[error("CDF tabulation failed: {reason}")]
    CdfTabulationFailed { reason: String },

    #[error("schema error: {0}")]
    SchemaError(String),

    #[error("row {row}: {message}")]
    ValueError { row: usize, message: String },

    #[error("negative interval: {from} is after {to}")]
    NegativeInterval { from: String, to: String },

    #[error("schema version {found} is not supported (expected {expected})")]
    SchemaVersionMismatch { found: u32, expected: u32 },

    #[error("archive already holds a result for {0}")]
    DuplicateValueDate(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Stable `module.Variant` code.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidParameter { .. } => "corechf.InvalidParameter",
            Error::BranchCutViolation { .. } => "corechf.BranchCutViolation",
            Error::OutsideStrip { .. } => "corechf.OutsideStrip",
            Error::PriceBelowIntrinsic { .. } => "bachelier.PriceBelowIntrinsic",
            Error::PriceNotFinite => "bachelier.PriceNotFinite",
            Error::OutOfNumericRange { .. } => "bachelier.OutOfNumericRange",
            Error::QuadratureNotConverged { .. } => "pricer.QuadratureNotConverged",
            Error::UnsupportedAlpha { .. } => "pricer.UnsupportedAlpha",
            Error::TooFewCouples { .. } => "calib.TooFewCouples",
            Error::NonPositiveDiscount { .. } => "calib.NonPositiveDiscount",
            Error::MissingOisCurve => "calib.MissingOisCurve",
            Error::NoBracketingQuotes { .. } => "calib.NoBracketingQuotes",
            Error::OptimizerNotConverged { .. } => "calib.OptimizerNotConverged",
            Error::EmptyQuoteSet => "calib.EmptyQuoteSet",
            Error::CdfTabulationFailed { .. } => "mc.CdfTabulationFailed",
            Error::SchemaError(_) => "marketio.SchemaError",
            Error::ValueError { .. } => "marketio.ValueError",
            Error::NegativeInterval { .. } => "marketio.NegativeInterval",
            Error::SchemaVersionMismatch { .. } => "marketio.SchemaVersionMismatch",
            Error::DuplicateValueDate(_) => "marketio.DuplicateValueDate",
            Error::Io(_) => "marketio.IoError",
        }
    }

    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
