//! Errors of the command-line driver and their exit codes.
//!
//! Failures are reported on stderr as a single JSON object
//! `{"error":{"code":…,"exit_code":…,"message":…}}`. Library errors keep their
//! `module.Variant` code; errors raised by the driver itself use `cli.*`.

use additive_bachelier::Error as LibError;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Library(#[from] LibError),

    #[error("{path}:{line}: {message}")]
    Config { path: String, line: usize, message: String },

    #[error("{0}")]
    InvalidInput(String),

    #[error("cannot write {path}: {message}")]
    Output { path: String, message: String },
}

pub type CliResult<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn code(&self) -> &'static str {
        match self {
            CliError::Library(e) => e.code(),
            CliError::Config { .. } => "cli.ConfigError",
            CliError::InvalidInput(_) => "cli.InvalidInput",
            CliError::Output { .. } => "cli.OutputError",
        }
    }

    /// Process exit code; `0` is success and `2` is left to argument
    /// parsing errors.
    pub fn exit_code(&self) -> i32 {
        exit_code_for(self.code())
    }

    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Body<'a> {
            code: &'a str,
            exit_code: i32,
            message: String,
        }
        #[derive(Serialize)]
        struct Envelope<'a> {
            error: Body<'a>,
        }
        serde_json::to_string(&Envelope {
            error: Body {
                code: self.code(),
                exit_code: self.exit_code(),
                message: self.to_string(),
            },
        })
        .expect("error envelope serializes")
    }
}

/// Exit code of every error code. Unknown codes map to 1.
pub const EXIT_CODES: &[(&str, i32)] = &[
    ("corechf.InvalidParameter", 10),
    ("corechf.BranchCutViolation", 11),
    ("corechf.OutsideStrip", 12),
    ("bachelier.PriceBelowIntrinsic", 20),
    ("bachelier.PriceNotFinite", 21),
    ("bachelier.OutOfNumericRange", 22),
    ("pricer.QuadratureNotConverged", 30),
    ("pricer.UnsupportedAlpha", 31),
    ("calib.TooFewCouples", 40),
    ("calib.NonPositiveDiscount", 41),
    ("calib.MissingOisCurve", 42),
    ("calib.NoBracketingQuotes", 43),
    ("calib.OptimizerNotConverged", 44),
    ("calib.EmptyQuoteSet", 45),
    ("mc.CdfTabulationFailed", 50),
    ("marketio.SchemaError", 60),
    ("marketio.ValueError", 61),
    ("marketio.NegativeInterval", 62),
    ("marketio.SchemaVersionMismatch", 63),
    ("marketio.DuplicateValueDate", 64),
    ("marketio.IoError", 65),
    ("cli.ConfigError", 70),
    ("cli.InvalidInput", 71),
    ("cli.OutputError", 72),
];

pub fn exit_code_for(code: &str) -> i32 {
    EXIT_CODES.iter().find(|(c, _)| *c == code).map(|&(_, x)| x).unwrap_or(1)
}
