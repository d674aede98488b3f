use alloc::string::String;
use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Two arrays that must agree in shape do not.
    ShapeMismatch { what: &'static str, expected: (usize, usize), found: (usize, usize) },
    /// A parameter is outside its domain.
    InvalidParameter(String),
    /// A height raster holds nodata inside the processed region.
    Nodata { row: usize, col: usize },
    /// A resampling mapping does not cover the output grid.
    Uncovered { fraction: f64 },
    /// A matrix expected to be Hermitian is not.
    NotHermitian { deviation: f64 },
    /// A (loaded) covariance matrix could not be factorised.
    Singular,
    /// A profile has no positive power.
    ZeroProfile,
    /// Every pixel is excluded by the mask.
    EmptyMask,
    /// Truth has no variance, so R² is undefined.
    ZeroVariance,
    /// Two mosaic crops cover the same pixel.
    OverlappingCrops { row: usize, col: usize },
}

impl Error {
    /// Whether the error comes from a numerical failure rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NotHermitian { .. } | Error::Singular | Error::ZeroProfile | Error::ZeroVariance
        )
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::ShapeMismatch { what, expected, found } => write!(
                f,
                "{what} shape mismatch: expected {}x{}, found {}x{}",
                expected.0, expected.1, found.0, found.1
            ),
            Error::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            Error::Nodata { row, col } => write!(f, "nodata at row {row}, col {col}"),
            Error::Uncovered { fraction } => {
                write!(f, "mapping leaves {:.2}% of the output grid uncovered", fraction * 100.0)
            }
            Error::NotHermitian { deviation } => {
                write!(f, "matrix is not Hermitian (relative deviation {deviation:e})")
            }
            Error::Singular => f.write_str("loaded covariance matrix is singular"),
            Error::ZeroProfile => f.write_str("power profile is identically zero"),
            Error::EmptyMask => f.write_str("no pixel left after masking"),
            Error::ZeroVariance => f.write_str("truth has zero variance"),
            Error::OverlappingCrops { row, col } => {
                write!(f, "mosaic crops overlap at row {row}, col {col}")
            }
        }
    }
}

impl core::error::Error for Error {}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
