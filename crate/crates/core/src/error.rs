use core::fmt;

/// State invariant checked on density matrices during integration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Invariant {
    Trace,
    Hermiticity,
    Positivity,
    Finiteness,
    /// Per-step increment of a tracked phase reached the unwrapping limit.
    PhaseIncrement,
}

impl fmt::Display for Invariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Invariant::Trace => "trace",
            Invariant::Hermiticity => "hermiticity",
            Invariant::Positivity => "positivity",
            Invariant::Finiteness => "finiteness",
            Invariant::PhaseIncrement => "phase increment",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Two operands (or an operand and a basis) disagree on dimension.
    DimensionMismatch {
        expected: usize,
        found: usize,
    },
    /// Requested dimension is zero or above [`crate::densemat::MAX_DIM`].
    UnsupportedDimension(usize),
    /// Entry count does not match `dim * dim` (or `dim` for vectors).
    EntryCount {
        dim: usize,
        found: usize,
    },
    NonFinite,
    NotHermitian {
        deviation: f64,
    },
    EigenNotConverged {
        off_diagonal: f64,
    },
    InvalidParameter {
        name: &'static str,
        value: f64,
        bound: &'static str,
    },
    /// Channel 2 only exists on the five-level basis.
    InvalidChannel,
    /// A density matrix failed validation at construction.
    InvalidState {
        invariant: Invariant,
        magnitude: f64,
    },
    IntegrationFailure {
        time: f64,
        invariant: Invariant,
        magnitude: f64,
    },
    /// The leak weight of the final mixture is not below one.
    NonAdiabatic {
        weight: f64,
    },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            Error::UnsupportedDimension(d) => write!(f, "unsupported dimension {d}"),
            Error::EntryCount { dim, found } => {
                write!(f, "{found} entries do not fit dimension {dim}")
            }
            Error::NonFinite => f.write_str("non-finite entry"),
            Error::NotHermitian { deviation } => {
                write!(f, "matrix is not Hermitian (|A - A^H|_F = {deviation:e})")
            }
            Error::EigenNotConverged { off_diagonal } => {
                write!(
                    f,
                    "Jacobi sweeps did not converge (off-diagonal norm {off_diagonal:e})"
                )
            }
            Error::InvalidParameter { name, value, bound } => {
                write!(f, "parameter `{name}` = {value} violates bound {bound}")
            }
            Error::InvalidChannel => f.write_str("channel 2 requires the five-level basis"),
            Error::InvalidState {
                invariant,
                magnitude,
            } => write!(
                f,
                "invalid density matrix: {invariant} violated by {magnitude:e}"
            ),
            Error::IntegrationFailure {
                time,
                invariant,
                magnitude,
            } => write!(
                f,
                "integration failed at t = {time}: {invariant} violated by {magnitude:e}"
            ),
            Error::NonAdiabatic { weight } => {
                write!(f, "leak weight {weight} >= 1, outside the adiabatic regime")
            }
        }
    }
}

impl core::error::Error for Error {}
