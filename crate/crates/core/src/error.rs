use std::fmt;

#[derive(Debug)]
pub enum Error {
    /// A profile needs at least three nodes (two cells).
    ProfileTooShort { len: usize },
    /// Profile values violate the feasible class (range, symmetry or convexity).
    InvalidProfile(String),
    /// Mesh construction was asked for a domain whose bottom degenerates (min h = -1).
    DegenerateDomain,
    /// A grid function does not match the mesh it is evaluated on.
    SizeMismatch { expected: usize, got: usize },
    /// Node index outside the valid range of a profile.
    NodeOutOfRange { index: usize, len: usize },
    /// Chord endpoints must satisfy t1 < t2, both interior.
    InvalidChord { t1: usize, t2: usize },
    /// The inner Newton solver did not reach the gradient tolerance.
    InnerNoConvergence { residual: f64, iterations: usize },
    /// An inner solve failed while scanning profiles; the offending profile is attached.
    OuterSolveFailed { l: f64, profile: Vec<f64>, source: Box<Error> },
    /// The degenerate marker (h = -1) cannot be evaluated as a graph domain.
    DegenerateProfileRejected,
    /// threshold_bisect was given endpoints on the wrong sides of the transition.
    InvalidBracket { detail: String },
    /// Polyline resolution too coarse for the space curve construction.
    CurveTooCoarse { points_per_arc: usize },
    /// No catenoid exists for this ring separation.
    NoCatenoidRoot { separation: f64 },
    Io(std::io::Error),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::ProfileTooShort { len } => {
                write!(f, "profile needs at least 3 nodes, got {len}")
            }
            Error::InvalidProfile(msg) => write!(f, "invalid profile: {msg}"),
            Error::DegenerateDomain => write!(f, "degenerate domain: min h = -1"),
            Error::SizeMismatch { expected, got } => {
                write!(f, "size mismatch: expected {expected} values, got {got}")
            }
            Error::NodeOutOfRange { index, len } => {
                write!(f, "node index {index} out of range for {len} nodes")
            }
            Error::InvalidChord { t1, t2 } => {
                write!(f, "chord endpoints must satisfy t1 < t2, got ({t1}, {t2})")
            }
            Error::InnerNoConvergence { residual, iterations } => write!(
                f,
                "inner solver stopped after {iterations} iterations with residual {residual:.3e}"
            ),
            Error::OuterSolveFailed { l, source, .. } => {
                write!(f, "profile search failed at l = {l}: {source}")
            }
            Error::DegenerateProfileRejected => {
                write!(f, "degenerate profile marker rejected: no graph domain to solve on")
            }
            Error::InvalidBracket { detail } => write!(f, "invalid bisection bracket: {detail}"),
            Error::CurveTooCoarse { points_per_arc } => {
                write!(f, "need at least 8 points per arc, got {points_per_arc}")
            }
            Error::NoCatenoidRoot { separation } => {
                write!(f, "no catenoid spans unit rings at separation {separation}")
            }
            Error::Io(e) => write!(f, "io error: {e}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::OuterSolveFailed { source, .. } => Some(source),
            Error::Io(e) => Some(e),
            _ => None,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e)
    }
}

pub type Result<T> = std::result::Result<T, Error>;
