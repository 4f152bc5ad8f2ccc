use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("support function is not convex: radius of curvature {w:.3e} at theta = {theta:.6}")]
    NotConvex { theta: f64, w: f64 },

    #[error("degenerate support function: mean term c0 = {c0} must be positive")]
    DegenerateSupport { c0: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("random body generation failed after {attempts} attempts")]
    GenerationFailed { attempts: usize },

    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),

    #[error("body is needle-like (aspect ratio {aspect:.2} > {limit})")]
    NeedleBody { aspect: f64, limit: f64 },

    #[error(
        "linear solve failed after {iterations} iterations (relative residual {residual:.3e})"
    )]
    SolveFailed { iterations: usize, residual: f64 },

    #[error("point ({x:.6}, {y:.6}) is too close to the boundary for the interpolation stencil")]
    TooCloseToBoundary { x: f64, y: f64 },

    #[error("torsional rigidity routes disagree: energy {energy:.6e}, mass {mass:.6e}, boundary {boundary:.6e}")]
    CrossCheckFailed {
        energy: f64,
        mass: f64,
        boundary: f64,
    },

    #[error("path leaves the convex cone at t = {t} (min radius of curvature {w_min:.3e})")]
    LeavesConvexCone { t: f64, w_min: f64 },

    #[error("mean-zero constraint not met: relative residual {residual:.3e}")]
    ConstraintNotMet { residual: f64 },

    #[error("sphere quadrature under-resolved: {0}")]
    QuadratureUnderResolved(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// Stable variant name for structured reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::NotConvex { .. } => "NotConvex",
            Error::DegenerateSupport { .. } => "DegenerateSupport",
            Error::InvalidArgument(_) => "InvalidArgument",
            Error::GenerationFailed { .. } => "GenerationFailed",
            Error::GridTooCoarse(_) => "GridTooCoarse",
            Error::NeedleBody { .. } => "NeedleBody",
            Error::SolveFailed { .. } => "SolveFailed",
            Error::TooCloseToBoundary { .. } => "TooCloseToBoundary",
            Error::CrossCheckFailed { .. } => "CrossCheckFailed",
            Error::LeavesConvexCone { .. } => "LeavesConvexCone",
            Error::ConstraintNotMet { .. } => "ConstraintNotMet",
            Error::QuadratureUnderResolved(_) => "QuadratureUnderResolved",
            Error::Parse(_) => "ParseError",
            Error::Io(_) => "IoError",
        }
    }

    /// Errors caused by the user's input rather than by a computation.
    pub fn is_configuration(&self) -> bool {
        matches!(
            self,
            Error::InvalidArgument(_)
                | Error::Parse(_)
                | Error::Io(_)
                | Error::NotConvex { .. }
                | Error::DegenerateSupport { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
