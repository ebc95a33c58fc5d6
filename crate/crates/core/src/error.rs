use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("unsupported dimension n={0} (expected 2 or 3)")]
    UnsupportedDimension(usize),
    #[error("operation not available for n={0}")]
    NotImplementedForDimension(usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
    #[error("chart node count {q} too small for band limit {l}")]
    ChartTooCoarse { q: usize, l: usize },
    #[error("sampling resolution {resolution} below 2*L for L={l}")]
    Aliasing { resolution: usize, l: usize },
    #[error("vector has zero length")]
    ZeroVector,
    #[error("resonant component {magnitude:e} at degree {degree}")]
    Resonance { degree: usize, magnitude: f64 },
    #[error("graph field exceeds the smallness bound: {0:e}")]
    GraphTooLarge(f64),
    #[error("field is not flagged zero-linear-part")]
    NotCentered,
    #[error("direction is not a grid representative")]
    NotOnGrid,
    #[error("Newton iteration did not converge (residual {residual:e})")]
    NoConvergence { residual: f64 },
    #[error("expected {expected} intersection points, found {found}")]
    IntersectionCount { expected: usize, found: usize },
    #[error("directions coincide")]
    CoincidentDirections,
    #[error("point too close to the pole of the equator")]
    NearPole,
    #[error("degenerate tangent space")]
    DegenerateTangent,
    #[error("matrix numerically singular (smallest singular value {0:e})")]
    Singular(f64),
    #[error("condition number {0:e} above limit")]
    IllConditioned(f64),
    #[error("tensor not positive definite (eigenvalue {0:e})")]
    NotPositiveDefinite(f64),
    #[error("solver diverged or left the admissible regime at iteration {0}")]
    Diverged(usize),
    #[error("dimension mismatch: {0}")]
    Mismatch(&'static str),
}

pub type Result<T> = core::result::Result<T, Error>;
