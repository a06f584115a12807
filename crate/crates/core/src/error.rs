use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("non-finite input: {0}")]
    NonFinite(&'static str),

    #[error("grid too small: {h}x{w} (need at least {min}x{min})")]
    GridTooSmall { h: usize, w: usize, min: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("origin-not-enclosed: polar origin lies outside the contour polygon")]
    OriginNotEnclosed,

    #[error("ray at angle {angle} missed the contour polygon")]
    RayMiss { angle: f64 },

    #[error("radius must be positive, got {value} at index {index}")]
    NonPositiveRadius { index: usize, value: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("singular or ill-conditioned system (condition estimate {condition:e})")]
    Singular { condition: f64 },

    #[error("diverged: loss {loss} exceeded 10x the initial loss {initial}")]
    Diverged { loss: f64, initial: f64 },

    #[error("inversion failed for {failed} of {total} pixels")]
    InversionFailed { failed: usize, total: usize },

    #[error("empty mask")]
    EmptyMask,

    #[error("degenerate alignment: predicted map has zero variance on the mask")]
    DegenerateAlignment,

    #[error("image too small: {height}x{width}, minimum side is {min}")]
    ImageTooSmall {
        height: usize,
        width: usize,
        min: usize,
    },
}
