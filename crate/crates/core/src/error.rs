use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("mask dimensions must be positive, got {width}x{height}")]
    InvalidDimensions { width: usize, height: usize },

    #[error("mask has {actual} values but {expected} were expected")]
    BitCountMismatch { expected: usize, actual: usize },

    #[error("mask contains no object pixels")]
    EmptyMask,

    #[error("invalid structuring element: {0}")]
    InvalidStructuringElement(&'static str),

    #[error("object boundary has {boundary_pixels} pixels, at least 8 are required")]
    DegenerateObject { boundary_pixels: usize },

    #[error("silhouette has zero horizontal extent")]
    DegenerateSilhouette,

    #[error("curve parameterization is singular at sample {index}")]
    SingularPoint { index: usize },

    #[error("lobe chord endpoints coincide")]
    DegenerateChord,

    #[error("invalid scale schedule: {0}")]
    InvalidSchedule(&'static str),

    #[error("scale schedules differ (target has {target_rows} rows, model has {model_rows})")]
    ScheduleMismatch { target_rows: usize, model_rows: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
}
