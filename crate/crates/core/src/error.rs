use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("site {site} out of range for {n_sites} sites")]
    SiteOutOfRange { site: usize, n_sites: usize },

    #[error("matrix is not Hermitian (defect {defect:e})")]
    NotHermitian { defect: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("operator dimension {0} is not twice a bath dimension")]
    OddDimension(usize),

    #[error("bath must contain at least one spin")]
    EmptyBath,

    #[error("bath of {0} spins exceeds the supported maximum of {max}", max = crate::model::MAX_BATH_SPINS)]
    BathTooLarge(usize),

    #[error("sequence duration must be positive and finite, got {0}")]
    InvalidDuration(f64),

    #[error("invalid pulse schedule: {0}")]
    InvalidSchedule(String),

    #[error("invalid coupling set: {0}")]
    InvalidCouplings(String),

    #[error("product bath requires {expected} spin directions, got {got}")]
    MissingDirections { expected: usize, got: usize },

    #[error("invalid sweep specification: {0}")]
    InvalidSweep(String),

    #[error("fit window holds {found} usable points (need {needed}); achieved d range [{d_min:e}, {d_max:e}]")]
    WindowFailure {
        found: usize,
        needed: usize,
        d_min: f64,
        d_max: f64,
    },

    #[error("fit quality r² = {r_squared:.6} below {threshold}")]
    PoorFit { r_squared: f64, threshold: f64 },

    #[error("degenerate fit window: {0}")]
    DegenerateFit(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
