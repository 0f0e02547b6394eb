use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid problem parameters: {0}")]
    InvalidParams(String),

    #[error("coordinate {x} lies outside the domain [-{a}, {a}]")]
    OutOfDomain { x: f64, a: f64 },

    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    #[error("no circular cap spans [-a, a] with area {area}; feasible interval is (0, {max}]")]
    CapInfeasible { area: f64, max: f64 },

    #[error("invalid mollification: {0}")]
    InvalidMollification(String),

    #[error("constraint gradient is degenerate")]
    DegenerateConstraint,

    #[error("matrix is not positive definite (pivot {0})")]
    NotPositiveDefinite(usize),

    #[error("singular system")]
    Singular,

    #[error("profile csv, row {row}: {message}")]
    Csv { row: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
