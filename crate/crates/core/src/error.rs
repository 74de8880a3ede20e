use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid configuration `{key}`: {reason}")]
    Config { key: &'static str, reason: String },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("channel of user {user} has rank below the requested {streams} streams")]
    DegenerateChannel { user: usize, streams: usize },

    #[error("waterfilling has no usable stream: every gain is zero")]
    NoUsableStream,

    #[error("unbalanced assignment is infeasible: {rows} rows cannot cover {cols} columns")]
    InfeasibleAssignment { rows: usize, cols: usize },

    #[error("assignment cost at ({row}, {col}) is negative or not finite")]
    InvalidCost { row: usize, col: usize },

    #[error("brute-force assignment oracle refuses {rows} rows (limit {limit})")]
    OracleTooLarge { rows: usize, limit: usize },

    #[error("antenna reallocation infeasible: {movable} movable antennas for {empty} empty RF chains")]
    InfeasibleReallocation { movable: usize, empty: usize },

    #[error("null space of the other users' equivalent channels is empty for user {user}")]
    InterferenceUncancellable { user: usize },

    #[error("beamformer of user {user} vanished before power normalization")]
    DegenerateProjection { user: usize },

    #[error("noise power must be positive")]
    InvalidNoise,

    #[error("interference-plus-noise covariance of user {user} is not positive definite")]
    SingularCovariance { user: usize },

    #[error("singular value decomposition did not converge")]
    SvdNoConvergence,

    #[error("channel file, line {line}: {reason}")]
    ChannelFormat { line: usize, reason: String },

    #[error("channel file i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
