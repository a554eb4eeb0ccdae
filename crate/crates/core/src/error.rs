use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("array must have at least one element per axis, got {n_x}x{n_y}")]
    EmptyArray { n_x: usize, n_y: usize },
    #[error("spacing must lie in (0, 0.5] wavelengths, got {0}")]
    Spacing(f64),
    #[error("wavelength must be positive and finite, got {0}")]
    Wavelength(f64),
    #[error("reference position must be finite, got {0:?}")]
    Reference([f64; 3]),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChannelError {
    #[error("array coordinates are not planar: z spread {spread:e}")]
    NonPlanar { spread: f64 },
    #[error("CSI error level xi must lie in [0, 1], got {0}")]
    CsiError(f64),
    #[error("shape mismatch in {what}: expected {expected:?}, got {got:?}")]
    Shape {
        what: &'static str,
        expected: (usize, usize),
        got: (usize, usize),
    },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BeamformingError {
    #[error(
        "null space is empty: {live} active transmit directions, interference rank {rank}"
    )]
    InfeasibleNullSpace { live: usize, rank: usize },
    #[error("effective channel norm {norm:e} is numerically zero")]
    DegenerateChannel { norm: f64 },
    #[error(transparent)]
    Channel(#[from] ChannelError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PowerError {
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("no strictly feasible starting point: {0}")]
    Infeasible(String),
    #[error("barrier solver hit {0} Newton iterations without converging")]
    MaxIterations(usize),
    #[error("SCA objective decreased from {previous} to {current}")]
    NonMonotone { previous: f64, current: f64 },
    #[error("grid search supports at most 3 users, got {0}")]
    TooManyUsers(usize),
    #[error("fraction must lie in [0, 1], got {0}")]
    Fraction(f64),
}

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid configuration parameter `{param}`: {reason}")]
    Config { param: String, reason: String },
    #[error("trial {trial}: {source}")]
    Beamforming {
        trial: usize,
        #[source]
        source: BeamformingError,
    },
    #[error("trial {trial}: {source}")]
    Power {
        trial: usize,
        #[source]
        source: PowerError,
    },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("serialization error: {0}")]
    Serialize(String),
}

impl ExperimentError {
    pub(crate) fn config(param: &str, reason: impl Into<String>) -> Self {
        Self::Config {
            param: param.to_string(),
            reason: reason.into(),
        }
    }

    /// True for errors that stem from an infeasible scenario rather than bad input.
    pub fn is_infeasible(&self) -> bool {
        matches!(
            self,
            Self::Beamforming { .. }
                | Self::Power {
                    source: PowerError::Infeasible(_),
                    ..
                }
        )
    }
}
