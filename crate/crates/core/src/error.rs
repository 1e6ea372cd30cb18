use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse failure class, used by the CLI to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Numeric,
    Physics,
    Io,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::Config => 2,
            ErrorKind::Numeric => 3,
            ErrorKind::Physics => 4,
            ErrorKind::Io => 1,
        }
    }
}

/// One problem found while validating a scenario file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigIssue {
    /// Dotted key path, e.g. `grid.n`.
    pub key: String,
    pub reason: String,
}

impl std::fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.key, self.reason)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("the sigma3 metric is only defined for two-component fields")]
    InvalidMetric,
    #[error("momentum {0:?} is not on the grid's momentum lattice")]
    OffLattice(Vec<f64>),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("non-finite value in field after step {step} (t = {time}); time step too large or mask misuse")]
    NonFinite { step: usize, time: f64 },
    #[error("typical energy must be nonzero")]
    ZeroEnergy,
    #[error("singular block in banded solve at ladder site {0}")]
    SingularSystem(usize),
    #[error("population {population:.3e} within two sites of the ladder cutoff exceeds 1e-8")]
    CutoffOverflow { population: f64 },
    #[error("no oscillation detected in transfer probability")]
    NoOscillation,
    #[error("Bragg condition: {0}")]
    Bragg(String),
    #[error("over-the-barrier regime: no classically forbidden region for p_y = {p_y}, p_z = {p_z}")]
    OverTheBarrier { p_y: f64, p_z: f64 },
    #[error("no classically allowed region at the core for p_y = {p_y}, p_z = {p_z}")]
    NoBoundRegion { p_y: f64, p_z: f64 },
    #[error("the forbidden region never closes (no tunnel exit) for p_y = {p_y}, p_z = {p_z}")]
    NoExit { p_y: f64, p_z: f64 },
    #[error("root finder failed: {0}")]
    RootFinder(String),
    #[error("quadrature did not converge: {0}")]
    Quadrature(String),
    #[error("minimizer hit the scan boundary at p_z = {0}; widen the scan range")]
    ScanBoundary(f64),
    #[error("invalid configuration:\n{}", .0.iter().map(|i| format!("  {i}")).collect::<Vec<_>>().join("\n"))]
    Config(Vec<ConfigIssue>),
    #[error("malformed snapshot: {0}")]
    Snapshot(String),
    #[error("allocation of {0} bytes failed")]
    Allocation(usize),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config(vec![ConfigIssue {
            key: key.into(),
            reason: reason.into(),
        }])
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Config(_) | Error::InvalidParameter(_) | Error::InvalidGrid(_) => {
                ErrorKind::Config
            }
            Error::GridMismatch | Error::InvalidMetric | Error::OffLattice(_) => ErrorKind::Config,
            Error::NonFinite { .. }
            | Error::SingularSystem(_)
            | Error::CutoffOverflow { .. }
            | Error::RootFinder(_)
            | Error::Quadrature(_)
            | Error::NoOscillation
            | Error::ScanBoundary(_)
            | Error::Allocation(_) => ErrorKind::Numeric,
            Error::ZeroEnergy
            | Error::Bragg(_)
            | Error::OverTheBarrier { .. }
            | Error::NoBoundRegion { .. }
            | Error::NoExit { .. } => ErrorKind::Physics,
            Error::Snapshot(_) | Error::Io { .. } => ErrorKind::Io,
            Error::Context { source, .. } => source.kind(),
        }
    }

    /// Innermost error, with any scenario context stripped.
    pub fn root(&self) -> &Error {
        match self {
            Error::Context { source, .. } => source.root(),
            other => other,
        }
    }
}
