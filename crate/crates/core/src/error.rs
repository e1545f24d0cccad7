use std::path::PathBuf;

/// Errors produced by the simulator.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A configuration value violates its constraint.
    #[error("invalid `{key}`: expected {constraint}")]
    Validation { key: String, constraint: String },

    /// A function was evaluated outside its domain of definition.
    #[error("domain error: {0}")]
    Domain(String),

    /// The requested energy does not lie strictly inside the well.
    #[error("no barrier at I = {bias}: energy {energy} is outside ({u_min}, {u_top})")]
    NoBarrier {
        bias: f64,
        energy: f64,
        u_min: f64,
        u_top: f64,
    },

    /// Imaginary-time relaxation did not settle.
    #[error("ground state did not converge after {iterations} iterations (last energy {last_energy})")]
    NonConvergence { iterations: usize, last_energy: f64 },

    /// Amplitude reached the edge of the computational grid.
    #[error("grid too small: edge probability {edge_norm:.3e} at t = {t} (enlarge grid.phi_hi or grid.n_points)")]
    GridTooSmall { t: f64, edge_norm: f64 },

    /// No plateau of the decay rate was found in the absorber-strength scan.
    #[error("beta calibration failed: no plateau found\n{table}")]
    Calibration { table: String },

    #[error("{0}")]
    Config(String),

    #[error("I/O error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn validation(key: &str, constraint: &str) -> Self {
        Error::Validation {
            key: key.to_string(),
            constraint: constraint.to_string(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for this error: 1 validation, 2 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation { .. } | Error::Config(_) | Error::Io { .. } => 1,
            Error::Domain(_)
            | Error::NoBarrier { .. }
            | Error::NonConvergence { .. }
            | Error::GridTooSmall { .. }
            | Error::Calibration { .. } => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
