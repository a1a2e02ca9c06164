use std::path::PathBuf;

/// Errors raised by the simulator and its command-line front end.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("codebook with B={bits} bits exceeds the memory guard (B <= {max_bits})")]
    ResourceLimit { bits: u32, max_bits: u32 },

    #[error("degenerate statistics codeword: ||R^(1/2) w|| vanished on {attempts} consecutive draws")]
    DegenerateDraw { attempts: u32 },

    #[error("quantization error {error:e} is too small to define a residual direction")]
    DegenerateDecomposition { error: f64 },

    #[error("singular channel matrix (condition estimate {condition:e})")]
    SingularChannel { condition: f64 },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{0}")]
    Usage(String),
}

impl Error {
    /// Process exit status used by the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) | Error::InvalidArgument(_) => 2,
            Error::ResourceLimit { .. } => 3,
            Error::DegenerateDraw { .. }
            | Error::DegenerateDecomposition { .. }
            | Error::SingularChannel { .. }
            | Error::Numeric(_) => 4,
            Error::Io { .. } => 1,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
