use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {msg}")]
    Format { path: PathBuf, line: usize, msg: String },
    #[error("{0} already exists and differs from what would be written; pass --force to overwrite")]
    Exists(PathBuf),
    #[error(transparent)]
    Core(#[from] steplearn::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// 2 for invalid input, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        use steplearn::Error as E;
        match self {
            CliError::Validation(_) | CliError::Format { .. } | CliError::Exists(_) => 2,
            CliError::Core(
                E::OutOfGrid { .. }
                | E::BinOutOfRange { .. }
                | E::InvalidGrid(_)
                | E::Domain(_)
                | E::Validation(_)
                | E::NotQuasiconvex { .. }
                | E::NonUnique { .. }
                | E::NormGate { .. }
                | E::Shape(_),
            ) => 2,
            _ => 1,
        }
    }
}
