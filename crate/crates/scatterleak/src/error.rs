use std::io;
use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("I/O error at byte offset {offset}: {source}")]
    Io { offset: u64, source: io::Error },

    #[error("{}: {source}", path.display())]
    File { path: PathBuf, source: io::Error },

    #[error("not a trace file: {0}")]
    Format(String),

    #[error("unsupported trace file version {0}")]
    Version(u16),

    #[error("corrupt trace file: header implies {expected} bytes, found {actual}")]
    Corruption { expected: u64, actual: u64 },

    #[error("config: {0}")]
    Config(String),

    #[error("{stage}: {source}")]
    Pipeline {
        stage: String,
        source: scatterleak_core::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Core(#[from] scatterleak_core::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn file(path: impl Into<PathBuf>) -> impl FnOnce(io::Error) -> Error {
        let path = path.into();
        move |source| Error::File { path, source }
    }

    /// Process exit status: 2 config, 3 data or format, 4 pipeline.
    /// Usage errors (1) are raised by argument parsing before any of these.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Io { .. }
            | Error::File { .. }
            | Error::Format(_)
            | Error::Version(_)
            | Error::Corruption { .. }
            | Error::Csv(_) => 3,
            Error::Pipeline { .. } | Error::Core(_) => 4,
        }
    }
}

pub(crate) trait StageExt<T> {
    fn stage(self, stage: impl FnOnce() -> String) -> Result<T>;
}

impl<T> StageExt<T> for scatterleak_core::Result<T> {
    fn stage(self, stage: impl FnOnce() -> String) -> Result<T> {
        self.map_err(|source| Error::Pipeline { stage: stage(), source })
    }
}
