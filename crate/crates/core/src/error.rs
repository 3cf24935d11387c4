use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid power-delay profile: {0}")]
    InvalidPdp(String),

    #[error("pilot book is not orthogonal (max deviation {0:e})")]
    NonOrthogonalPilots(f64),

    #[error("duplicate Gold sequence initializer {0}")]
    DuplicateSeed(u32),

    #[error("UE index {index} outside pilot book of {ues} UEs")]
    UeOutOfRange { index: usize, ues: usize },

    #[error("matrix is not positive semi-definite: {0}")]
    NotPsd(String),

    #[error("singular matrix in {0}")]
    Singular(&'static str),

    #[error("all UEs were dropped; power control needs at least one retained UE")]
    EmptyRetainedSet,

    #[error("null statistic sample is degenerate ({0})")]
    DegenerateNull(String),

    #[error("empty sample set")]
    EmptySamples,

    #[error("results do not share a probability grid")]
    MismatchedGrids,

    #[error("trial {index}: {source}")]
    Trial {
        index: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
