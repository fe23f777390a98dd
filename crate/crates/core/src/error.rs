use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid scenario: {0}")]
    InvalidConfig(String),

    #[error("unknown scenario '{0}' (valid presets: S1, S2, S3)")]
    UnknownPreset(String),

    #[error("cannot read channel file {path}: {source}")]
    ChannelFileIo {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed channel file (line {line}): {message}")]
    ChannelFileFormat { line: usize, message: String },

    #[error("channel dimension mismatch (line {line}): {message}")]
    DimensionMismatch { line: usize, message: String },

    #[error("non-finite channel entry at line {line}")]
    NonFiniteEntry { line: usize },

    #[error("{users} users cannot be split into {groups} equal groups")]
    IndivisibleGroups { users: usize, groups: usize },

    #[error("diagonal block of user position {position} on subcarrier {subcarrier} is rank deficient")]
    RankDeficientBlock { subcarrier: usize, position: usize },

    #[error("effective channel is singular; receiver cannot invert it")]
    SingularReceiver,

    #[error("assignment infeasible: users {blocking:?} cannot all meet their quotas")]
    Infeasible { blocking: Vec<usize> },

    #[error("instance too large for exhaustive enumeration ({subcarriers} subcarriers, {demand} total quota)")]
    InstanceTooLarge { subcarriers: usize, demand: usize },

    #[error("config file error: {0}")]
    ConfigFile(String),

    #[error("cannot write {path}: {source}")]
    Output {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}
