use thiserror::Error;

use crate::group::Rank;
use crate::schedules::AlgorithmId;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid process group: {0}")]
    InvalidGroup(String),

    #[error("{algorithm} requires an even number of processes, got {p}")]
    OddProcessCount { algorithm: AlgorithmId, p: usize },

    #[error("{algorithm} requires a power-of-two number of processes, got {p}")]
    NonPowerOfTwo { algorithm: AlgorithmId, p: usize },

    #[error("root {root} is outside a group of {p} processes")]
    RootOutOfRange { root: Rank, p: usize },

    #[error("topology offers {slots} slots but {p} ranks must be placed")]
    InsufficientSlots { slots: usize, p: usize },

    #[error("invalid topology: {0}")]
    InvalidTopology(String),

    #[error("invalid mapping: {0}")]
    InvalidMapping(String),

    #[error("message of {m} bytes does not split into {p} equal blocks")]
    IndivisibleMessage { m: u64, p: usize },

    #[error("unknown algorithm `{0}`")]
    UnknownAlgorithm(String),

    #[error("config: {0}")]
    Config(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
