//! Batch front end: `plan`, `crop`, `perturb`, `augment`, `score`, `rover`.
//!
//! Every command is deterministic given its inputs, config and seed. Work
//! fans out over segments/clips/utterances on a rayon pool sized by
//! `--jobs`; manifests are sorted, and every output file or clip directory
//! appears atomically.

pub mod app;
pub mod commands;
pub mod fsutil;

use std::process::ExitCode;

use thiserror::Error;

/// Process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Success,
    Usage,
    PartialFailure,
    TotalFailure,
}

impl Status {
    pub fn code(self) -> u8 {
        match self {
            Self::Success => 0,
            Self::Usage => 1,
            Self::PartialFailure => 2,
            Self::TotalFailure => 3,
        }
    }

    /// Status for a batch with `failed` of `total` items failing.
    pub fn from_counts(failed: usize, total: usize) -> Self {
        match (failed, total) {
            (0, _) => Self::Success,
            (f, t) if f >= t => Self::TotalFailure,
            _ => Self::PartialFailure,
        }
    }
}

impl From<Status> for ExitCode {
    fn from(s: Status) -> Self {
        ExitCode::from(s.code())
    }
}

/// Bad invocation: missing paths, unreadable or invalid config.
#[derive(Debug, Error)]
#[error("{0}")]
pub struct UsageError(pub String);

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}
