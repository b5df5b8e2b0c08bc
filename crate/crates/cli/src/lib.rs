//! Batch pipeline driver: wires the library's parsers, fusion, encoders,
//! augmentation, and evaluation into reproducible commands over dataset
//! directories.
//!
//! Every command is deterministic given (config, seed): per-frame work uses
//! a seed derived from (global seed, frame stem), manifests carry content
//! checksums, and input directories are never written to.

pub mod commands;
pub mod config;
pub mod dataset;
pub mod diag;
pub mod selftest;

/// Process exit codes: 0 success, 1 any frame failure, 2 config error.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitCode {
    Success,
    FrameFailures,
    ConfigError,
}

impl ExitCode {
    pub fn code(self) -> i32 {
        match self {
            ExitCode::Success => 0,
            ExitCode::FrameFailures => 1,
            ExitCode::ConfigError => 2,
        }
    }
}
