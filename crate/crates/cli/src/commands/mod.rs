//! Subcommand implementations.

pub mod augment;
pub mod diag;
pub mod encode;
pub mod eval;
pub mod fuse;

/// Per-frame failures collected by a corpus pass: (stem, error message).
pub type FrameFailures = Vec<(String, String)>;

pub fn report_failures(command: &str, failures: &FrameFailures) {
    for (stem, err) in failures {
        eprintln!("{command}: frame {stem}: {err}");
    }
    if !failures.is_empty() {
        eprintln!("{command}: {} frame(s) failed", failures.len());
    }
}
