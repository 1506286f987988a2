//! Experiment harness around the `linlearn` library: configuration
//! files, instance generation, Ψ-table/reduction/learning commands, and
//! machine-readable result output.  The binary in `src/bin/linlearn.rs`
//! is a thin clap wrapper over [`commands`].

pub mod commands;
pub mod config;
