//! IO companion of the `prunepool-core` engine: subcommand surface,
//! worker-aware execution, and byte-stable CSV/JSON rendering.

pub mod cli;
pub mod exec;
pub mod format;
