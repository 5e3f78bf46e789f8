//! Command-line front end for `memoryflow`.
//!
//! Every subcommand is a pure function from a resolved configuration to a
//! set of CSV/JSON files ([`commands::execute`]); the binary only parses
//! flags and writes the files. Rows are sorted before they are written, so
//! the output bytes do not depend on the number of worker threads.

pub mod commands;
pub mod config;
pub mod error;
pub mod format;

use std::path::Path;

pub use commands::{execute, manifest, RunOutput};
pub use config::{Command, Preset, Resolved, RunConfig};
pub use error::{CliError, CliResult};

/// Runs `command` inside a pool of `threads` workers (all cores if `None`).
pub fn run_with_threads(command: Command, cfg: &Resolved, threads: Option<usize>) -> CliResult<RunOutput> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n.max(1));
    }
    let pool = builder.build().map_err(|e| CliError::Usage(format!("threads: {e}")))?;
    pool.install(|| execute(command, cfg))
}

/// Writes the outputs and `<command>.manifest.json` into `dir`.
pub fn write_outputs(dir: &Path, command: Command, cfg: &Resolved, out: &RunOutput) -> CliResult<()> {
    std::fs::create_dir_all(dir)?;
    for (name, bytes) in &out.files {
        std::fs::write(dir.join(name), bytes)?;
    }
    std::fs::write(dir.join(format!("{}.manifest.json", command.name())), manifest(command, cfg, out)?)?;
    Ok(())
}
