//! Command-line front end: config parsing, result files, oracle suites and
//! the worked examples.

pub mod config;
pub mod examples;
pub mod output;
pub mod verify;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::simulation::{run_experiment, ResultRow};

/// Process exit codes.
pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

/// Exit code for an error: config and I/O problems are usage errors.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config { .. } | Error::Io(_) => EXIT_USAGE,
        _ => EXIT_CHECK_FAILED,
    }
}

/// `<dir>/<stem>.agents.n<N>.csv` next to the main output.
pub fn agents_path(out: &Path, n: usize) -> PathBuf {
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("results");
    out.with_file_name(format!("{stem}.agents.n{n}.csv"))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// Writes the main result file and, for CSV with per-agent rows, one
/// per-agent table per agent count. Returns the paths written.
pub fn write_results(rows: &[ResultRow], out: &Path, format: Format) -> Result<Vec<PathBuf>> {
    let mut written = vec![out.to_path_buf()];
    let mut w = create(out)?;
    match format {
        Format::Csv => output::write_csv(rows, &mut w)?,
        Format::Json => output::write_json(rows, &mut w)?,
    }
    w.flush()?;
    if format == Format::Csv {
        let mut ns: Vec<usize> = rows.iter().filter(|r| r.per_agent.is_some()).map(|r| r.n).collect();
        ns.dedup();
        for n in ns {
            let path = agents_path(out, n);
            let mut w = create(&path)?;
            output::write_agents_csv(rows, n, &mut w)?;
            w.flush()?;
            written.push(path);
        }
    }
    Ok(written)
}

/// `run`: parse the config, apply overrides, simulate, write results.
pub fn run_command(
    config_path: &Path,
    out: &Path,
    format: Format,
    seed: Option<u64>,
    replicates: Option<u64>,
) -> Result<Vec<PathBuf>> {
    let text = std::fs::read_to_string(config_path)
        .map_err(|e| Error::Io(format!("{}: {e}", config_path.display())))?;
    let mut cfg = config::parse_config(&text)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(r) = replicates {
        cfg.replicates = r;
    }
    cfg.validate()?;
    let rows = run_experiment(&cfg)?;
    write_results(&rows, out, format)
}
