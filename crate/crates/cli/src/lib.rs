//! Command-line driver for the `imatch-core` verifiers and dynamics suites.
//!
//! Exit codes: 0 when every check passes, 2 for usage or configuration
//! errors (including missing inputs), 3 when a run produced a finding, 1 for
//! I/O failures.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;
use thiserror::Error;

pub mod commands;
pub mod config;
pub mod figure;

pub use config::{DynamicsConfig, RunConfig};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub const EXPLORE_FILE: &str = "explore.json";
pub const LEMMA_FILE: &str = "lemma.json";
pub const DYNAMICS_FILE: &str = "dynamics.json";
pub const TRACES_FILE: &str = "traces.csv";
pub const FINAL_MATCHINGS_FILE: &str = "final_matchings.json";
pub const FIGURE_FILE: &str = "figure.svg";
pub const REPORT_FILE: &str = "report.json";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{context}: {source}")]
    Io { context: String, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io { .. } => 1,
        }
    }

    pub(crate) fn io(context: impl Into<String>) -> impl FnOnce(std::io::Error) -> CliError {
        let context = context.into();
        move |source| CliError::Io { context, source }
    }
}

/// Result of a command that ran to completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Clean,
    Finding,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Clean => 0,
            Status::Finding => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Status::Clean => "clean",
            Status::Finding => "finding",
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "imatch", version, about = "Experiments on the graph G and matching dynamics")]
pub struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// α as `p,q,d,r` for (p + q√d) / r.
    #[arg(long, global = true)]
    pub alpha: Option<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Walk the component of one vertex and classify a random sample.
    Explore {
        /// Exact point: `3/4` or `u,v` for u + vα.
        #[arg(long)]
        point: String,
        #[arg(long, default_value = "I")]
        side: String,
        /// Walk budget; defaults to `bfs_budget`.
        #[arg(long)]
        budget: Option<usize>,
    },
    /// Check the 2|b| distance bound over a ball of group elements.
    VerifyLemma,
    /// Run the random and bridge matching-dynamics suites.
    Dynamics,
    /// Draw the edge set of G as an SVG polygon.
    Figure,
    /// Merge the outputs of the other commands.
    Report,
}

impl Cli {
    /// Defaults, then the config file, then flags.
    pub fn resolve_config(&self) -> Result<RunConfig, CliError> {
        let mut config = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if let Some(out) = &self.out {
            config.output_dir = out.clone();
        }
        if let Some(alpha) = &self.alpha {
            config.alpha = alpha.parse().map_err(|e| CliError::Usage(format!("--alpha: {e}")))?;
        }
        config.validate()?;
        Ok(config)
    }
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(status) => status.exit_code(),
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: &Cli) -> Result<Status, CliError> {
    let config = cli.resolve_config()?;
    match &cli.command {
        Command::Explore { point, side, budget } => commands::explore(&config, point, side, *budget),
        Command::VerifyLemma => commands::verify_lemma(&config),
        Command::Dynamics => commands::dynamics(&config),
        Command::Figure => commands::figure(&config),
        Command::Report => commands::report(&config),
    }
}

/// Echoed at the top of every JSON output.
#[derive(Debug, Serialize)]
pub struct Header<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub config: &'a RunConfig,
}

impl<'a> Header<'a> {
    pub fn new(command: &'static str, config: &'a RunConfig) -> Self {
        Header {
            tool: "imatch",
            version: VERSION,
            command,
            config,
        }
    }
}

/// Writes `bytes` to `dir/name` through a temporary file in the same
/// directory, so readers never see a partial file.
pub fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(dir).map_err(CliError::io(format!("creating {}", dir.display())))?;
    let target = dir.join(name);
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(CliError::io("creating temporary file"))?;
    tmp.write_all(bytes)
        .map_err(CliError::io(format!("writing {}", target.display())))?;
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        tmp.as_file()
            .set_permissions(std::fs::Permissions::from_mode(0o644))
            .map_err(CliError::io(format!("setting permissions on {}", target.display())))?;
    }
    tmp.persist(&target).map_err(|e| CliError::Io {
        context: format!("renaming to {}", target.display()),
        source: e.error,
    })?;
    Ok(target)
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<PathBuf, CliError> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("report types serialize");
    bytes.push(b'\n');
    write_atomic(dir, name, &bytes)
}
