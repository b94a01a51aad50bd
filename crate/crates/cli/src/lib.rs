//! Configuration, run orchestration and artifact writers behind the `cbpdg`
//! binary.

pub mod artifacts;
pub mod config;
pub mod driver;

pub use config::{parse_config, AuditCadence, RunConfig};
pub use driver::{audit_bounds, convergence, run, ConvergenceRow, RunSummary};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// 1 for anything wrong with the request, 2 for failures during compute.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 1,
            CliError::Numerical(_) => 2,
        }
    }
}

impl From<cbpdg::Error> for CliError {
    fn from(e: cbpdg::Error) -> Self {
        match e {
            cbpdg::Error::Config(_) | cbpdg::Error::Usage(_) => CliError::Config(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

/// Size the global rayon pool from `CBPDG_WORKERS` (unset: all cores).
pub fn init_workers(value: Option<&str>) -> Result<(), CliError> {
    let Some(v) = value else { return Ok(()) };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n >= 1)
        .ok_or_else(|| CliError::Config(format!("CBPDG_WORKERS must be an integer >= 1, got `{v}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(format!("cannot size worker pool: {e}")))
}
