//! Command-line front end for `realpos-core`.
//!
//! Exit codes: 0 success, 1 suite failure, 2 bad input or flags, 3 numeric
//! failure, 4 violated precondition (including cone membership), 5 method
//! disagreement.

pub mod commands;
pub mod io;
pub mod plot;
pub mod suites;

use realpos_core::report::VerificationReport;
use realpos_core::{Error, Tolerances};
use serde::{Deserialize, Serialize};

pub const EXIT_OK: i32 = 0;
pub const EXIT_SUITE_FAILURE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_PRECONDITION: i32 = 4;
pub const EXIT_DISAGREEMENT: i32 = 5;

/// Overrides `eq_tol` for every command.
pub const TOL_ENV: &str = "REALPOS_DEFAULT_TOL";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Core(#[from] Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => EXIT_INPUT,
            CliError::Core(e) => match e {
                Error::Input(_) | Error::Unsupported(_) => EXIT_INPUT,
                Error::Numeric(_) => EXIT_NUMERIC,
                Error::NotInCone { .. } | Error::Precondition(_) => EXIT_PRECONDITION,
                Error::MethodDisagreement { .. } => EXIT_DISAGREEMENT,
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub schema_version: String,
    pub command: String,
    pub seed: Option<u64>,
    pub tolerances: Tolerances,
    pub instances: Vec<VerificationReport>,
}

impl ReportFile {
    pub fn new(command: impl Into<String>, seed: Option<u64>, tolerances: Tolerances) -> Self {
        ReportFile {
            schema_version: "1".into(),
            command: command.into(),
            seed,
            tolerances,
            instances: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.instances.iter().all(|r| r.passed)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }
}

/// Defaults, then `REALPOS_DEFAULT_TOL`, then `--tol name=value` flags in
/// order.
pub fn resolve_tolerances(env: Option<&str>, flags: &[String]) -> Result<Tolerances, CliError> {
    let mut tol = Tolerances::default();
    if let Some(v) = env {
        let x: f64 = v
            .trim()
            .parse()
            .map_err(|_| CliError::Input(format!("{TOL_ENV}='{v}' is not a number")))?;
        tol.set("eq_tol", x)?;
    }
    for f in flags {
        let (name, value) = f
            .split_once('=')
            .ok_or_else(|| CliError::Input(format!("--tol expects name=value, got '{f}'")))?;
        let x: f64 = value
            .trim()
            .parse()
            .map_err(|_| CliError::Input(format!("--tol {name}: '{value}' is not a number")))?;
        tol.set(name.trim(), x)?;
    }
    Ok(tol)
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    commands::run(args)
}
