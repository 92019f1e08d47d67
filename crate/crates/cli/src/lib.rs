//! Configuration, expression parsing and experiment execution behind the
//! `pathmeasure` binary.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod expr;
pub mod run;

use std::fs;
use std::path::Path;

use config::{parse_config, Command, ConfigErrors};
use run::RunError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("invalid configuration:\n{0}")]
    Config(ConfigErrors),
    #[error("{0}")]
    Run(RunError),
    #[error("cannot write output: {0}")]
    Write(std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Run(e) if e.source.is_numerical() => 3,
            CliError::Write(_) => 1,
            _ => 2,
        }
    }
}

/// Outcome of a successful run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Completed {
    pub converged: Option<bool>,
}

impl Completed {
    /// 4 only for an unconverged feynman run under `--strict`.
    pub fn exit_code(&self, strict: bool) -> i32 {
        if strict && self.converged == Some(false) {
            4
        } else {
            0
        }
    }
}

/// Read, validate, run and write `<out>/result.csv` and `<out>/summary.txt`.
pub fn execute(command: Command, config_path: &Path, out: &Path) -> Result<Completed, CliError> {
    let text = fs::read_to_string(config_path).map_err(|source| CliError::Read {
        path: config_path.display().to_string(),
        source,
    })?;
    let config = parse_config(command, &text).map_err(CliError::Config)?;
    let output = run::run_experiment(&config).map_err(CliError::Run)?;
    output.write_to(out).map_err(CliError::Write)?;
    Ok(Completed {
        converged: output.converged,
    })
}
