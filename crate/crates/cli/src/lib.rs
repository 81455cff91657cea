//! Library side of the `rqnet` command-line tool.
//!
//! Each subcommand resolves its effective configuration (flags over the
//! `--config` file over defaults), processes markets independently on a
//! bounded thread pool, and writes deterministic CSV and/or JSON files whose
//! headers record the configuration that produced them.

pub mod args;
pub mod config;
pub mod output;

mod analyze;
mod export;
mod market;
mod trend;
mod windows;

use std::path::Path;
use std::process::ExitCode;

use thiserror::Error;

use crate::args::{Cli, Command};
use crate::config::{resolve_base, resolve_pipeline, resolve_slice, resolve_trend, resolve_window, FileConfig};

#[derive(Debug, Error)]
pub enum CliError {
    /// Invalid flags or configuration; nothing was computed.
    #[error("{0}")]
    Config(String),
    /// Writing results failed.
    #[error("{0}")]
    Output(String),
}

impl CliError {
    fn output(path: &Path, e: std::io::Error) -> Self {
        CliError::Output(format!("{}: {e}", path.display()))
    }
}

/// How a completed run went.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct Outcome {
    pub failed_inputs: usize,
    pub total_inputs: usize,
    /// Failures not tied to a single input, such as a skipped heat map.
    pub other_failures: usize,
}

impl Outcome {
    pub fn exit_code(&self) -> u8 {
        if self.failed_inputs == 0 && self.other_failures == 0 {
            0
        } else {
            1
        }
    }
}

pub fn run(cli: Cli) -> ExitCode {
    match execute(cli) {
        Ok(outcome) => {
            if outcome.failed_inputs > 0 {
                eprintln!(
                    "{} of {} inputs failed; see status output",
                    outcome.failed_inputs, outcome.total_inputs
                );
            }
            ExitCode::from(outcome.exit_code())
        }
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                CliError::Config(_) => ExitCode::from(2),
                CliError::Output(_) => ExitCode::from(1),
            }
        }
    }
}

pub fn execute(cli: Cli) -> Result<Outcome, CliError> {
    match cli.command {
        Command::Analyze { common, pipeline } => {
            let file = FileConfig::load(common.config.as_deref())?;
            let base = resolve_base(&common, &file)?;
            let pipeline = resolve_pipeline(&pipeline, &file)?;
            prepare_out_dir(&base.output.out_dir)?;
            in_pool(base.output.jobs, || analyze::run(&base, &pipeline))?
        }
        Command::Windows {
            common,
            pipeline,
            window,
        } => {
            let file = FileConfig::load(common.config.as_deref())?;
            let base = resolve_base(&common, &file)?;
            let pipeline = resolve_pipeline(&pipeline, &file)?;
            let plan = resolve_window(&window, &pipeline, &file)?;
            prepare_out_dir(&base.output.out_dir)?;
            in_pool(base.output.jobs, || windows::run(&base, &pipeline, &plan))?
        }
        Command::Trend { common, trend } => {
            let file = FileConfig::load(common.config.as_deref())?;
            let base = resolve_base(&common, &file)?;
            let plan = resolve_trend(&trend, &file)?;
            prepare_out_dir(&base.output.out_dir)?;
            in_pool(base.output.jobs, || trend::run(&base, &plan))?
        }
        Command::ExportRp {
            common,
            pipeline,
            slice,
        } => {
            let file = FileConfig::load(common.config.as_deref())?;
            let base = resolve_base(&common, &file)?;
            let pipeline = resolve_pipeline(&pipeline, &file)?;
            let slice = resolve_slice(&slice, &file)?;
            prepare_out_dir(&base.output.out_dir)?;
            in_pool(base.output.jobs, || {
                export::run(&base, &pipeline, slice, export::Target::RecurrencePlot)
            })?
        }
        Command::ExportNetwork {
            common,
            pipeline,
            slice,
        } => {
            let file = FileConfig::load(common.config.as_deref())?;
            let base = resolve_base(&common, &file)?;
            let pipeline = resolve_pipeline(&pipeline, &file)?;
            let slice = resolve_slice(&slice, &file)?;
            prepare_out_dir(&base.output.out_dir)?;
            in_pool(base.output.jobs, || {
                export::run(&base, &pipeline, slice, export::Target::Network)
            })?
        }
    }
}

fn prepare_out_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::output(dir, e))
}

fn in_pool<R: Send>(jobs: Option<usize>, f: impl FnOnce() -> R + Send) -> Result<R, CliError> {
    match jobs {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Config(format!("cannot start {n} workers: {e}")))?;
            Ok(pool.install(f))
        }
    }
}
