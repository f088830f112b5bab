//! The `plumber` command-line tool and HTTP service.

pub mod commands;
pub mod config;
pub mod context;
pub mod output;
pub mod server;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::Parser;
use thiserror::Error;

use plumber_core::components::ComponentError;
use plumber_core::dataset::DatasetError;
use plumber_core::evaluation::EvalError;
use plumber_core::kg::KgError;
use plumber_core::pipeline::PipelineError;
use plumber_core::selector::SelectorError;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flag values or flag combinations; exits with 1.
    #[error("{0}")]
    Usage(String),
    #[error("config {path}: {message}")]
    Config { path: PathBuf, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Kg(#[from] KgError),
    #[error(transparent)]
    Component(#[from] ComponentError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Selector(#[from] SelectorError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    /// Inputs that parse but cannot be used together.
    #[error("{0}")]
    Invalid(String),
    #[error("service: {0}")]
    Server(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            _ => 2,
        }
    }
}

/// Parses `argv`, runs the subcommand and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match commands::Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .target(env_logger::Target::Stderr)
        .try_init();
    match commands::dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
