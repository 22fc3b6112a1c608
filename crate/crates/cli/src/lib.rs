//! Command-line front end: corpus generation, training, denoising,
//! evaluation and regularization-path experiments.

pub mod commands;
pub mod config;
pub mod corpus;
pub mod error;
pub mod formats;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::commands::{Context, Status};
use crate::config::{ExperimentConfig, RouteName};
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "steplearn", version, about = "Learn denoising regularizers from clean/noisy pairs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Experiment configuration (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Learning route; overrides the config.
    #[arg(long, global = true, value_enum)]
    pub route: Option<RouteName>,
    /// Output directory; overrides the config.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Master seed; overrides the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Overwrite a corpus whose manifest differs or cannot be read.
    #[arg(long, global = true)]
    pub force: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a training and held-out corpus.
    Gen,
    /// Learn a regularizer from the training corpus.
    Train,
    /// Denoise one signal or image with a learned model.
    Denoise {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
        /// Clean signal for error statistics.
        #[arg(long)]
        reference: Option<PathBuf>,
        /// Output file (default `<out>/denoised.txt`).
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Compare models on the training and held-out corpus.
    Eval {
        /// Model files; defaults to the models in `<out>/model`.
        #[arg(long = "model")]
        models: Vec<PathBuf>,
    },
    /// Reconstruction error along a regularization path.
    Path,
}

pub fn context(cli: &Cli) -> Result<Context, CliError> {
    let (cfg, base) = match &cli.config {
        Some(p) => (
            ExperimentConfig::load(p)?,
            p.parent().map(Path::to_path_buf).unwrap_or_default(),
        ),
        None => (ExperimentConfig::default(), PathBuf::new()),
    };
    cfg.validate(&base)?;
    let out = cli
        .out
        .clone()
        .or_else(|| cfg.out.as_ref().map(|o| base.join(o)))
        .unwrap_or_else(|| PathBuf::from("steplearn-out"));
    Ok(Context {
        seed: cli.seed.unwrap_or(cfg.seed),
        route: cli.route.unwrap_or(cfg.route),
        base,
        out,
        force: cli.force,
        cfg,
    })
}

pub fn execute(cli: &Cli) -> Result<Status, CliError> {
    let ctx = context(cli)?;
    match &cli.command {
        Command::Gen => commands::cmd_gen(&ctx),
        Command::Train => commands::cmd_train(&ctx),
        Command::Denoise {
            model,
            input,
            reference,
            output,
        } => commands::cmd_denoise(&ctx, model, input, reference.as_deref(), output.as_deref()),
        Command::Eval { models } => {
            let models = if models.is_empty() { commands::trained_models(&ctx) } else { models.clone() };
            commands::cmd_eval(&ctx, &models).map(|(s, _)| s)
        }
        Command::Path => commands::cmd_path(&ctx),
    }
}

/// Runs the CLI on `args` (including the program name) and returns the exit code:
/// 0 success, 2 invalid input, 3 solver stopped early with artifacts written.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(Status::Done) => 0,
        Ok(s @ Status::NotConverged(_)) => {
            if let Status::NotConverged(why) = &s {
                eprintln!("warning: {why}");
            }
            s.exit_code()
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
