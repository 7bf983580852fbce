//! Command-line front end.
//!
//! Every subcommand resolves a [`RunConfig`] (flags over `--config` file over
//! defaults), echoes it to `<out-dir>/effective_config.json`, and writes all
//! of its outputs under `--out-dir`.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.

mod commands;
pub mod config;

use clap::{Parser, Subcommand};

pub use commands::{train_and_evaluate, RunSummary};
pub use config::RunConfig;
use config::{
    CheckpointFlag, DataFlags, EvalFlags, ExportGraphFlags, GlobalFlags, ModelFlags, SplitFlags,
    SweepFlags, SynthFlags, TrainFlags,
};

use crate::error::Error;

pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "expgraph",
    version,
    about = "Facial-attribute graphs and GCN expression classification"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalFlags,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a deterministic synthetic dataset
    Synth {
        #[command(flatten)]
        synth: SynthFlags,
    },
    /// Build graphs for every sample and summarize their edges
    BuildGraph {
        #[command(flatten)]
        data: DataFlags,
    },
    /// Train on the train split and report test metrics
    Train {
        #[command(flatten)]
        data: DataFlags,
        #[command(flatten)]
        model: ModelFlags,
        #[command(flatten)]
        train: TrainFlags,
        #[command(flatten)]
        split: SplitFlags,
    },
    /// Evaluate a checkpoint
    Eval {
        #[command(flatten)]
        checkpoint: CheckpointFlag,
        #[command(flatten)]
        data: DataFlags,
        #[command(flatten)]
        split: SplitFlags,
        #[command(flatten)]
        eval: EvalFlags,
    },
    /// Train and evaluate once per grid value of tau or patch size
    Sweep {
        #[command(flatten)]
        sweep: SweepFlags,
        #[command(flatten)]
        data: DataFlags,
        #[command(flatten)]
        model: ModelFlags,
        #[command(flatten)]
        train: TrainFlags,
        #[command(flatten)]
        split: SplitFlags,
    },
    /// Write readout embeddings and predictions as CSV
    ExportEmbeddings {
        #[command(flatten)]
        checkpoint: CheckpointFlag,
        #[command(flatten)]
        data: DataFlags,
    },
    /// Write graphs as DOT or JSON
    ExportGraph {
        #[command(flatten)]
        data: DataFlags,
        #[command(flatten)]
        export: ExportGraphFlags,
    },
}

impl Cli {
    /// Defaults, then the config file, then the flags.
    pub fn resolve(&self) -> crate::Result<RunConfig> {
        let mut cfg = match &self.global.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        self.global.apply(&mut cfg);
        match &self.command {
            Command::Synth { synth } => synth.apply(&mut cfg),
            Command::BuildGraph { data } => data.apply(&mut cfg),
            Command::Train {
                data,
                model,
                train,
                split,
            } => {
                data.apply(&mut cfg);
                model.apply(&mut cfg);
                train.apply(&mut cfg);
                split.apply(&mut cfg);
            }
            Command::Eval {
                checkpoint,
                data,
                split,
                eval,
            } => {
                checkpoint.apply(&mut cfg);
                data.apply(&mut cfg);
                split.apply(&mut cfg);
                eval.apply(&mut cfg);
            }
            Command::Sweep {
                sweep,
                data,
                model,
                train,
                split,
            } => {
                sweep.apply(&mut cfg);
                data.apply(&mut cfg);
                model.apply(&mut cfg);
                train.apply(&mut cfg);
                split.apply(&mut cfg);
            }
            Command::ExportEmbeddings { checkpoint, data } => {
                checkpoint.apply(&mut cfg);
                data.apply(&mut cfg);
            }
            Command::ExportGraph { data, export } => {
                data.apply(&mut cfg);
                export.apply(&mut cfg);
            }
        }
        Ok(cfg)
    }
}

/// Resolves the configuration and runs the command on a pool of
/// `threads` workers when requested.
pub fn run(cli: &Cli) -> anyhow::Result<()> {
    let cfg = cli.resolve()?;
    let dispatch = || -> crate::Result<()> {
        match cli.command {
            Command::Synth { .. } => commands::synth(&cfg),
            Command::BuildGraph { .. } => commands::build_graph(&cfg),
            Command::Train { .. } => commands::train(&cfg),
            Command::Eval { .. } => commands::eval(&cfg),
            Command::Sweep { .. } => commands::sweep(&cfg),
            Command::ExportEmbeddings { .. } => commands::export_embeddings_cmd(&cfg),
            Command::ExportGraph { .. } => commands::export_graph_cmd(&cfg),
        }
    };
    match cfg.threads {
        Some(0) => Err(Error::invalid("--threads must be at least 1").into()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(n).build()?;
            Ok(pool.install(dispatch)?)
        }
        None => Ok(dispatch()?),
    }
}

/// Maps an error to the process exit code.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<Error>() {
            return match e {
                Error::InvalidInput(_) => EXIT_USAGE,
                Error::Numeric(_) => EXIT_NUMERIC,
                _ => EXIT_DATA,
            };
        }
        if cause.is::<std::io::Error>() {
            return EXIT_DATA;
        }
    }
    EXIT_USAGE
}
