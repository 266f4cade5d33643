//! Command-line front end for the smoothness-decoding pipeline.
//!
//! Subcommands mirror the analysis stages (`narj`, `features`, `train`,
//! `evaluate`, `encode`, `simulate`, `pipeline`, `report`) so each stage is
//! independently exercisable; `pipeline` composes them end to end.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.

mod analysis;
mod cohort_io;
mod commands;
mod config;
mod summary;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::RunConfig;

#[derive(Debug, Parser)]
#[command(
    name = "neuroreach",
    version,
    about = "Predict single-trial movement smoothness from EEG band-power features"
)]
struct Cli {
    #[command(flatten)]
    overrides: Overrides,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Overrides {
    /// TOML run configuration; defaults apply when omitted
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Root random seed (overrides the config)
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; 0 picks the number of cores
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
    /// Trials used for personalization (overrides the config)
    #[arg(long = "k-update", global = true)]
    k_update: Option<usize>,
    /// Permutation count for the statistical tests (overrides the config)
    #[arg(long = "permutations", global = true)]
    permutations: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Score trajectory CSV files (t,x,y,z) with the smoothness index
    Narj {
        /// Trajectory files, scored in the given order
        files: Vec<PathBuf>,
        /// Write the JSON records here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write a targets file consumable by evaluate/pipeline
        #[arg(long)]
        targets_out: Option<PathBuf>,
        /// Subject id recorded in the targets file
        #[arg(long, default_value = "subject")]
        subject: String,
    },
    /// Generate a synthetic cohort with ground truth
    Simulate {
        #[arg(long)]
        out: PathBuf,
    },
    /// Extract channel x band log-bandpower features from EEG recordings
    Features {
        /// EEG file (.csv or .bin with .json sidecar) or a directory of them
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Keep only the channels listed in this file (one label per line)
        #[arg(long)]
        channels: Option<PathBuf>,
    },
    /// Fit per-subject ridge models and the pooled prior
    Train {
        /// Cohort directory (<id>_features.bin + <id>_targets.json)
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Leave this subject out of the pooled prior
        #[arg(long)]
        exclude: Option<String>,
    },
    /// Leave-one-subject-out evaluation: predictions and error metrics
    Evaluate {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Encoding topographies from saved predictions
    Encode {
        /// Cohort directory with feature tensors
        #[arg(long)]
        input: PathBuf,
        /// Directory of per-subject prediction files
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Diagnostic switch: correlate features with the observed series
        /// instead of the model predictions
        #[arg(long)]
        against_observed: bool,
    },
    /// Full run: cohort -> models -> statistics -> topographies -> summary
    Pipeline {
        /// Cohort directory; omit together with --simulate
        #[arg(long)]
        input: Option<PathBuf>,
        /// Generate the cohort instead of reading one
        #[arg(long)]
        simulate: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render a summary JSON into plot-ready CSV files and a digest
    Report {
        #[arg(long)]
        summary: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn effective_config(overrides: &Overrides) -> anyhow::Result<RunConfig> {
    let mut config = match &overrides.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = overrides.seed {
        config.seed = Some(seed);
    }
    if let Some(k) = overrides.k_update {
        config.transfer.k_update = k;
    }
    if let Some(p) = overrides.permutations {
        config.stats.n_permutations = p;
    }
    config.validate()?;
    Ok(config)
}

/// Map a failure onto the exit-code contract. Anything rooted in a
/// numerical error is 3; all other runtime failures are data errors (2).
fn exit_code_for(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(core_err) = cause.downcast_ref::<neuroreach_core::Error>() {
            return match core_err.category() {
                neuroreach_core::ErrorCategory::Numerical => 3,
                neuroreach_core::ErrorCategory::Data => 2,
            };
        }
    }
    2
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let config = effective_config(&cli.overrides)?;
    if cli.overrides.workers > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.overrides.workers)
            .build_global()
            .ok();
    }
    match &cli.command {
        Command::Narj {
            files,
            out,
            targets_out,
            subject,
        } => commands::cmd_narj(files, out.as_deref(), targets_out.as_deref(), subject),
        Command::Simulate { out } => commands::cmd_simulate(&config, out),
        Command::Features {
            input,
            out,
            channels,
        } => commands::cmd_features(input, out, &config, channels.as_deref()),
        Command::Train {
            input,
            out,
            exclude,
        } => commands::cmd_train(input, out, &config, exclude.as_deref()),
        Command::Evaluate { input, out } => commands::cmd_evaluate(input, out, &config),
        Command::Encode {
            input,
            predictions,
            out,
            against_observed,
        } => commands::cmd_encode(input, predictions, out, *against_observed),
        Command::Pipeline {
            input,
            simulate,
            out,
        } => commands::cmd_pipeline(input.as_deref(), *simulate, out, &config),
        Command::Report { summary, out } => commands::cmd_report(summary, out),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // help/version are not errors
            use clap::error::ErrorKind;
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
