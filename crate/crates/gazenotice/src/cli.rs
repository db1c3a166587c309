//! Command-line front end.
//!
//! Exit codes: 0 success, 1 invalid input or usage, 2 failure while running.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use gazenotice_core::features::FeatureSet;
use gazenotice_core::learn::Selection;
use gazenotice_core::model::StimulusKind;

use crate::config::Config;
use crate::error::{Error, Result};
use crate::io::{read_poses, read_session, read_sessions, write_json, write_sessions};
use crate::model::ModelFile;
use crate::pipeline::{self, Grid, SimulateOptions, Task};
use crate::report::{read_rows, write_cv_report, write_features, write_rows, PredictionRow};

#[derive(Debug, Parser)]
#[command(name = "gazenotice", version, about = "Gaze-based redirection noticeability toolkit")]
pub struct Cli {
    /// Seed for every randomized step.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// TOML config; defaults to $GAZENOTICE_CONFIG when set.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Opacity,
    Color,
    Scale,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GridArg {
    Collection,
    Confirmation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TaskArg {
    Regression,
    Binary,
    Three,
}

#[derive(Debug, Args)]
pub struct Output {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct StreamArgs {
    /// Window length in seconds (overrides the config).
    #[arg(long)]
    pub window: Option<f64>,
    /// Emission period in seconds (overrides the config).
    #[arg(long)]
    pub hop: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic study: one session file per user plus oracle.csv.
    Simulate {
        #[arg(long, default_value_t = 12)]
        users: usize,
        /// Trials per condition.
        #[arg(long, default_value_t = 24)]
        trials: usize,
        /// Redirection magnitude in degrees.
        #[arg(long, default_value_t = 20.0)]
        magnitude: f64,
        #[arg(long, value_enum, default_value_t = KindArg::Opacity)]
        kind: KindArg,
        #[arg(long, value_enum, default_value_t = GridArg::Collection)]
        grid: GridArg,
        /// Trial length in seconds.
        #[arg(long, default_value_t = 8.0)]
        duration: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Detect saccades and fixations in every trial of a session.
    DetectEvents {
        #[arg(long)]
        session: PathBuf,
        #[command(flatten)]
        output: Output,
    },
    /// Extract per-(user, condition) feature rows.
    Features {
        #[arg(long)]
        sessions: PathBuf,
        #[command(flatten)]
        output: Output,
    },
    /// Train a regressor or classifier.
    Train {
        /// Session file, session directory, or feature table (.csv).
        #[arg(long)]
        sessions: PathBuf,
        #[arg(long, value_enum, default_value_t = TaskArg::Regression)]
        task: TaskArg,
        /// Comma-separated feature names; all features when omitted.
        #[arg(long, conflicts_with = "selection")]
        features: Option<String>,
        /// Use the best set of a select-features result.
        #[arg(long)]
        selection: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Two-stage feature selection by leave-one-user-out MSE.
    SelectFeatures {
        #[arg(long)]
        sessions: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate a model; with --louo, retrain it per held-out user.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        sessions: PathBuf,
        #[arg(long)]
        louo: bool,
        /// Also write per-sample predictions (with --louo).
        #[arg(long, requires = "louo")]
        predictions: Option<PathBuf>,
        #[command(flatten)]
        output: Output,
    },
    /// Predict every (user, condition) sample.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        sessions: PathBuf,
        #[command(flatten)]
        output: Output,
    },
    /// Sliding-window predictions over one session.
    StreamPredict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        session: PathBuf,
        #[command(flatten)]
        stream: StreamArgs,
        #[command(flatten)]
        output: Output,
    },
    /// Replay a session through the adaptive redirection controller.
    AdaptReplay {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        session: PathBuf,
        #[command(flatten)]
        stream: StreamArgs,
        #[command(flatten)]
        output: Output,
    },
    /// Cluster arm poses and pick representative ones.
    ClusterPoses {
        /// Session file or directory to sample poses from.
        #[arg(long, required_unless_present = "poses", conflicts_with = "poses")]
        session: Option<PathBuf>,
        /// JSON array of poses.
        #[arg(long)]
        poses: Option<PathBuf>,
        /// Take every n-th body sample.
        #[arg(long, default_value_t = 30)]
        stride: usize,
        #[arg(long, default_value_t = 25)]
        k: usize,
        #[arg(long)]
        min_cluster_size: Option<usize>,
        #[arg(long)]
        min_samples: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit a psychometric curve to yes/no responses.
    Psychometric {
        #[arg(long, group = "source")]
        sessions: Option<PathBuf>,
        /// CSV with columns magnitude,noticed.
        #[arg(long, group = "source")]
        responses: Option<PathBuf>,
        /// Draw responses from a logistic observer instead.
        #[arg(long, group = "source")]
        simulate: bool,
        #[arg(long, default_value_t = 15.0)]
        alpha: f64,
        #[arg(long, default_value_t = 5.0)]
        beta: f64,
        #[arg(long, default_value_t = 200)]
        per_level: usize,
        /// Also save the responses used for the fit.
        #[arg(long)]
        responses_out: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn emit<T: Serialize>(output: &Output, rows: &[T]) -> Result<()> {
    match output.format {
        Format::Csv => write_rows(&output.out, rows),
        Format::Json => write_json(&output.out, &rows),
    }
}

fn stream_config(mut config: Config, args: &StreamArgs) -> Result<Config> {
    config.stream.window = args.window.unwrap_or(config.stream.window);
    config.stream.hop = args.hop.unwrap_or(config.stream.hop);
    if !(config.stream.window > 0.0 && config.stream.hop > 0.0) {
        return Err(Error::Usage("--window and --hop must be positive".into()));
    }
    Ok(config)
}

fn feature_set(features: Option<&str>, selection: Option<&Path>) -> Result<FeatureSet> {
    if let Some(p) = selection {
        let s: Selection = crate::io::read_json(p)?;
        return Ok(s.best.set);
    }
    match features {
        None => Ok(FeatureSet::all()),
        Some(list) => {
            let names: Vec<&str> = list.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
            Ok(FeatureSet::from_names(&names)?)
        }
    }
}

/// Runs a parsed command and returns a one-line summary.
pub fn execute(cli: &Cli) -> Result<String> {
    let config = Config::resolve(cli.config.as_deref())?;
    match &cli.command {
        Command::Simulate { users, trials, magnitude, kind, grid, duration, out } => {
            let opts = SimulateOptions {
                users: *users,
                trials: *trials,
                magnitude: *magnitude,
                kind: match kind {
                    KindArg::Opacity => StimulusKind::Opacity,
                    KindArg::Color => StimulusKind::Color,
                    KindArg::Scale => StimulusKind::Scale,
                },
                grid: match grid {
                    GridArg::Collection => Grid::Collection,
                    GridArg::Confirmation => Grid::Confirmation,
                },
                duration: *duration,
            };
            let study = pipeline::simulate(&opts, cli.seed)?;
            let paths = write_sessions(out, &study.sessions)?;
            write_rows(&out.join("oracle.csv"), &pipeline::oracle_rows(&study))?;
            Ok(format!("wrote {} session files to {}", paths.len(), out.display()))
        }
        Command::DetectEvents { session, output } => {
            let rows = pipeline::detect_events(&read_session(session)?, &config.features)?;
            emit(output, &rows)?;
            Ok(format!("{} events", rows.len()))
        }
        Command::Features { sessions, output } => {
            let samples = pipeline::extract_features(&read_sessions(sessions)?, &config.features)?;
            match output.format {
                Format::Csv => write_features(&output.out, &samples)?,
                Format::Json => write_json(&output.out, &samples)?,
            }
            Ok(format!("{} feature rows", samples.len()))
        }
        Command::Train { sessions, task, features, selection, out } => {
            let set = feature_set(features.as_deref(), selection.as_deref())?;
            let samples = pipeline::load_samples(sessions, &config.features)?;
            let task = match task {
                TaskArg::Regression => Task::Regression,
                TaskArg::Binary => Task::Binary,
                TaskArg::Three => Task::Three,
            };
            let trained = pipeline::train(&samples, set, task, &config)?;
            ModelFile::new(trained).write(out)?;
            Ok(format!("trained on {} samples with {} features", samples.len(), set.len()))
        }
        Command::SelectFeatures { sessions, out } => {
            let samples = pipeline::load_samples(sessions, &config.features)?;
            let selection = pipeline::select(&samples, &config)?;
            write_json(out, &selection)?;
            Ok(format!("best: {} (mse {})", selection.best.set, selection.best.mse))
        }
        Command::Evaluate { model, sessions, louo, predictions, output } => {
            let trained = ModelFile::read(model)?.model;
            let samples = pipeline::load_samples(sessions, &config.features)?;
            if *louo {
                let report = pipeline::evaluate_louo(&samples, &trained)?;
                match output.format {
                    Format::Csv => write_cv_report(&output.out, &report)?,
                    Format::Json => write_json(&output.out, &report)?,
                }
                if let Some(p) = predictions {
                    let rows: Vec<PredictionRow> = report.predictions.iter().map(PredictionRow::from).collect();
                    write_rows(p, &rows)?;
                }
                let summary: Vec<String> =
                    report.metrics.iter().zip(&report.mean).map(|(m, v)| format!("{m} {v:.4}")).collect();
                Ok(format!("{} folds, mean {}", report.folds.len(), summary.join(", ")))
            } else {
                let rows = pipeline::predict(&samples, &trained)?;
                emit(output, &rows)?;
                let (name, value) = pipeline::score(&rows, &trained);
                Ok(format!("{name} {value:.4} over {} samples", rows.len()))
            }
        }
        Command::Predict { model, sessions, output } => {
            let trained = ModelFile::read(model)?.model;
            let rows = pipeline::predict(&pipeline::load_samples(sessions, &config.features)?, &trained)?;
            emit(output, &rows)?;
            Ok(format!("{} predictions", rows.len()))
        }
        Command::StreamPredict { model, session, stream, output } => {
            let trained = ModelFile::read(model)?.model;
            let config = stream_config(config, stream)?;
            let (rows, skipped) = pipeline::stream_predict(&read_session(session)?, &trained, &config)?;
            emit(output, &rows)?;
            Ok(format!("{} windows ({} skipped)", rows.len(), skipped))
        }
        Command::AdaptReplay { model, session, stream, output } => {
            let trained = ModelFile::read(model)?.model;
            let config = stream_config(config, stream)?;
            let rows = pipeline::adapt_replay(&read_session(session)?, &trained, &config)?;
            emit(output, &rows)?;
            let last = rows.last().map_or(config.policy.initial, |r| r.theta);
            Ok(format!("{} steps, final offset {last:.2} deg", rows.len()))
        }
        Command::ClusterPoses { session, poses, stride, k, min_cluster_size, min_samples, out } => {
            let poses = match (session, poses) {
                (_, Some(p)) => read_poses(p)?,
                (Some(s), None) => pipeline::session_poses(&read_sessions(s)?, *stride)?,
                (None, None) => return Err(Error::Usage("give --session or --poses".into())),
            };
            let mut params = config.hdbscan;
            params.min_cluster_size = min_cluster_size.unwrap_or(params.min_cluster_size);
            params.min_samples = min_samples.unwrap_or(params.min_samples);
            let report = pipeline::cluster(poses, &params, *k)?;
            write_json(out, &report)?;
            Ok(format!(
                "{} poses, {} clusters, {} selected",
                report.poses.len(),
                report.clustering.n_clusters(),
                report.selected.len()
            ))
        }
        Command::Psychometric { sessions, responses, simulate, alpha, beta, per_level, responses_out, out } => {
            let rows = match (sessions, responses, simulate) {
                (Some(s), _, _) => pipeline::responses_from_sessions(&read_sessions(s)?),
                (_, Some(r), _) => read_rows(r)?,
                (_, _, true) => pipeline::simulate_responses(*alpha, *beta, *per_level, cli.seed)?,
                _ => return Err(Error::Usage("give --sessions, --responses or --simulate".into())),
            };
            if let Some(p) = responses_out {
                write_rows(p, &rows)?;
            }
            let fit = pipeline::fit_responses(&rows)?;
            write_json(out, &fit)?;
            Ok(format!("alpha {:.3} deg, beta {:.3}", fit.alpha, fit.beta))
        }
    }
}

/// Parses `argv` (program name first), runs the command and returns the
/// process exit code. Messages go to stdout, errors to stderr.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(msg) => {
            println!("{msg}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
