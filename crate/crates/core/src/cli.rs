//! Command-line front end: `synth`, `encode`, `train` and `eval`.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::encoding::{check_encoding_params, DEFAULT_BINS};
use crate::error::{Error, Result};
use crate::evaluation::{
    check_compatible, prepare_dataset, run_experiment, run_matrix, table_rows, task_samples, ExperimentConfig,
    FeatureSet, MatrixReport, Task, DEFAULT_FOLDS, DEFAULT_SIDE,
};
use crate::io::{export_png, generate_synthetic, load_dataset, save_checkpoint, save_dataset, save_field, save_report};
use crate::io::synthetic::SyntheticSpec;
use crate::nn::train::DEFAULT_EPOCHS;
use crate::nn::{build_model, train, ModelKind};

#[derive(Debug, Parser)]
#[command(name = "boldfield", version, about = "Encode BOLD-like series as images and classify them")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic labelled dataset.
    Synth(SynthArgs),
    /// Encode every dataset row as GASF, GADF and MTF field files.
    Encode(EncodeArgs),
    /// Train one model on a whole task and save a checkpoint.
    Train(TrainArgs),
    /// Cross-validate one model or the full results matrix.
    Eval(EvalArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 3)]
    pub classes: usize,
    #[arg(long, default_value_t = 100)]
    pub per_class: usize,
    #[arg(long = "len", default_value_t = 13)]
    pub length: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Overrides the innovation standard deviation of every class.
    #[arg(long)]
    pub noise: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EncodeArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, default_value_t = DEFAULT_SIDE)]
    pub m: usize,
    #[arg(long, default_value_t = DEFAULT_BINS)]
    pub q: usize,
    /// Output directory, created if missing.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write an 8-bit grayscale PNG per field.
    #[arg(long)]
    pub png: bool,
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    #[arg(long, default_value = "parallel-cnn", value_parser = parse_model)]
    pub model: ModelKind,
    /// Defaults to the model's natural input: raw, gasf, or mtf+gaf.
    #[arg(long, value_parser = parse_features)]
    pub features: Option<FeatureSet>,
    #[arg(long, default_value = "3class", value_parser = parse_task)]
    pub task: Task,
}

impl ModelArgs {
    pub fn features(&self) -> FeatureSet {
        self.features.unwrap_or(match self.model {
            ModelKind::Lstm | ModelKind::BiLstm => FeatureSet::Raw,
            ModelKind::SingleCnn => FeatureSet::Gasf,
            ModelKind::ParallelCnn => FeatureSet::MtfGaf,
        })
    }
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[arg(long, default_value_t = DEFAULT_SIDE)]
    pub m: usize,
    #[arg(long, default_value_t = DEFAULT_BINS)]
    pub q: usize,
    #[arg(long, default_value_t = DEFAULT_EPOCHS)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.001)]
    pub lr: f64,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub run: RunArgs,
    /// Checkpoint path.
    #[arg(long, default_value = "model.ckpt")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MatrixMode {
    /// One model, feature set and task.
    Single,
    /// Every results-table row on every task.
    Full,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "single")]
    pub matrix: MatrixMode,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long, default_value_t = DEFAULT_FOLDS)]
    pub k: usize,
    /// Folds trained concurrently. Reports do not depend on it.
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    #[arg(long, default_value = "report.json")]
    pub out: PathBuf,
}

fn parse_model(s: &str) -> std::result::Result<ModelKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_features(s: &str) -> std::result::Result<FeatureSet, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_task(s: &str) -> std::result::Result<Task, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

impl RunArgs {
    fn experiment(&self, k: usize, workers: usize) -> ExperimentConfig {
        ExperimentConfig {
            m: self.m,
            q: self.q,
            k,
            seed: self.seed,
            epochs: self.epochs,
            learning_rate: self.lr,
            workers,
        }
    }
}

pub fn cmd_synth(args: &SynthArgs, log: &mut dyn Write) -> Result<()> {
    let mut spec = SyntheticSpec::balanced(args.classes, args.per_class, args.length, args.seed)?;
    if let Some(noise) = args.noise {
        for c in &mut spec.classes {
            c.noise = noise;
        }
    }
    let segments = generate_synthetic(&spec)?;
    save_dataset(&segments, &args.out)?;
    let _ = writeln!(log, "wrote {} series to {}", segments.len(), args.out.display());
    Ok(())
}

fn file_stem(index: usize, source_id: &str) -> String {
    let safe: String = source_id
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect();
    format!("{index:04}_{safe}")
}

pub fn cmd_encode(args: &EncodeArgs, log: &mut dyn Write) -> Result<()> {
    check_encoding_params(args.m, args.q)?;
    let segments = load_dataset(&args.input)?;
    let prepared = prepare_dataset(&segments, args.m, args.q)?;
    std::fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e))?;
    let mut written = 0;
    for (i, p) in prepared.iter().enumerate() {
        let stem = file_stem(i, &p.source_id);
        for field in [&p.fields.gasf, &p.fields.gadf, &p.fields.mtf] {
            let base = args.out.join(format!("{stem}_{}", field.kind.name()));
            save_field(field, base.with_extension("fld"))?;
            if args.png {
                export_png(field, base.with_extension("png"))?;
            }
            written += 1;
        }
    }
    let _ = writeln!(log, "encoded {} series into {} fields under {}", prepared.len(), written, args.out.display());
    Ok(())
}

pub fn cmd_train(args: &TrainArgs, log: &mut dyn Write) -> Result<()> {
    let features = args.model.features();
    check_compatible(args.model.model, features)?;
    let exp = args.run.experiment(DEFAULT_FOLDS, 1);
    check_encoding_params(exp.m, exp.q)?;
    let segments = load_dataset(&args.input)?;
    let samples = task_samples(&prepare_dataset(&segments, exp.m, exp.q)?, args.model.task, features)?;
    let classes = args.model.task.classes().len();
    let spec = build_model(args.model.model, exp.m, classes)?;
    let mut cfg = exp.train_config(args.model.model, classes, 0);
    cfg.seed = exp.seed;
    let (mut net, history) = train(&spec, &samples, &cfg)?;
    for h in &history {
        let _ = writeln!(log, "epoch {:>3}  loss {:.6}  accuracy {:.4}", h.epoch + 1, h.loss, h.accuracy);
    }
    save_checkpoint(&mut net, &args.out)?;
    let _ = writeln!(log, "saved {} to {}", spec.kind, args.out.display());
    Ok(())
}

/// Fixed-width text rendering of a matrix report, one row per feature/model pair.
pub fn render_table(report: &MatrixReport) -> String {
    let mut s = format!("{:<10}{:<14}", "features", "model");
    for t in Task::ALL {
        let _ = write!(s, "{:>18}", t.name());
    }
    s.push('\n');
    for (features, model) in table_rows() {
        let _ = write!(s, "{:<10}{:<14}", features.name(), model.name());
        for t in Task::ALL {
            let cell = report
                .cells
                .iter()
                .find(|c| c.task == t && c.model == model && c.features == features);
            match cell {
                Some(c) => {
                    let _ = write!(s, "{:>18.3}", c.mean_accuracy);
                }
                None => {
                    let _ = write!(s, "{:>18}", "-");
                }
            }
        }
        s.push('\n');
    }
    s
}

pub fn cmd_eval(args: &EvalArgs, log: &mut dyn Write) -> Result<()> {
    let cfg = args.run.experiment(args.k, args.workers);
    cfg.validate()?;
    let segments = load_dataset(&args.input)?;
    match args.matrix {
        MatrixMode::Single => {
            let report = run_experiment(&segments, args.model.task, args.model.model, args.model.features(), &cfg)?;
            save_report(&report, &args.out)?;
            let _ = writeln!(
                log,
                "{} {} {}: mean accuracy {:.4} over {} folds",
                report.task,
                report.model,
                report.features,
                report.mean_accuracy,
                report.fold_accuracy.len()
            );
        }
        MatrixMode::Full => {
            let report = run_matrix(&segments, &Task::ALL, &table_rows(), &cfg)?;
            save_report(&report, &args.out)?;
            let _ = write!(log, "{}", render_table(&report));
        }
    }
    let _ = writeln!(log, "report written to {}", args.out.display());
    Ok(())
}

pub fn run(cli: &Cli, log: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::Synth(a) => cmd_synth(a, log),
        Command::Encode(a) => cmd_encode(a, log),
        Command::Train(a) => cmd_train(a, log),
        Command::Eval(a) => cmd_eval(a, log),
    }
}

/// Collapses a multi-line usage error into one line.
fn one_line(message: &str) -> String {
    message
        .lines()
        .map(str::trim)
        .take_while(|l| !l.starts_with("Usage:"))
        .filter(|l| !l.is_empty())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Parses `args`, runs the subcommand, and returns the process exit code.
/// Diagnostics go to `err` as a single line.
pub fn main_with(args: impl IntoIterator<Item = OsString>, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = write!(out, "{e}");
            return 0;
        }
        Err(e) => {
            let _ = writeln!(err, "{}", one_line(&e.to_string()));
            return 2;
        }
    };
    match run(&cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {}", one_line(&e.to_string()));
            1
        }
    }
}

