//! Stratified k-fold evaluation of every model/feature pairing on the four
//! classification tasks.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::thread;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::encoding::{encode_sample, EncodedSample, FieldKind, FieldMatrix, DEFAULT_BINS};
use crate::error::{Error, Result};
use crate::nn::{build_model, predict_classes, train, ModelKind, Sample, Tensor, TrainConfig};
use crate::series::{normalize, resample_values, Segment};

pub const DEFAULT_SIDE: usize = 16;
pub const DEFAULT_FOLDS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Task {
    ThreeClass,
    ImageNetVsSun,
    ImageNetVsCoco,
    CocoVsSun,
}

impl Task {
    pub const ALL: [Task; 4] = [Task::ThreeClass, Task::ImageNetVsSun, Task::ImageNetVsCoco, Task::CocoVsSun];

    pub fn name(self) -> &'static str {
        match self {
            Task::ThreeClass => "3class",
            Task::ImageNetVsSun => "imagenet-vs-sun",
            Task::ImageNetVsCoco => "imagenet-vs-coco",
            Task::CocoVsSun => "coco-vs-sun",
        }
    }

    /// Class labels in index order.
    pub fn classes(self) -> &'static [&'static str] {
        match self {
            Task::ThreeClass => &["coco", "imagenet", "sun"],
            Task::ImageNetVsSun => &["imagenet", "sun"],
            Task::ImageNetVsCoco => &["imagenet", "coco"],
            Task::CocoVsSun => &["coco", "sun"],
        }
    }

    pub fn class_index(self, label: &str) -> Option<usize> {
        self.classes().iter().position(|c| c.eq_ignore_ascii_case(label))
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.to_ascii_lowercase();
        Task::ALL
            .into_iter()
            .find(|t| t.name() == s || (s == "three-class" && *t == Task::ThreeClass))
            .ok_or_else(|| Error::Config(format!("unknown task {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FeatureSet {
    Raw,
    Mtf,
    Gasf,
    Gadf,
    MtfGaf,
}

impl FeatureSet {
    pub const ALL: [FeatureSet; 5] = [
        FeatureSet::Raw,
        FeatureSet::Mtf,
        FeatureSet::Gasf,
        FeatureSet::Gadf,
        FeatureSet::MtfGaf,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FeatureSet::Raw => "raw",
            FeatureSet::Mtf => "mtf",
            FeatureSet::Gasf => "gasf",
            FeatureSet::Gadf => "gadf",
            FeatureSet::MtfGaf => "mtf+gaf",
        }
    }

    /// Fields fed to the model, in branch order.
    pub fn fields(self) -> &'static [FieldKind] {
        match self {
            FeatureSet::Raw => &[],
            FeatureSet::Mtf => &[FieldKind::Mtf],
            FeatureSet::Gasf => &[FieldKind::Gasf],
            FeatureSet::Gadf => &[FieldKind::Gadf],
            FeatureSet::MtfGaf => &[FieldKind::Gasf, FieldKind::Gadf, FieldKind::Mtf],
        }
    }
}

impl fmt::Display for FeatureSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FeatureSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.to_ascii_lowercase();
        if s == "all" || s == "gaf+mtf" {
            return Ok(FeatureSet::MtfGaf);
        }
        FeatureSet::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown feature set {s:?}")))
    }
}

/// Recurrent models take the raw series, the single CNN one field, the parallel CNN all three.
pub fn check_compatible(model: ModelKind, features: FeatureSet) -> Result<()> {
    let ok = match model {
        ModelKind::Lstm | ModelKind::BiLstm => features == FeatureSet::Raw,
        ModelKind::SingleCnn => matches!(features, FeatureSet::Mtf | FeatureSet::Gasf | FeatureSet::Gadf),
        ModelKind::ParallelCnn => features == FeatureSet::MtfGaf,
    };
    if ok {
        Ok(())
    } else {
        Err(Error::Config(format!("model {model} cannot take {features} features")))
    }
}

/// The six feature/model rows of the results table.
pub fn table_rows() -> [(FeatureSet, ModelKind); 6] {
    [
        (FeatureSet::Raw, ModelKind::Lstm),
        (FeatureSet::Raw, ModelKind::BiLstm),
        (FeatureSet::Mtf, ModelKind::SingleCnn),
        (FeatureSet::Gasf, ModelKind::SingleCnn),
        (FeatureSet::Gadf, ModelKind::SingleCnn),
        (FeatureSet::MtfGaf, ModelKind::ParallelCnn),
    ]
}

/// Published mean 10-fold accuracies on BOLD5000-derived voxel series, for side-by-side
/// comparison only. Synthetic runs are not expected to reproduce them.
pub fn reference_accuracy(task: Task, model: ModelKind, features: FeatureSet) -> Option<f64> {
    let row = match (features, model) {
        (FeatureSet::Raw, ModelKind::Lstm) => [0.75, 0.98, 0.63, 0.98],
        (FeatureSet::Raw, ModelKind::BiLstm) => [0.76, 0.99, 0.64, 0.99],
        (FeatureSet::Mtf, ModelKind::SingleCnn) => [0.87, 0.99, 0.71, 0.99],
        (FeatureSet::Gasf, ModelKind::SingleCnn) => [0.87, 0.99, 0.84, 0.98],
        (FeatureSet::Gadf, ModelKind::SingleCnn) => [0.85, 0.99, 0.86, 0.99],
        (FeatureSet::MtfGaf, ModelKind::ParallelCnn) => [0.94, 0.99, 0.88, 0.98],
        _ => return None,
    };
    let col = Task::ALL.iter().position(|t| *t == task).expect("known task");
    Some(row[col])
}

// ---------------------------------------------------------------------------
// folds and metrics

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    /// Fold index of every sample.
    pub assignments: Vec<usize>,
}

impl FoldPlan {
    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len()).filter(|&i| self.assignments[i] == fold).collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len()).filter(|&i| self.assignments[i] != fold).collect()
    }
}

/// Shuffles each class with a seeded generator and deals its members round-robin
/// over the folds. The dealing position carries over between classes (taken in
/// sorted label order), so fold sizes also stay within one of each other.
pub fn stratified_kfold<L: Ord + fmt::Debug>(labels: &[L], k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::Config(format!("k must be at least 2, got {k}")));
    }
    let mut by_class: BTreeMap<&L, Vec<usize>> = BTreeMap::new();
    for (i, l) in labels.iter().enumerate() {
        by_class.entry(l).or_default().push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignments = vec![0; labels.len()];
    let mut next = 0;
    for (label, mut members) in by_class {
        if members.len() < k {
            return Err(Error::Stratification {
                label: format!("{label:?}"),
                count: members.len(),
                k,
            });
        }
        members.shuffle(&mut rng);
        for &i in &members {
            assignments[i] = next;
            next = (next + 1) % k;
        }
    }
    Ok(FoldPlan { k, assignments })
}

fn check_lengths(predictions: &[usize], truths: &[usize]) -> Result<()> {
    if predictions.len() != truths.len() {
        return Err(Error::Shape(format!(
            "{} predictions for {} truths",
            predictions.len(),
            truths.len()
        )));
    }
    Ok(())
}

pub fn accuracy(predictions: &[usize], truths: &[usize]) -> Result<f64> {
    check_lengths(predictions, truths)?;
    if truths.is_empty() {
        return Err(Error::Shape("accuracy of an empty set".into()));
    }
    let correct = predictions.iter().zip(truths).filter(|(p, t)| p == t).count();
    Ok(correct as f64 / truths.len() as f64)
}

/// `confusion[truth][prediction]` counts.
pub fn confusion(predictions: &[usize], truths: &[usize], classes: usize) -> Result<Vec<Vec<usize>>> {
    check_lengths(predictions, truths)?;
    let mut m = vec![vec![0; classes]; classes];
    for (&p, &t) in predictions.iter().zip(truths) {
        if p >= classes || t >= classes {
            return Err(Error::Config(format!("class index outside 0..{classes}")));
        }
        m[t][p] += 1;
    }
    Ok(m)
}

// ---------------------------------------------------------------------------
// experiments

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Image side / resampled series length.
    pub m: usize,
    /// Quantile bins for the transition field.
    pub q: usize,
    pub k: usize,
    pub seed: u64,
    pub epochs: usize,
    pub learning_rate: f64,
    /// Folds trained concurrently. Results do not depend on it.
    #[serde(skip)]
    pub workers: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            m: DEFAULT_SIDE,
            q: DEFAULT_BINS,
            k: DEFAULT_FOLDS,
            seed: 0,
            epochs: crate::nn::train::DEFAULT_EPOCHS,
            learning_rate: 0.001,
            workers: 1,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        crate::encoding::check_encoding_params(self.m, self.q)?;
        if self.k < 2 {
            return Err(Error::Config(format!("k must be at least 2, got {}", self.k)));
        }
        Ok(())
    }

    pub fn fingerprint(&self) -> Fingerprint {
        Fingerprint {
            seed: self.seed,
            m: self.m,
            q: self.q,
            epochs: self.epochs,
            k: self.k,
            learning_rate: self.learning_rate,
        }
    }

    /// Training settings for one fold.
    pub fn train_config(&self, model: ModelKind, classes: usize, fold: usize) -> TrainConfig {
        let mut cfg = TrainConfig::for_model(model, classes);
        cfg.epochs = self.epochs;
        cfg.learning_rate = self.learning_rate;
        cfg.seed = self.seed ^ (fold as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
        cfg
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fingerprint {
    pub seed: u64,
    pub m: usize,
    pub q: usize,
    pub epochs: usize,
    pub k: usize,
    pub learning_rate: f64,
}

/// A segment after normalization, resampling and encoding.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedSegment {
    pub class_label: String,
    pub source_id: String,
    /// Detrended, z-scored series resampled to length `m`.
    pub raw: Vec<f64>,
    pub fields: EncodedSample,
}

impl PreparedSegment {
    fn field_tensor(field: &FieldMatrix) -> Tensor {
        Tensor::new(vec![field.n, field.n, 1], field.values.clone()).expect("square field")
    }

    /// Model inputs for a feature set: `[m, 1]` for raw, `[m, m, 1]` per field.
    pub fn inputs(&self, features: FeatureSet) -> Vec<Tensor> {
        match features {
            FeatureSet::Raw => {
                vec![Tensor::new(vec![self.raw.len(), 1], self.raw.clone()).expect("non-empty series")]
            }
            _ => features
                .fields()
                .iter()
                .map(|&k| Self::field_tensor(self.fields.field(k)))
                .collect(),
        }
    }
}

/// Detrends and z-scores each segment, then encodes it at side `m` with `q` bins.
pub fn prepare_segment(segment: &Segment, m: usize, q: usize) -> Result<PreparedSegment> {
    let normalized = Segment {
        values: normalize(&segment.values)?,
        class_label: segment.class_label.clone(),
        source_id: segment.source_id.clone(),
    };
    Ok(PreparedSegment {
        class_label: segment.class_label.clone(),
        source_id: segment.source_id.clone(),
        raw: resample_values(&normalized.values, m)?,
        fields: encode_sample(&normalized, m, q)?,
    })
}

pub fn prepare_dataset(segments: &[Segment], m: usize, q: usize) -> Result<Vec<PreparedSegment>> {
    segments.iter().map(|s| prepare_segment(s, m, q)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub task: Task,
    pub model: ModelKind,
    pub features: FeatureSet,
    pub classes: Vec<String>,
    pub fold_accuracy: Vec<f64>,
    pub mean_accuracy: f64,
    /// Summed over folds, `confusion[truth][prediction]`.
    pub confusion: Vec<Vec<usize>>,
    /// Final-epoch training loss of each fold's model.
    pub fold_final_train_loss: Vec<f64>,
    pub config: Fingerprint,
    pub reference_accuracy: Option<f64>,
}

/// Samples of the task's classes, with labels mapped to class indices.
pub fn task_samples(prepared: &[PreparedSegment], task: Task, features: FeatureSet) -> Result<Vec<Sample>> {
    let samples: Vec<Sample> = prepared
        .iter()
        .filter_map(|p| {
            task.class_index(&p.class_label).map(|label| Sample {
                inputs: p.inputs(features),
                label,
            })
        })
        .collect();
    for (i, class) in task.classes().iter().enumerate() {
        if !samples.iter().any(|s| s.label == i) {
            return Err(Error::Config(format!("dataset has no {class} samples for task {task}")));
        }
    }
    Ok(samples)
}

struct FoldOutcome {
    accuracy: f64,
    predictions: Vec<usize>,
    truths: Vec<usize>,
    final_loss: f64,
}

fn run_fold(
    samples: &[Sample],
    plan: &FoldPlan,
    fold: usize,
    model: ModelKind,
    classes: usize,
    cfg: &ExperimentConfig,
) -> Result<FoldOutcome> {
    let spec = build_model(model, cfg.m, classes)?;
    let train_set: Vec<Sample> = plan.train_indices(fold).into_iter().map(|i| samples[i].clone()).collect();
    let test_set: Vec<Sample> = plan.test_indices(fold).into_iter().map(|i| samples[i].clone()).collect();
    let tcfg = cfg.train_config(model, classes, fold);
    let (mut net, history) = train(&spec, &train_set, &tcfg)?;
    let predictions = predict_classes(&mut net, &test_set, 32)?;
    let truths: Vec<usize> = test_set.iter().map(|s| s.label).collect();
    Ok(FoldOutcome {
        accuracy: accuracy(&predictions, &truths)?,
        predictions,
        truths,
        final_loss: history.last().map_or(f64::NAN, |h| h.loss),
    })
}

/// k-fold train/test of one model on one feature set for one task.
pub fn run_experiment_prepared(
    prepared: &[PreparedSegment],
    task: Task,
    model: ModelKind,
    features: FeatureSet,
    cfg: &ExperimentConfig,
) -> Result<ExperimentReport> {
    cfg.validate()?;
    check_compatible(model, features)?;
    let samples = task_samples(prepared, task, features)?;
    let classes = task.classes().len();
    let labels: Vec<usize> = samples.iter().map(|s| s.label).collect();
    let plan = stratified_kfold(&labels, cfg.k, cfg.seed)?;

    let folds: Vec<usize> = (0..cfg.k).collect();
    let workers = cfg.workers.clamp(1, cfg.k);
    let mut outcomes: Vec<(usize, Result<FoldOutcome>)> = if workers == 1 {
        folds
            .iter()
            .map(|&f| (f, run_fold(&samples, &plan, f, model, classes, cfg)))
            .collect()
    } else {
        thread::scope(|scope| {
            let handles: Vec<_> = (0..workers)
                .map(|w| {
                    let (samples, plan, folds) = (&samples, &plan, &folds);
                    scope.spawn(move || {
                        folds
                            .iter()
                            .filter(|&&f| f % workers == w)
                            .map(|&f| (f, run_fold(samples, plan, f, model, classes, cfg)))
                            .collect::<Vec<_>>()
                    })
                })
                .collect();
            handles
                .into_iter()
                .flat_map(|h| h.join().expect("fold worker panicked"))
                .collect()
        })
    };
    outcomes.sort_by_key(|(f, _)| *f);

    let mut fold_accuracy = Vec::with_capacity(cfg.k);
    let mut fold_final_train_loss = Vec::with_capacity(cfg.k);
    let mut all_pred = Vec::new();
    let mut all_truth = Vec::new();
    for (_, outcome) in outcomes {
        let o = outcome?;
        fold_accuracy.push(o.accuracy);
        fold_final_train_loss.push(o.final_loss);
        all_pred.extend(o.predictions);
        all_truth.extend(o.truths);
    }
    let mean_accuracy = fold_accuracy.iter().sum::<f64>() / fold_accuracy.len() as f64;
    Ok(ExperimentReport {
        task,
        model,
        features,
        classes: task.classes().iter().map(|s| s.to_string()).collect(),
        fold_accuracy,
        mean_accuracy,
        confusion: confusion(&all_pred, &all_truth, classes)?,
        fold_final_train_loss,
        config: cfg.fingerprint(),
        reference_accuracy: reference_accuracy(task, model, features),
    })
}

pub fn run_experiment(
    segments: &[Segment],
    task: Task,
    model: ModelKind,
    features: FeatureSet,
    cfg: &ExperimentConfig,
) -> Result<ExperimentReport> {
    cfg.validate()?;
    check_compatible(model, features)?;
    run_experiment_prepared(&prepare_dataset(segments, cfg.m, cfg.q)?, task, model, features, cfg)
}

/// A set of experiment cells sharing one configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixReport {
    pub config: Fingerprint,
    pub cells: Vec<ExperimentReport>,
}

/// Runs every `(features, model)` row on every task, rows outermost.
pub fn run_matrix(
    segments: &[Segment],
    tasks: &[Task],
    rows: &[(FeatureSet, ModelKind)],
    cfg: &ExperimentConfig,
) -> Result<MatrixReport> {
    cfg.validate()?;
    for &(f, m) in rows {
        check_compatible(m, f)?;
    }
    let prepared = prepare_dataset(segments, cfg.m, cfg.q)?;
    let mut cells = Vec::with_capacity(rows.len() * tasks.len());
    for &(features, model) in rows {
        for &task in tasks {
            cells.push(run_experiment_prepared(&prepared, task, model, features, cfg)?);
        }
    }
    Ok(MatrixReport {
        config: cfg.fingerprint(),
        cells,
    })
}
