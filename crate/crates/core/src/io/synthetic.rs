//! Seeded AR(1)-plus-sinusoid series standing in for per-class BOLD segments.
//!
//! Each sample is `sin(2 pi f t + phase) + x_t` with `x_t = a x_{t-1} + s e_t`,
//! `e_t` standard normal and `x_0` drawn from the stationary distribution. The
//! phase is uniform per sample, so classes differ by frequency and
//! autocorrelation rather than by a fixed waveform.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::Segment;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassParams {
    pub label: String,
    /// AR(1) coefficient, `|a| < 1`.
    pub ar: f64,
    /// Oscillation frequency in cycles per step.
    pub frequency: f64,
    /// Standard deviation of the AR innovations.
    pub noise: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub classes: Vec<ClassParams>,
    /// Sample count for each entry of `classes`.
    pub samples_per_class: Vec<usize>,
    pub length: usize,
    pub seed: u64,
}

/// Default class parameters, in label order coco, imagenet, sun.
pub fn default_classes() -> Vec<ClassParams> {
    [("coco", 0.2, 0.1), ("imagenet", 0.5, 0.2), ("sun", 0.8, 0.3)]
        .into_iter()
        .map(|(label, ar, frequency)| ClassParams {
            label: label.to_string(),
            ar,
            frequency,
            noise: 0.3,
        })
        .collect()
}

/// Splits `total` in the 2000 : 1916 : 1000 proportions of the COCO, ImageNet and SUN stimulus sets.
pub fn bold5000_proportions(total: usize) -> Vec<usize> {
    let weights = [2000usize, 1916, 1000];
    let sum: usize = weights.iter().sum();
    let mut counts: Vec<usize> = weights.iter().map(|w| total * w / sum).collect();
    let mut rest = total - counts.iter().sum::<usize>();
    for c in counts.iter_mut() {
        if rest == 0 {
            break;
        }
        *c += 1;
        rest -= 1;
    }
    counts
}

impl SyntheticSpec {
    /// The first `classes` default classes, `per_class` samples each.
    pub fn balanced(classes: usize, per_class: usize, length: usize, seed: u64) -> Result<Self> {
        let defaults = default_classes();
        if !(2..=defaults.len()).contains(&classes) {
            return Err(Error::Config(format!(
                "synthetic data supports 2 or 3 classes, got {classes}"
            )));
        }
        Ok(Self {
            classes: defaults[..classes].to_vec(),
            samples_per_class: vec![per_class; classes],
            length,
            seed,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.classes.is_empty() {
            return Err(Error::Config("no classes".into()));
        }
        if self.samples_per_class.len() != self.classes.len() {
            return Err(Error::Config(format!(
                "{} sample counts for {} classes",
                self.samples_per_class.len(),
                self.classes.len()
            )));
        }
        if self.length < 2 {
            return Err(Error::Config(format!("series length {} < 2", self.length)));
        }
        for c in &self.classes {
            if !(c.ar.abs() < 1.0) {
                return Err(Error::Config(format!("class {}: |AR| must be < 1", c.label)));
            }
            if !(c.noise >= 0.0) || !c.frequency.is_finite() {
                return Err(Error::Config(format!("class {}: invalid noise or frequency", c.label)));
            }
        }
        Ok(())
    }
}

pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<Vec<Segment>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut out = Vec::with_capacity(spec.samples_per_class.iter().sum());
    for (class, &count) in spec.classes.iter().zip(&spec.samples_per_class) {
        for i in 0..count {
            let phase = rng.gen_range(0.0..2.0 * PI);
            let e0: f64 = rng.sample(StandardNormal);
            let mut x = class.noise * e0 / (1.0 - class.ar * class.ar).sqrt();
            let mut values = Vec::with_capacity(spec.length);
            for t in 0..spec.length {
                values.push((2.0 * PI * class.frequency * t as f64 + phase).sin() + x);
                let e: f64 = rng.sample(StandardNormal);
                x = class.ar * x + class.noise * e;
            }
            out.push(Segment::new(values, class.label.clone(), format!("syn_{}_{i:04}", class.label))?);
        }
    }
    Ok(out)
}
