//! Spatial encodings of a 1D segment: Gramian angular summation/difference
//! fields from the polar angle of the rescaled series, and Markov transition
//! fields from quantile-bin transition probabilities.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{rescale_values, resample_to_length, Segment};

/// Slack allowed outside [-1, 1] before `to_polar` reports a domain error.
pub const POLAR_CLAMP_TOLERANCE: f64 = 1e-9;

/// Default number of quantile bins for the transition field.
pub const DEFAULT_BINS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FieldKind {
    Gasf,
    Gadf,
    Mtf,
}

impl FieldKind {
    pub const ALL: [FieldKind; 3] = [FieldKind::Gasf, FieldKind::Gadf, FieldKind::Mtf];

    pub fn code(self) -> u8 {
        match self {
            FieldKind::Gasf => 0,
            FieldKind::Gadf => 1,
            FieldKind::Mtf => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(FieldKind::Gasf),
            1 => Some(FieldKind::Gadf),
            2 => Some(FieldKind::Mtf),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FieldKind::Gasf => "gasf",
            FieldKind::Gadf => "gadf",
            FieldKind::Mtf => "mtf",
        }
    }
}

/// Angles and radii of a rescaled series in polar coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarSeries {
    /// `arccos` of each sample, in [0, pi].
    pub psi: Vec<f64>,
    /// Timestamp radius `i / n` for `i = 1..=n`. Not used by the angular fields.
    pub r: Vec<f64>,
}

/// A square `n x n` field stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldMatrix {
    pub kind: FieldKind,
    pub n: usize,
    pub values: Vec<f64>,
}

impl FieldMatrix {
    pub fn new(kind: FieldKind, n: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n * n {
            return Err(Error::Shape(format!(
                "field of side {n} needs {} values, got {}",
                n * n,
                values.len()
            )));
        }
        Ok(Self { kind, n, values })
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }
}

/// Row-stochastic `Q x Q` matrix: row = source bin, column = destination bin.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    pub q: usize,
    pub probs: Vec<f64>,
}

impl TransitionMatrix {
    /// Probability of moving from bin `from` to bin `to` (both 1-based).
    #[inline]
    pub fn get(&self, from: usize, to: usize) -> f64 {
        self.probs[(from - 1) * self.q + (to - 1)]
    }
}

/// The three aligned fields of one segment.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedSample {
    pub gasf: FieldMatrix,
    pub gadf: FieldMatrix,
    pub mtf: FieldMatrix,
    pub class_label: String,
    pub source_id: String,
}

impl EncodedSample {
    pub fn field(&self, kind: FieldKind) -> &FieldMatrix {
        match kind {
            FieldKind::Gasf => &self.gasf,
            FieldKind::Gadf => &self.gadf,
            FieldKind::Mtf => &self.mtf,
        }
    }

    pub fn side(&self) -> usize {
        self.gasf.n
    }
}

pub fn to_polar(rescaled: &[f64]) -> Result<PolarSeries> {
    if rescaled.is_empty() {
        return Err(Error::DegenerateInput("cannot encode an empty series".into()));
    }
    let n = rescaled.len();
    let mut psi = Vec::with_capacity(n);
    for (index, &value) in rescaled.iter().enumerate() {
        if !(value.abs() <= 1.0 + POLAR_CLAMP_TOLERANCE) {
            return Err(Error::Domain { index, value });
        }
        psi.push(value.clamp(-1.0, 1.0).acos());
    }
    let r = (1..=n).map(|i| i as f64 / n as f64).collect();
    Ok(PolarSeries { psi, r })
}

/// `cos(psi_i + psi_j)` for every pair of timestamps.
pub fn gasf(polar: &PolarSeries) -> FieldMatrix {
    let psi = &polar.psi;
    let n = psi.len();
    let mut values = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let v = (psi[i] + psi[j]).cos();
            values[i * n + j] = v;
            values[j * n + i] = v;
        }
    }
    FieldMatrix {
        kind: FieldKind::Gasf,
        n,
        values,
    }
}

/// `sin(psi_i - psi_j)` for every pair of timestamps.
pub fn gadf(polar: &PolarSeries) -> FieldMatrix {
    let psi = &polar.psi;
    let n = psi.len();
    let mut values = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let v = (psi[i] - psi[j]).sin();
            values[i * n + j] = v;
            values[j * n + i] = -v;
        }
    }
    FieldMatrix {
        kind: FieldKind::Gadf,
        n,
        values,
    }
}

/// Rank-based quantile bins in `1..=q`.
///
/// Samples are ordered by value, ties by position, and the ordering is cut into
/// `q` contiguous groups whose sizes differ by at most one.
pub fn quantile_bins(values: &[f64], q: usize) -> Result<Vec<usize>> {
    let n = values.len();
    if q < 2 {
        return Err(Error::InvalidBinning(format!("need at least 2 bins, got {q}")));
    }
    if n < 2 {
        return Err(Error::InvalidBinning(format!("series of length {n} is too short")));
    }
    if q > n {
        return Err(Error::InvalidBinning(format!(
            "{q} bins requested for {n} samples"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let mut bins = vec![0; n];
    for (rank, &idx) in order.iter().enumerate() {
        bins[idx] = rank * q / n + 1;
    }
    Ok(bins)
}

/// First-order transition probabilities between consecutive bins.
/// A bin with no outgoing transition gets the uniform row.
pub fn transition_matrix(bins: &[usize], q: usize) -> Result<TransitionMatrix> {
    if bins.len() < 2 {
        return Err(Error::InvalidBinning("need at least two bins".into()));
    }
    if let Some(&b) = bins.iter().find(|&&b| b == 0 || b > q) {
        return Err(Error::InvalidBinning(format!("bin {b} outside 1..={q}")));
    }
    let mut counts = vec![0usize; q * q];
    for pair in bins.windows(2) {
        counts[(pair[0] - 1) * q + (pair[1] - 1)] += 1;
    }
    let mut probs = vec![0.0; q * q];
    for a in 0..q {
        let row = &counts[a * q..(a + 1) * q];
        let total: usize = row.iter().sum();
        for b in 0..q {
            probs[a * q + b] = if total == 0 {
                1.0 / q as f64
            } else {
                row[b] as f64 / total as f64
            };
        }
    }
    Ok(TransitionMatrix { q, probs })
}

/// Markov transition field: entry `(i, j)` is the probability of moving from the
/// bin of sample `i` to the bin of sample `j`.
pub fn mtf(values: &[f64], q: usize) -> Result<FieldMatrix> {
    let bins = quantile_bins(values, q)?;
    let w = transition_matrix(&bins, q)?;
    let n = values.len();
    let mut out = Vec::with_capacity(n * n);
    for &bi in &bins {
        for &bj in &bins {
            out.push(w.get(bi, bj));
        }
    }
    Ok(FieldMatrix {
        kind: FieldKind::Mtf,
        n,
        values: out,
    })
}

/// GASF and GADF of a series that has not been rescaled yet.
pub fn gramian_fields(values: &[f64]) -> Result<(FieldMatrix, FieldMatrix)> {
    let polar = to_polar(&rescale_values(values)?)?;
    Ok((gasf(&polar), gadf(&polar)))
}

/// Resamples a normalized segment to side `m` and computes all three fields.
pub fn encode_sample(segment: &Segment, m: usize, q: usize) -> Result<EncodedSample> {
    check_encoding_params(m, q)?;
    let resampled = resample_to_length(segment, m)?;
    let (gasf, gadf) = gramian_fields(&resampled.values)?;
    let mtf = mtf(&resampled.values, q)?;
    Ok(EncodedSample {
        gasf,
        gadf,
        mtf,
        class_label: segment.class_label.clone(),
        source_id: segment.source_id.clone(),
    })
}

pub fn check_encoding_params(m: usize, q: usize) -> Result<()> {
    if m < 2 {
        return Err(Error::InvalidTarget(m));
    }
    if q < 2 || q > m {
        return Err(Error::InvalidBinning(format!(
            "bin count {q} must lie in 2..={m}"
        )));
    }
    Ok(())
}
