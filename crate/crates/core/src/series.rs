//! Time-series containers and the preprocessing chain applied before encoding:
//! linear detrend, z-score, min-max rescale, label-driven segmentation and
//! resampling to a fixed length.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An ordered run of samples, optionally tagged per sample with a class label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    values: Vec<f64>,
    labels: Option<Vec<String>>,
    source_id: String,
}

impl TimeSeries {
    pub fn new(values: Vec<f64>) -> Self {
        Self {
            values,
            labels: None,
            source_id: String::new(),
        }
    }

    /// Builds a labelled series. Fails if the label count differs from the sample count.
    pub fn with_labels(values: Vec<f64>, labels: Vec<String>) -> Result<Self> {
        if labels.len() != values.len() {
            return Err(Error::DegenerateInput(format!(
                "{} labels for {} samples",
                labels.len(),
                values.len()
            )));
        }
        Ok(Self {
            values,
            labels: Some(labels),
            source_id: String::new(),
        })
    }

    pub fn with_source_id(mut self, source_id: impl Into<String>) -> Self {
        self.source_id = source_id.into();
        self
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn source_id(&self) -> &str {
        &self.source_id
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn map_values(&self, values: Vec<f64>) -> Self {
        Self {
            values,
            labels: self.labels.clone(),
            source_id: self.source_id.clone(),
        }
    }
}

/// The part of a run that belongs to one stimulus class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub values: Vec<f64>,
    pub class_label: String,
    pub source_id: String,
}

impl Segment {
    pub fn new(
        values: Vec<f64>,
        class_label: impl Into<String>,
        source_id: impl Into<String>,
    ) -> Result<Self> {
        let class_label = class_label.into();
        if values.len() < 2 {
            return Err(Error::DegenerateSegment {
                label: class_label,
                len: values.len(),
            });
        }
        Ok(Self {
            values,
            class_label,
            source_id: source_id.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn require_len(values: &[f64]) -> Result<()> {
    if values.len() < 2 {
        return Err(Error::DegenerateInput(format!(
            "series has {} samples, need at least 2",
            values.len()
        )));
    }
    Ok(())
}

fn is_constant(values: &[f64]) -> bool {
    values.iter().all(|&v| v == values[0])
}

/// Residuals of the least-squares line fitted over sample index.
pub fn detrend_values(values: &[f64]) -> Result<Vec<f64>> {
    require_len(values)?;
    let n = values.len() as f64;
    let x_mean = (n - 1.0) / 2.0;
    let y_mean = values.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, &y) in values.iter().enumerate() {
        let dx = i as f64 - x_mean;
        sxy += dx * (y - y_mean);
        sxx += dx * dx;
    }
    let slope = sxy / sxx;
    Ok(values
        .iter()
        .enumerate()
        .map(|(i, &y)| y - y_mean - slope * (i as f64 - x_mean))
        .collect())
}

/// Z-score with the population standard deviation. Constant input maps to zeros.
pub fn zscore_values(values: &[f64]) -> Result<Vec<f64>> {
    require_len(values)?;
    if is_constant(values) {
        return Ok(vec![0.0; values.len()]);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    Ok(values.iter().map(|v| (v - mean) / std).collect())
}

/// Affine map of the value range onto [-1, 1]. Constant input maps to zeros.
pub fn rescale_values(values: &[f64]) -> Result<Vec<f64>> {
    require_len(values)?;
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == min {
        return Ok(vec![0.0; values.len()]);
    }
    let range = max - min;
    Ok(values
        .iter()
        .map(|v| 2.0 * (v - min) / range - 1.0)
        .collect())
}

/// Linear interpolation onto `m` equally spaced points spanning the original index range.
pub fn resample_values(values: &[f64], m: usize) -> Result<Vec<f64>> {
    if m < 2 {
        return Err(Error::InvalidTarget(m));
    }
    require_len(values)?;
    let n = values.len();
    if n == m {
        return Ok(values.to_vec());
    }
    let last = n - 1;
    Ok((0..m)
        .map(|j| {
            let t = (j * last) as f64 / (m - 1) as f64;
            let lo = t.floor() as usize;
            if lo >= last {
                return values[last];
            }
            let frac = t - lo as f64;
            if frac == 0.0 {
                values[lo]
            } else {
                values[lo] + frac * (values[lo + 1] - values[lo])
            }
        })
        .collect())
}

pub fn detrend_linear(series: &TimeSeries) -> Result<TimeSeries> {
    Ok(series.map_values(detrend_values(series.values())?))
}

pub fn zscore(series: &TimeSeries) -> Result<TimeSeries> {
    Ok(series.map_values(zscore_values(series.values())?))
}

pub fn rescale_minmax(series: &TimeSeries) -> Result<TimeSeries> {
    Ok(series.map_values(rescale_values(series.values())?))
}

/// Detrend followed by z-score; the normalization every series gets before it is split or encoded.
pub fn normalize(values: &[f64]) -> Result<Vec<f64>> {
    zscore_values(&detrend_values(values)?)
}

/// Splits a labelled run into one segment per distinct label, in order of first appearance.
pub fn segment_by_label(series: &TimeSeries) -> Result<Vec<Segment>> {
    let labels = series
        .labels()
        .ok_or_else(|| Error::DegenerateInput("series carries no labels".into()))?;
    let mut order: Vec<&str> = Vec::new();
    let mut buckets: Vec<Vec<f64>> = Vec::new();
    for (&v, label) in series.values().iter().zip(labels) {
        match order.iter().position(|l| *l == label.as_str()) {
            Some(k) => buckets[k].push(v),
            None => {
                order.push(label);
                buckets.push(vec![v]);
            }
        }
    }
    order
        .into_iter()
        .zip(buckets)
        .map(|(label, values)| Segment::new(values, label, series.source_id()))
        .collect()
}

pub fn resample_to_length(segment: &Segment, m: usize) -> Result<Segment> {
    Ok(Segment {
        values: resample_values(&segment.values, m)?,
        class_label: segment.class_label.clone(),
        source_id: segment.source_id.clone(),
    })
}
