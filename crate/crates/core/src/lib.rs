//! Encode BOLD time series as Gramian angular (GASF/GADF) and Markov
//! transition (MTF) fields and classify them with single-branch CNNs,
//! a three-branch parallel CNN, or LSTM/Bi-LSTM baselines on the raw series.
//!
//! The pipeline runs in this order:
//!
//! 1. [`series`]: detrend and z-score each series, split by label, resample.
//! 2. [`encoding`]: GASF, GADF and MTF of every segment.
//! 3. [`nn`]: build and train a model.
//! 4. [`evaluation`]: stratified k-fold evaluation over the task/model matrix.
//! 5. [`io`]: datasets, field files, checkpoints, PNGs, reports and synthetic data.

pub mod cli;
pub mod encoding;
pub mod error;
pub mod evaluation;
pub mod io;
pub mod nn;
pub mod series;

pub use error::{Error, Result};
