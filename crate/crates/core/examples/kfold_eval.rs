// Stratified k-fold evaluation of a single-field CNN, printed as JSON.

use boldfield::evaluation::{run_experiment, ExperimentConfig, ExperimentReport, FeatureSet, Task};
use boldfield::io::generate_synthetic;
use boldfield::io::render_report;
use boldfield::io::synthetic::SyntheticSpec;
use boldfield::nn::ModelKind;

pub fn run_example() -> boldfield::Result<ExperimentReport> {
    let segments = generate_synthetic(&SyntheticSpec::balanced(3, 9, 13, 7)?)?;
    let cfg = ExperimentConfig {
        k: 3,
        epochs: 3,
        seed: 7,
        ..Default::default()
    };
    let report = run_experiment(&segments, Task::CocoVsSun, ModelKind::SingleCnn, FeatureSet::Gadf, &cfg)?;
    print!("{}", render_report(&report)?);
    Ok(report)
}

#[allow(dead_code)]
fn main() -> boldfield::Result<()> {
    run_example().map(|_| ())
}
