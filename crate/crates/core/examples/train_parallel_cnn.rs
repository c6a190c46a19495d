// Train the three-branch CNN on synthetic data, checkpoint it, and reload it.

use boldfield::evaluation::{prepare_dataset, task_samples, FeatureSet, Task};
use boldfield::io::synthetic::SyntheticSpec;
use boldfield::io::{generate_synthetic, load_network, save_checkpoint};
use boldfield::nn::{build_model, predict_classes, train, ModelKind, TrainConfig};

pub fn run_example() -> boldfield::Result<f64> {
    let segments = generate_synthetic(&SyntheticSpec::balanced(3, 12, 13, 7)?)?;
    let prepared = prepare_dataset(&segments, 16, 8)?;
    let samples = task_samples(&prepared, Task::ThreeClass, FeatureSet::MtfGaf)?;

    let spec = build_model(ModelKind::ParallelCnn, 16, 3)?;
    let mut cfg = TrainConfig::for_model(ModelKind::ParallelCnn, 3);
    cfg.epochs = 4;
    cfg.seed = 7;
    let (mut net, history) = train(&spec, &samples, &cfg)?;
    for h in &history {
        println!("epoch {}  loss {:.4}  accuracy {:.3}", h.epoch + 1, h.loss, h.accuracy);
    }

    let path = std::env::temp_dir().join("boldfield-parallel.ckpt");
    save_checkpoint(&mut net, &path)?;
    let mut restored = load_network(&spec, &path)?;
    let a = predict_classes(&mut net, &samples, 8)?;
    let b = predict_classes(&mut restored, &samples, 8)?;
    assert_eq!(a, b);
    println!("{} parameters, checkpoint at {}", net.parameter_count(), path.display());
    Ok(history.last().map_or(f64::NAN, |h| h.loss))
}

#[allow(dead_code)]
fn main() -> boldfield::Result<()> {
    run_example().map(|_| ())
}
