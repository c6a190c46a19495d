use boldfield::evaluation::{prepare_dataset, task_samples, FeatureSet, Task};
use boldfield::io::synthetic::SyntheticSpec;
use boldfield::io::{generate_synthetic, load_network, save_checkpoint};
use boldfield::nn::{build_model, predict, train, ModelKind, Network, Sample, Tensor, TrainConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn small_samples(features: FeatureSet, per_class: usize) -> Vec<Sample> {
    let segments = generate_synthetic(&SyntheticSpec::balanced(3, per_class, 13, 5).unwrap()).unwrap();
    task_samples(&prepare_dataset(&segments, 16, 8).unwrap(), Task::ThreeClass, features).unwrap()
}

fn config(kind: ModelKind, classes: usize, epochs: usize, seed: u64) -> TrainConfig {
    let mut cfg = TrainConfig::for_model(kind, classes);
    cfg.epochs = epochs;
    cfg.seed = seed;
    cfg
}

#[test]
fn same_seed_gives_identical_history() {
    for (kind, features) in [(ModelKind::SingleCnn, FeatureSet::Mtf), (ModelKind::BiLstm, FeatureSet::Raw)] {
        let data = small_samples(features, 6);
        let spec = build_model(kind, 16, 3).unwrap();
        let cfg = config(kind, 3, 3, 11);
        let (mut a, ha) = train(&spec, &data, &cfg).unwrap();
        let (mut b, hb) = train(&spec, &data, &cfg).unwrap();
        let bits = |h: &[boldfield::nn::EpochStats]| h.iter().map(|e| e.loss.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&ha), bits(&hb), "{kind}");
        assert_eq!(a.parameters(), b.parameters(), "{kind}");
    }
}

#[test]
fn different_seeds_differ() {
    let data = small_samples(FeatureSet::Gasf, 6);
    let spec = build_model(ModelKind::SingleCnn, 16, 3).unwrap();
    let (_, a) = train(&spec, &data, &config(ModelKind::SingleCnn, 3, 1, 1)).unwrap();
    let (_, b) = train(&spec, &data, &config(ModelKind::SingleCnn, 3, 1, 2)).unwrap();
    assert_ne!(a[0].loss, b[0].loss);
}

#[test]
fn zero_learning_rate_leaves_parameters_and_loss_flat() {
    for (kind, features) in [(ModelKind::ParallelCnn, FeatureSet::MtfGaf), (ModelKind::Lstm, FeatureSet::Raw)] {
        let data = small_samples(features, 4);
        let spec = build_model(kind, 16, 3).unwrap();
        let mut cfg = config(kind, 3, 3, 4);
        cfg.learning_rate = 0.0;
        let (mut net, history) = train(&spec, &data, &cfg).unwrap();
        let mut fresh = Network::new(&spec, &mut ChaCha8Rng::seed_from_u64(cfg.seed)).unwrap();
        assert_eq!(net.parameters(), fresh.parameters(), "{kind}");
        // dropout draws differ per epoch, so only the deterministic models are bitwise flat
        if kind == ModelKind::ParallelCnn {
            assert!(history.windows(2).all(|w| w[0].loss == w[1].loss), "{kind}");
        }
    }
}

#[test]
fn tied_branches_give_equal_features() {
    let spec = build_model(ModelKind::ParallelCnn, 16, 3).unwrap();
    let mut net = Network::new(&spec, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
    let first = net.branches_mut()[0].clone();
    net.branches_mut()[1] = first.clone();
    net.branches_mut()[2] = first;
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let x = Tensor::from_fn(&[2, 16, 16, 1], |_| rng.gen_range(-1.0..1.0));
    let features: Vec<Tensor> = net
        .branches_mut()
        .iter_mut()
        .map(|branch| {
            branch
                .iter_mut()
                .try_fold(x.clone(), |h, layer| layer.forward(&h, None))
                .unwrap()
        })
        .collect();
    assert_eq!(features[0].shape(), &[2, 576]);
    assert_eq!(features[0], features[1]);
    assert_eq!(features[1], features[2]);
}

#[test]
fn separable_two_class_set_is_learned() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let pattern: Vec<f64> = (0..256).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let data: Vec<Sample> = (0..200)
        .map(|i| {
            let label = i % 2;
            let sign = if label == 0 { 1.0 } else { -1.0 };
            let values = pattern.iter().map(|p| sign * p + rng.gen_range(-0.3..0.3)).collect();
            Sample {
                inputs: vec![Tensor::new(vec![16, 16, 1], values).unwrap()],
                label,
            }
        })
        .collect();
    let spec = build_model(ModelKind::SingleCnn, 16, 2).unwrap();
    let (_, history) = train(&spec, &data, &config(ModelKind::SingleCnn, 2, 30, 3)).unwrap();
    let best = history.iter().map(|h| h.accuracy).fold(0.0, f64::max);
    assert!(best >= 0.95, "best training accuracy {best}");
}

#[test]
fn checkpoint_round_trip_reproduces_predictions() {
    let data = small_samples(FeatureSet::Gadf, 4);
    let spec = build_model(ModelKind::SingleCnn, 16, 3).unwrap();
    let (mut net, _) = train(&spec, &data, &config(ModelKind::SingleCnn, 3, 2, 8)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("single.ckpt");
    save_checkpoint(&mut net, &path).unwrap();
    let mut back = load_network(&spec, &path).unwrap();
    let probe = &data[0].inputs;
    let (a, b) = (predict(&mut net, probe).unwrap(), predict(&mut back, probe).unwrap());
    assert_eq!(
        a.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
        b.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
    );

    let other = build_model(ModelKind::ParallelCnn, 16, 3).unwrap();
    assert!(load_network(&other, &path).is_err());
}
