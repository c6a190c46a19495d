macro_rules! example {
    ($module:ident, $file:literal) => {
        #[allow(dead_code)]
        mod $module {
            include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/", $file));
        }
    };
}

example!(preprocess, "preprocess_series.rs");
example!(encode, "encode_fields.rs");
example!(synth, "synth_dataset.rs");
example!(train_parallel, "train_parallel_cnn.rs");
example!(kfold, "kfold_eval.rs");
example!(table, "results_table.rs");
example!(gradient, "gradient_check.rs");

#[test]
fn preprocess_example_runs() {
    let segs = preprocess::run_example().expect("preprocess example should run");
    assert_eq!(segs.len(), 2);
    assert!(segs.iter().all(|s| s.values.len() == 8));
}

#[test]
fn encode_example_runs() {
    let dir = encode::run_example().expect("encode example should run");
    for name in ["gasf", "gadf", "mtf"] {
        assert!(dir.join(format!("{name}.png")).exists());
    }
}

#[test]
fn synth_example_runs() {
    assert_eq!(synth::run_example().expect("synth example should run"), 60);
}

#[test]
fn train_example_runs() {
    let loss = train_parallel::run_example().expect("training example should run");
    assert!(loss.is_finite());
}

#[test]
fn kfold_example_runs() {
    let report = kfold::run_example().expect("k-fold example should run");
    assert_eq!(report.fold_accuracy.len(), 3);
    let total: usize = report.confusion.iter().flatten().sum();
    assert_eq!(total, 18);
}

#[test]
fn table_example_runs() {
    assert_eq!(table::run_example().expect("table example should run").cells.len(), 24);
}

#[test]
fn gradient_example_runs() {
    assert!(gradient::run_example().expect("gradient example should run") < 1e-4);
}
