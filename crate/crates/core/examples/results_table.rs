// Every model/feature row on every task, laid out like the published results table.

use boldfield::cli::render_table;
use boldfield::evaluation::{run_matrix, table_rows, ExperimentConfig, MatrixReport, Task};
use boldfield::io::generate_synthetic;
use boldfield::io::synthetic::SyntheticSpec;

pub fn run_example() -> boldfield::Result<MatrixReport> {
    let segments = generate_synthetic(&SyntheticSpec::balanced(3, 6, 13, 7)?)?;
    let cfg = ExperimentConfig {
        k: 2,
        epochs: 1,
        seed: 7,
        ..Default::default()
    };
    let report = run_matrix(&segments, &Task::ALL, &table_rows(), &cfg)?;
    print!("{}", render_table(&report));
    for cell in report.cells.iter().take(4) {
        println!(
            "{} {} {}: published {:?}",
            cell.model, cell.features, cell.task, cell.reference_accuracy
        );
    }
    Ok(report)
}

#[allow(dead_code)]
fn main() -> boldfield::Result<()> {
    run_example().map(|_| ())
}
