// Generate a synthetic three-class dataset, save it as CSV and read it back.

use boldfield::io::synthetic::{bold5000_proportions, SyntheticSpec};
use boldfield::io::{generate_synthetic, load_dataset, save_dataset};

pub fn run_example() -> boldfield::Result<usize> {
    let spec = SyntheticSpec::balanced(3, 20, 13, 7)?;
    let segments = generate_synthetic(&spec)?;
    let path = std::env::temp_dir().join("boldfield-synth-example.csv");
    save_dataset(&segments, &path)?;
    let back = load_dataset(&path)?;
    assert_eq!(back, segments);

    for c in &spec.classes {
        println!("{:<9} ar {:.1} freq {:.1} noise {:.1}", c.label, c.ar, c.frequency, c.noise);
    }
    println!("{} rows in {}", back.len(), path.display());
    println!("class sizes at the original study's mix of 300: {:?}", bold5000_proportions(300));
    Ok(back.len())
}

#[allow(dead_code)]
fn main() -> boldfield::Result<()> {
    run_example().map(|_| ())
}
