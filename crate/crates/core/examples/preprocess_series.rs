// Detrend, z-score and split a labelled run, then resample each segment.

use boldfield::series::{normalize, resample_to_length, segment_by_label, Segment, TimeSeries};

pub fn run_example() -> boldfield::Result<Vec<Segment>> {
    // a drifting run whose stimulus blocks alternate between two datasets
    let values: Vec<f64> = (0..12).map(|t| 0.3 * t as f64 + (t as f64 * 1.3).sin()).collect();
    let labels = ["coco", "coco", "coco", "sun", "sun", "sun"]
        .iter()
        .cycle()
        .take(12)
        .map(|s| s.to_string())
        .collect();

    let clean = normalize(&values)?;
    let mean = clean.iter().sum::<f64>() / clean.len() as f64;
    println!("normalized mean {mean:.2e}");

    let run = TimeSeries::with_labels(clean, labels)?;
    let mut out = Vec::new();
    for seg in segment_by_label(&run)? {
        let resampled = resample_to_length(&seg, 8)?;
        println!("{}: {} samples -> {:?}", seg.class_label, seg.values.len(), resampled.values.len());
        out.push(resampled);
    }
    Ok(out)
}

#[allow(dead_code)]
fn main() -> boldfield::Result<()> {
    run_example().map(|_| ())
}
