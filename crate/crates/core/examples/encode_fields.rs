// Encode one series as GASF, GADF and MTF images and write them to disk.

use std::path::PathBuf;

use boldfield::encoding::{encode_sample, FieldKind};
use boldfield::io::{export_png, load_field, save_field};
use boldfield::series::Segment;

pub fn run_example() -> boldfield::Result<PathBuf> {
    let values: Vec<f64> = (0..13).map(|t| (0.6 * t as f64).sin() + 0.1 * t as f64).collect();
    let seg = Segment::new(values, "imagenet", "demo")?;
    let sample = encode_sample(&seg, 16, 8)?;

    let dir = std::env::temp_dir().join("boldfield-encode-example");
    std::fs::create_dir_all(&dir).map_err(|e| boldfield::Error::io(&dir, e))?;
    for kind in FieldKind::ALL {
        let field = sample.field(kind);
        let base = dir.join(kind.name());
        save_field(field, base.with_extension("fld"))?;
        export_png(field, base.with_extension("png"))?;
        let back = load_field(base.with_extension("fld"))?;
        assert_eq!(&back, field);
        println!("{:>4}: top-left {:+.3}, written to {}", kind.name(), field.get(0, 0), base.display());
    }
    Ok(dir)
}

#[allow(dead_code)]
fn main() -> boldfield::Result<()> {
    run_example().map(|_| ())
}
