//! 8-bit grayscale PNG rendering of fields.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use crate::encoding::{FieldKind, FieldMatrix};
use crate::error::{Error, Result};

/// Pixel intensities: GASF/GADF map [-1, 1] onto [0, 255], MTF maps [0, 1] onto [0, 255].
pub fn field_to_gray(field: &FieldMatrix) -> Vec<u8> {
    let (lo, hi) = match field.kind {
        FieldKind::Gasf | FieldKind::Gadf => (-1.0, 1.0),
        FieldKind::Mtf => (0.0, 1.0),
    };
    field
        .values
        .iter()
        .map(|&v| ((v - lo) / (hi - lo) * 255.0).round().clamp(0.0, 255.0) as u8)
        .collect()
}

pub fn export_png(field: &FieldMatrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut encoder = png::Encoder::new(BufWriter::new(file), field.n as u32, field.n as u32);
    encoder.set_color(png::ColorType::Grayscale);
    encoder.set_depth(png::BitDepth::Eight);
    let to_err = |e: png::EncodingError| Error::Format(format!("{}: {e}", path.display()));
    let mut writer = encoder.write_header().map_err(to_err)?;
    writer.write_image_data(&field_to_gray(field)).map_err(to_err)?;
    writer.finish().map_err(to_err)
}
