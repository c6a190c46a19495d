//! File formats and data sources: the comma-separated dataset, binary field
//! and checkpoint files, grayscale PNG export, JSON reports, and the
//! synthetic BOLD-like generator.

pub mod checkpoint;
pub mod dataset;
pub mod field;
pub mod image;
pub mod report;
pub mod synthetic;

pub use checkpoint::{load_checkpoint, load_network, save_checkpoint, Checkpoint};
pub use dataset::{load_dataset, parse_dataset, render_dataset, save_dataset};
pub use field::{decode_field, encode_field, load_field, save_field};
pub use image::{export_png, field_to_gray};
pub use report::{render_report, save_report};
pub use synthetic::{generate_synthetic, ClassParams, SyntheticSpec};
