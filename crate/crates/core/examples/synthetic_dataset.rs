//! Regenerate the bundled face-like dataset.
//!
//! ```text
//! cargo run --example synthetic_dataset -- [out-dir]
//! ```
//!
//! Without an argument the files under `data/synthetic_faces` are rewritten.

use gkdcv::synthetic::{bundled_dir, SyntheticFaces};

fn main() -> gkdcv::Result<()> {
    let out = std::env::args().nth(1).map_or_else(bundled_dir, Into::into);
    let manifest = SyntheticFaces::default().write_with_manifest(&out, 3)?;
    println!(
        "{} images in {} classes under {}",
        manifest.entries().len(),
        manifest.num_classes(),
        out.display()
    );
    Ok(())
}
