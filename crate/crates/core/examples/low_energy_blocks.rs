//! Low-energy block selection on a fused Gabor image.
//!
//! Counts how often each block rule fired and shows the first few windows.

use gkdcv::blocks::{extract_with_kinds, BlockKind};
use gkdcv::synthetic::bundled_dir;
use gkdcv::{fuse, load_image, BlockConfig, GaborBank, GaborParams};

fn main() -> gkdcv::Result<()> {
    let img = load_image(bundled_dir().join("s02/01.pgm"))?;
    let stack = GaborBank::new(GaborParams::default(), 33)?.respond(&img)?;
    let fused = fuse(&stack)?;
    let cfg = BlockConfig::default();

    let (features, kinds) = extract_with_kinds(&fused, &cfg)?;
    let (rows, cols) = cfg.window_grid(fused.height(), fused.width());
    println!("global mean {:.3}", fused.global_mean());
    println!("{rows}x{cols} windows, {} features", features.len());
    for kind in [BlockKind::Interior, BlockKind::BorderFilled, BlockKind::Pseudo] {
        let n = kinds.iter().filter(|&&k| k == kind).count();
        println!("  {kind:?}: {n}");
    }
    for (i, kind) in kinds.iter().enumerate().take(3) {
        let block: Vec<String> = features.window(i).iter().map(|v| format!("{v:.1}")).collect();
        println!("window {i} ({kind:?}): [{}]", block.join(", "));
    }
    Ok(())
}
