//! Gabor magnitude responses of one image.
//!
//! ```text
//! cargo run --example gabor_responses -- [image]
//! ```
//!
//! Prints the DC ratio of every kernel and the mean magnitude of each plane.

use gkdcv::synthetic::bundled_dir;
use gkdcv::{load_image, GaborBank, GaborParams};

fn main() -> gkdcv::Result<()> {
    let path = std::env::args()
        .nth(1)
        .map_or_else(|| bundled_dir().join("s01/01.pgm"), Into::into);
    let img = load_image(&path)?;
    let bank = GaborBank::new(GaborParams::default(), 33)?;

    println!("kernels (nu, mu, k, phi, dc ratio)");
    for k in bank.kernels() {
        println!(
            "  {} {}  k={:.4}  phi={:.4}  dc={:.1e}",
            k.nu(),
            k.mu(),
            k.wave_number(),
            k.orientation(),
            k.dc_ratio()
        );
    }

    let stack = bank.respond(&img)?;
    println!("{} planes of {}x{}", stack.len(), stack.height(), stack.width());
    for nu in 0..stack.num_scales() {
        let means: Vec<String> = (0..stack.num_orientations())
            .map(|mu| {
                let plane = stack.plane(nu, mu);
                format!("{:8.2}", plane.iter().sum::<f64>() / plane.len() as f64)
            })
            .collect();
        println!("  scale {nu}: {}", means.join(" "));
    }
    Ok(())
}
