//! Kernel matrices for the available kernel families.
//!
//! Builds a small Gram matrix with each kernel and prints it with and
//! without double centering.

use gkdcv::kernel::{center, gram};
use gkdcv::KernelSpec;

fn main() -> gkdcv::Result<()> {
    let xs = vec![
        vec![0.0, 0.0, 1.0],
        vec![0.5, 0.1, 1.0],
        vec![2.0, 1.5, 0.0],
        vec![2.2, 1.4, 0.3],
    ];
    let kernels = [
        ("cosine", KernelSpec::cosine()),
        ("cosine, raw", KernelSpec::cosine().normalized(false)),
        ("rbf sigma=1", KernelSpec::rbf(1.0)),
        ("poly 2", KernelSpec::polynomial(2, 1.0)),
    ];
    for (name, spec) in kernels {
        let spec = spec.resolve(&xs)?;
        let g = gram(&spec, &xs)?;
        println!("{name}:{}", g.entries());
        println!("{name}, centered:{}", center(&g)?.entries());
    }
    Ok(())
}
