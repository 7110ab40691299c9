//! Low-energized block features.
//!
//! The magnitude planes are summed into one fused image. The fused image is
//! tiled into `omega` x `omega` windows (trailing rows and columns that do not
//! fill a window are ignored). For each window, row-major over the window grid:
//!
//! * if the window minimum is at most the fused image's global mean, the
//!   `c` x `c` block centered on the minimum is read from the fused image. The
//!   block may reach into neighbouring windows; pixels outside the image are
//!   replaced by the global mean.
//! * otherwise the window contributes a block filled with the global mean.
//!
//! Blocks are flattened row-major and concatenated.

use crate::error::{Error, Result};
use crate::gabor::ResponseStack;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockConfig {
    /// Window side.
    pub omega: usize,
    /// Block side; odd and below `omega / 2`.
    pub block: usize,
}

impl Default for BlockConfig {
    fn default() -> Self {
        Self { omega: 7, block: 3 }
    }
}

impl BlockConfig {
    pub fn validate(&self) -> Result<()> {
        if self.block % 2 == 1 && 2 * self.block < self.omega {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "block side {} must be odd and less than half the window side {}",
                self.block, self.omega
            )))
        }
    }

    /// `(window rows, window cols)` for an image of the given size.
    pub fn window_grid(&self, height: usize, width: usize) -> (usize, usize) {
        (height / self.omega, width / self.omega)
    }

    pub fn feature_len(&self, height: usize, width: usize) -> usize {
        let (rows, cols) = self.window_grid(height, width);
        rows * cols * self.block * self.block
    }
}

/// Pointwise sum of all magnitude planes together with its mean.
#[derive(Debug, Clone, PartialEq)]
pub struct FusedImage {
    height: usize,
    width: usize,
    grid: Vec<f64>,
    global_mean: f64,
}

impl FusedImage {
    pub fn new(height: usize, width: usize, grid: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::InvalidParameter("empty fused image".into()));
        }
        if grid.len() != height * width {
            return Err(Error::dims(height * width, grid.len(), "fused image"));
        }
        if grid.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidParameter(
                "fused image values must be finite and non-negative".into(),
            ));
        }
        let global_mean = grid.iter().sum::<f64>() / grid.len() as f64;
        Ok(Self {
            height,
            width,
            grid,
            global_mean,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn global_mean(&self) -> f64 {
        self.global_mean
    }

    #[inline]
    fn get(&self, row: usize, col: usize) -> f64 {
        self.grid[row * self.width + col]
    }
}

pub fn fuse(stack: &ResponseStack) -> Result<FusedImage> {
    if stack.is_empty() {
        return Err(Error::InvalidParameter("empty response stack".into()));
    }
    let mut grid = vec![0.0; stack.height() * stack.width()];
    for plane in stack.planes() {
        for (acc, v) in grid.iter_mut().zip(plane) {
            *acc += v;
        }
    }
    FusedImage::new(stack.height(), stack.width(), grid)
}

/// How a window's block was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockKind {
    /// Block lies inside the image.
    Interior,
    /// Block crosses the image border; outside pixels hold the global mean.
    BorderFilled,
    /// Window minimum above the global mean; block is all global mean.
    Pseudo,
}

/// Concatenated block values for one image.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    values: Vec<f64>,
    num_windows: usize,
    block: usize,
}

impl FeatureVector {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn num_windows(&self) -> usize {
        self.num_windows
    }

    pub fn block_side(&self) -> usize {
        self.block
    }

    /// Values of window `i`'s block, row-major.
    pub fn window(&self, i: usize) -> &[f64] {
        let n = self.block * self.block;
        &self.values[i * n..(i + 1) * n]
    }
}

pub fn extract(fused: &FusedImage, cfg: &BlockConfig) -> Result<FeatureVector> {
    Ok(extract_with_kinds(fused, cfg)?.0)
}

/// As [`extract`], also reporting which rule produced each block.
pub fn extract_with_kinds(
    fused: &FusedImage,
    cfg: &BlockConfig,
) -> Result<(FeatureVector, Vec<BlockKind>)> {
    cfg.validate()?;
    let (win_rows, win_cols) = cfg.window_grid(fused.height, fused.width);
    if win_rows == 0 || win_cols == 0 {
        return Err(Error::InvalidParameter(format!(
            "image {}x{} is smaller than one {}x{} window",
            fused.height, fused.width, cfg.omega, cfg.omega
        )));
    }
    let mean = fused.global_mean;
    let half = (cfg.block / 2) as isize;
    let mut values = Vec::with_capacity(cfg.feature_len(fused.height, fused.width));
    let mut kinds = Vec::with_capacity(win_rows * win_cols);

    for wr in 0..win_rows {
        for wc in 0..win_cols {
            let (top, left) = (wr * cfg.omega, wc * cfg.omega);
            // first minimum in row-major order wins ties
            let mut best = (top, left, fused.get(top, left));
            for r in top..top + cfg.omega {
                for c in left..left + cfg.omega {
                    let v = fused.get(r, c);
                    if v < best.2 {
                        best = (r, c, v);
                    }
                }
            }
            let (min_r, min_c, min_v) = best;
            if min_v > mean {
                values.extend(std::iter::repeat_n(mean, cfg.block * cfg.block));
                kinds.push(BlockKind::Pseudo);
                continue;
            }
            let mut clipped = false;
            for dr in -half..=half {
                for dc in -half..=half {
                    let (r, c) = (min_r as isize + dr, min_c as isize + dc);
                    if r < 0 || c < 0 || r >= fused.height as isize || c >= fused.width as isize {
                        clipped = true;
                        values.push(mean);
                    } else {
                        values.push(fused.get(r as usize, c as usize));
                    }
                }
            }
            kinds.push(if clipped {
                BlockKind::BorderFilled
            } else {
                BlockKind::Interior
            });
        }
    }
    Ok((
        FeatureVector {
            values,
            num_windows: win_rows * win_cols,
            block: cfg.block,
        },
        kinds,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gabor::GaborBank;
    use crate::image_io::GrayImage;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn fused_from(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> f64) -> FusedImage {
        let mut grid = Vec::new();
        for r in 0..height {
            for c in 0..width {
                grid.push(f(r, c));
            }
        }
        FusedImage::new(height, width, grid).unwrap()
    }

    #[test]
    fn config_invariant() {
        assert!(BlockConfig { omega: 7, block: 3 }.validate().is_ok());
        assert!(BlockConfig { omega: 7, block: 4 }.validate().is_err());
        assert!(BlockConfig { omega: 6, block: 3 }.validate().is_err());
        assert!(BlockConfig { omega: 3, block: 1 }.validate().is_ok());
    }

    #[test]
    fn default_face_dimensions() {
        let cfg = BlockConfig::default();
        assert_eq!(cfg.window_grid(92, 112), (13, 16));
        assert_eq!(cfg.feature_len(92, 112), 1872);
        let fused = fused_from(92, 112, |r, c| ((r * 31 + c * 17) % 23) as f64);
        let fv = extract(&fused, &cfg).unwrap();
        assert_eq!(fv.num_windows(), 208);
        assert_eq!(fv.len(), 1872);
    }

    #[test]
    fn constant_image_gives_constant_features() {
        let fused = fused_from(30, 23, |_, _| 2.5);
        let fv = extract(&fused, &BlockConfig::default()).unwrap();
        assert_eq!(fv.len(), 4 * 3 * 9);
        assert!(fv.values().iter().all(|&v| v == 2.5));
    }

    #[test]
    fn window_above_mean_becomes_pseudo_block() {
        // left window all 10, right window all 0: mean 5, left min 10 > 5
        let fused = fused_from(7, 14, |_, c| if c < 7 { 10.0 } else { 0.0 });
        let (fv, kinds) = extract_with_kinds(&fused, &BlockConfig::default()).unwrap();
        assert_eq!(kinds[0], BlockKind::Pseudo);
        assert_eq!(fv.window(0), &[5.0; 9]);
        // right window: argmin is (0, 7), block crosses the top border
        assert_eq!(kinds[1], BlockKind::BorderFilled);
        assert_eq!(fv.window(1), &[5.0, 5.0, 5.0, 10.0, 0.0, 0.0, 10.0, 0.0, 0.0]);
    }

    #[test]
    fn fuse_sums_planes() {
        let img = GrayImage::from_fn(20, 20, |r, c| ((r * 3 + c) % 7) as f64 / 7.0).unwrap();
        let stack = GaborBank::new(Default::default(), 5).unwrap().respond(&img).unwrap();
        let fused = fuse(&stack).unwrap();
        let mut total = 0.0;
        for (i, v) in fused.grid().iter().enumerate() {
            let expected: f64 = stack.planes().iter().map(|p| p[i]).sum();
            assert!((v - expected).abs() <= 1e-12 * expected.max(1.0));
            total += v;
        }
        assert!((fused.global_mean() - total / 400.0).abs() < 1e-12);
    }

    #[test]
    fn window_smaller_than_image_required() {
        let fused = fused_from(5, 20, |_, _| 1.0);
        assert!(extract(&fused, &BlockConfig::default()).is_err());
    }

    proptest! {
        #[test]
        fn length_and_totality(h in 7usize..40, w in 7usize..40, seed in any::<u64>()) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let fused = fused_from(h, w, |_, _| rng_value(&mut rng));
            let cfg = BlockConfig::default();
            let (fv, kinds) = extract_with_kinds(&fused, &cfg).unwrap();
            prop_assert_eq!(fv.len(), (h / 7) * (w / 7) * 9);
            prop_assert_eq!(kinds.len(), (h / 7) * (w / 7));
            prop_assert!(fv.values().iter().all(|v| v.is_finite() && *v >= 0.0));
            let again = extract(&fused, &cfg).unwrap();
            prop_assert_eq!(fv, again);
        }
    }

    fn rng_value(rng: &mut rand_chacha::ChaCha8Rng) -> f64 {
        rng.gen_range(0.0..10.0)
    }
}
