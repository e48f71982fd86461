//! Synthetic labeled scenes: a class layout over the raster, one Wishart
//! class model per region.

use rand::Rng;

use crate::error::{Error, Result};

use super::wishart::{complex_cholesky3, sample_with_cholesky};
use super::{CoherencyPixel, CoherencyRaster};

/// How classes tile the raster.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Layout {
    /// Vertical stripes of equal width, class 1 leftmost.
    Stripes,
    /// A near-square grid of blocks, classes assigned round-robin.
    Blocks,
}

impl Layout {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "stripes" => Ok(Layout::Stripes),
            "blocks" => Ok(Layout::Blocks),
            other => Err(Error::InvalidConfig {
                reason: format!("unknown layout {other:?} (expected stripes or blocks)"),
            }),
        }
    }
}

/// Fixed class models: diagonal-dominant Hermitian matrices with distinct
/// diagonal scales and distinct off-diagonal phases. Seed-independent.
pub fn builtin_sigmas(k: usize) -> Result<Vec<CoherencyPixel>> {
    const SCALES: [f64; 8] = [0.8, 1.6, 2.8, 1.15, 2.2, 0.5, 3.5, 1.0];
    const PHASES: [f64; 8] = [0.3, 1.1, -0.8, 2.0, -1.7, 0.6, 2.6, -2.4];
    if k < 2 || k > SCALES.len() {
        return Err(Error::InvalidConfig {
            reason: format!("built-in sigma table supports 2..={} classes, got {k}", SCALES.len()),
        });
    }
    let mut out = Vec::with_capacity(k);
    for c in 0..k {
        let s = SCALES[c];
        let (d1, d2, d3) = (1.0 * s, 0.55 * s, 0.35 * s);
        let phi = PHASES[c];
        let delta = 0.9;
        let rho12 = 0.5 * (d1 * d2).sqrt();
        let rho13 = 0.3 * (d1 * d3).sqrt();
        let rho23 = 0.4 * (d2 * d3).sqrt();
        out.push(CoherencyPixel::new([
            d1,
            d2,
            d3,
            rho12 * phi.cos(),
            rho12 * phi.sin(),
            rho13 * (phi + delta).cos(),
            rho13 * (phi + delta).sin(),
            rho23 * (phi - delta).cos(),
            rho23 * (phi - delta).sin(),
        ]));
    }
    Ok(out)
}

fn class_at(layout: Layout, k: usize, h: usize, w: usize, y: usize, x: usize) -> usize {
    match layout {
        Layout::Stripes => (x * k / w).min(k - 1) + 1,
        Layout::Blocks => {
            let cols = (k as f64).sqrt().ceil() as usize;
            let rows = k.div_ceil(cols);
            let cx = (x * cols / w).min(cols - 1);
            let cy = (y * rows / h).min(rows - 1);
            (cy * cols + cx) % k + 1
        }
    }
}

/// Generates a fully labeled raster: every pixel Wishart-sampled from its
/// region's class model. Deterministic given the caller's rng.
pub fn generate_scene<R: Rng>(
    k: usize,
    class_sigmas: &[CoherencyPixel],
    layout: Layout,
    looks: usize,
    height: usize,
    width: usize,
    rng: &mut R,
) -> Result<CoherencyRaster> {
    if k < 2 {
        return Err(Error::InvalidConfig {
            reason: format!("need at least 2 classes, got {k}"),
        });
    }
    if class_sigmas.len() != k {
        return Err(Error::InvalidConfig {
            reason: format!("expected {k} class sigmas, got {}", class_sigmas.len()),
        });
    }
    let regions = match layout {
        Layout::Stripes => width,
        Layout::Blocks => {
            let cols = (k as f64).sqrt().ceil() as usize;
            let rows = k.div_ceil(cols);
            cols.min(width) * rows.min(height)
        }
    };
    if regions < k {
        return Err(Error::LayoutClassMismatch {
            layout_regions: regions,
            k,
        });
    }

    let factors: Vec<_> = class_sigmas
        .iter()
        .map(complex_cholesky3)
        .collect::<Result<_>>()?;

    let mut raster = CoherencyRaster::new(height, width);
    for y in 0..height {
        for x in 0..width {
            let class = class_at(layout, k, height, width, y, x);
            let idx = y * width + x;
            raster.pixels[idx] = sample_with_cholesky(&factors[class - 1], looks, rng);
            raster.labels[idx] = class as i16;
        }
    }
    Ok(raster)
}
