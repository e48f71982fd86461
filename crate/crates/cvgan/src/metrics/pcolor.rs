//! False-color rendering: the real diagonal entries (T11, T22, T33) map to
//! (R, G, B) after per-channel percentile clipping.

use std::path::Path;

use crate::data::CoherencyRaster;
use crate::error::{Error, Result};

const LOW_PCT: f64 = 0.02;
const HIGH_PCT: f64 = 0.98;

/// Value at the given fraction of the sorted slice (nearest-rank).
fn percentile(sorted: &[f64], fraction: f64) -> f64 {
    let idx = ((sorted.len() as f64 - 1.0) * fraction).round() as usize;
    sorted[idx.min(sorted.len() - 1)]
}

fn scale_channel(values: &[f64]) -> Vec<u8> {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite diagonals"));
    let lo = percentile(&sorted, LOW_PCT);
    let hi = percentile(&sorted, HIGH_PCT);
    let span = hi - lo;
    values
        .iter()
        .map(|&v| {
            if span <= 0.0 {
                // constant channel: everything clips to mid-gray
                128u8
            } else {
                let t = ((v - lo) / span).clamp(0.0, 1.0);
                (t * 255.0).round() as u8
            }
        })
        .collect()
}

/// Renders the raster diagonals into a binary PPM (P6, maxval 255).
pub fn pcolor_ppm(raster: &CoherencyRaster) -> Result<Vec<u8>> {
    if raster.pixels.is_empty() {
        return Err(Error::EmptySample { what: "pcolor" });
    }
    let n = raster.pixels.len();
    let mut channels = Vec::with_capacity(3);
    for c in 0..3 {
        let vals: Vec<f64> = raster.pixels.iter().map(|p| p.entries[c]).collect();
        channels.push(scale_channel(&vals));
    }
    let mut out = format!("P6\n{} {}\n255\n", raster.width, raster.height).into_bytes();
    out.reserve(3 * n);
    for i in 0..n {
        out.push(channels[0][i]);
        out.push(channels[1][i]);
        out.push(channels[2][i]);
    }
    Ok(out)
}

pub fn write_ppm(raster: &CoherencyRaster, path: &Path) -> Result<()> {
    std::fs::write(path, pcolor_ppm(raster)?)?;
    Ok(())
}
