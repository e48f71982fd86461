//! Sliding-window patch extraction.

use crate::ctensor::ComplexTensor;
use crate::error::{Error, Result};

use super::{CoherencyPixel, CoherencyRaster};

/// One network input: six complex channels (T11, T22, T33, T12, T13, T23)
/// over a P x P window; the diagonal channels carry zero imaginary parts.
/// The label is the label of the window's center pixel (0 = unlabeled).
#[derive(Clone, Debug)]
pub struct Patch {
    pub data: ComplexTensor,
    pub label: usize,
}

impl Patch {
    /// Rebuilds the coherency matrix at a patch position from the six
    /// channels (inverse of extraction).
    pub fn pixel_at(&self, y: usize, x: usize) -> CoherencyPixel {
        let d = &self.data;
        CoherencyPixel::new([
            d.re[[0, y, x]],
            d.re[[1, y, x]],
            d.re[[2, y, x]],
            d.re[[3, y, x]],
            d.im[[3, y, x]],
            d.re[[4, y, x]],
            d.im[[4, y, x]],
            d.re[[5, y, x]],
            d.im[[5, y, x]],
        ])
    }
}

/// Extracts sliding-window patches with the given stride. The patch label
/// is the center pixel's label; patches centered on unlabeled pixels carry
/// label 0.
pub fn extract_patches(
    raster: &CoherencyRaster,
    patch_size: usize,
    stride: usize,
) -> Result<Vec<Patch>> {
    if patch_size == 0 || stride == 0 {
        return Err(Error::InvalidConfig {
            reason: "patch size and stride must be positive".into(),
        });
    }
    if raster.height < patch_size || raster.width < patch_size {
        return Err(Error::RasterTooSmall {
            h: raster.height,
            w: raster.width,
            patch: patch_size,
        });
    }
    raster.validate_alignment()?;

    let ys = (raster.height - patch_size) / stride + 1;
    let xs = (raster.width - patch_size) / stride + 1;
    let mut out = Vec::with_capacity(ys * xs);
    let center_off = patch_size / 2;
    for iy in 0..ys {
        for ix in 0..xs {
            let top = iy * stride;
            let left = ix * stride;
            let mut data = ComplexTensor::zeros(&[6, patch_size, patch_size]);
            for py in 0..patch_size {
                for px in 0..patch_size {
                    let p = raster.pixel(top + py, left + px);
                    let e = &p.entries;
                    data.re[[0, py, px]] = e[0];
                    data.re[[1, py, px]] = e[1];
                    data.re[[2, py, px]] = e[2];
                    data.re[[3, py, px]] = e[3];
                    data.im[[3, py, px]] = e[4];
                    data.re[[4, py, px]] = e[5];
                    data.im[[4, py, px]] = e[6];
                    data.re[[5, py, px]] = e[7];
                    data.im[[5, py, px]] = e[8];
                }
            }
            let label = raster.label(top + center_off, left + center_off).max(0) as usize;
            out.push(Patch { data, label });
        }
    }
    Ok(out)
}
