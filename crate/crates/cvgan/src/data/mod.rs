//! Synthetic PolSAR data: complex-Wishart sampling, scene generation,
//! coherency raster I/O, patch extraction, split protocol, normalization.

mod normalize;
mod patch;
mod raster;
mod scene;
mod split;
mod wishart;

pub use normalize::{compute_norm_stats, normalize_patches, NormStats, NORM_STD_FLOOR};
pub use patch::{extract_patches, Patch};
pub use raster::{
    decode_ctm, decode_lbl, encode_ctm, encode_lbl, load_raster, save_raster, CTM_MAGIC, LBL_MAGIC,
};
pub use scene::{builtin_sigmas, generate_scene, Layout};
pub use split::{split, Quota, SplitSets, SplitSpec};
pub use wishart::{complex_cholesky3, sample_wishart};

use crate::ctensor::ComplexScalar;
use crate::error::{Error, Result};

/// A 3x3 Hermitian coherency matrix stored as nine reals:
/// T11, T22, T33, Re/Im T12, Re/Im T13, Re/Im T23.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct CoherencyPixel {
    pub entries: [f64; 9],
}

impl CoherencyPixel {
    pub const T11: usize = 0;
    pub const T22: usize = 1;
    pub const T33: usize = 2;
    pub const RE12: usize = 3;
    pub const IM12: usize = 4;
    pub const RE13: usize = 5;
    pub const IM13: usize = 6;
    pub const RE23: usize = 7;
    pub const IM23: usize = 8;

    pub fn new(entries: [f64; 9]) -> Self {
        Self { entries }
    }

    pub fn diagonal(&self) -> [f64; 3] {
        [self.entries[0], self.entries[1], self.entries[2]]
    }

    /// Full 3x3 complex matrix (conjugate-symmetric lower triangle).
    pub fn matrix(&self) -> [[ComplexScalar; 3]; 3] {
        let e = &self.entries;
        let t12 = ComplexScalar::new(e[3], e[4]);
        let t13 = ComplexScalar::new(e[5], e[6]);
        let t23 = ComplexScalar::new(e[7], e[8]);
        [
            [ComplexScalar::new(e[0], 0.0), t12, t13],
            [t12.conj(), ComplexScalar::new(e[1], 0.0), t23],
            [t13.conj(), t23.conj(), ComplexScalar::new(e[2], 0.0)],
        ]
    }

    /// Smallest eigenvalue of the Hermitian matrix, via the closed-form
    /// trigonometric solution of, the 3x3 characteristic polynomial.
    pub fn min_eigenvalue(&self) -> f64 {
        let a = self.matrix();
        let p1 = a[0][1].modulus().powi(2) + a[0][2].modulus().powi(2) + a[1][2].modulus().powi(2);
        let trace = a[0][0].re + a[1][1].re + a[2][2].re;
        let q = trace / 3.0;
        if p1 == 0.0 {
            return self.diagonal().iter().cloned().fold(f64::INFINITY, f64::min);
        }
        let p2 = (a[0][0].re - q).powi(2)
            + (a[1][1].re - q).powi(2)
            + (a[2][2].re - q).powi(2)
            + 2.0 * p1;
        let p = (p2 / 6.0).sqrt();
        // B = (A - qI) / p; r = det(B) / 2 is real for Hermitian A.
        let b = |i: usize, j: usize| -> ComplexScalar {
            let mut v = a[i][j];
            if i == j {
                v.re -= q;
            }
            ComplexScalar::new(v.re / p, v.im / p)
        };
        let det = b(0, 0) * (b(1, 1) * b(2, 2) - b(1, 2) * b(2, 1))
            - b(0, 1) * (b(1, 0) * b(2, 2) - b(1, 2) * b(2, 0))
            + b(0, 2) * (b(1, 0) * b(2, 1) - b(1, 1) * b(2, 0));
        let r = (det.re / 2.0).clamp(-1.0, 1.0);
        let phi = r.acos() / 3.0;
        // Smallest eigenvalue uses phi + 2*pi/3.
        q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos()
    }

    /// Hermitian PSD check with an eigenvalue tolerance: T + tol*I must
    /// admit a Cholesky factor. (The closed-form eigenvalue solver loses
    /// ~1e-8 accuracy on rank-deficient matrices; pivoting does not.)
    pub fn is_psd(&self, tol: f64) -> bool {
        let mut shifted = *self;
        shifted.entries[0] += tol;
        shifted.entries[1] += tol;
        shifted.entries[2] += tol;
        complex_cholesky3(&shifted).is_ok()
    }
}

/// An H x W grid of coherency pixels plus an aligned label grid
/// (0 = unlabeled, 1..=K = class id), both row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct CoherencyRaster {
    pub height: usize,
    pub width: usize,
    pub pixels: Vec<CoherencyPixel>,
    pub labels: Vec<i16>,
}

impl CoherencyRaster {
    pub fn new(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            pixels: vec![CoherencyPixel::default(); height * width],
            labels: vec![0; height * width],
        }
    }

    pub fn pixel(&self, y: usize, x: usize) -> &CoherencyPixel {
        &self.pixels[y * self.width + x]
    }

    pub fn label(&self, y: usize, x: usize) -> i16 {
        self.labels[y * self.width + x]
    }

    /// Largest label value present.
    pub fn class_count(&self) -> usize {
        self.labels.iter().cloned().max().unwrap_or(0).max(0) as usize
    }

    pub fn validate_alignment(&self) -> Result<()> {
        if self.pixels.len() != self.height * self.width
            || self.labels.len() != self.height * self.width
        {
            return Err(Error::ShapeMismatch {
                left: vec![self.height, self.width],
                right: vec![self.pixels.len(), self.labels.len()],
            });
        }
        Ok(())
    }
}
