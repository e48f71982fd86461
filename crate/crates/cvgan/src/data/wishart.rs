//! Multilook complex Wishart sampling for coherency matrices.
//!
//! T = (1/L) sum_k s_k s_k^H with s_k ~ CN(0, Sigma), realized through the
//! complex Cholesky factor of Sigma applied to i.i.d. circular standard
//! normals, so E[T] = Sigma.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::ctensor::ComplexScalar;
use crate::error::{Error, Result};

use super::CoherencyPixel;

/// Lower-triangular complex Cholesky factor of a Hermitian PD 3x3 matrix.
/// Fails on a non-positive pivot, reporting the offending leading minor.
pub fn complex_cholesky3(sigma: &CoherencyPixel) -> Result<[[ComplexScalar; 3]; 3]> {
    let a = sigma.matrix();
    let mut l = [[ComplexScalar::ZERO; 3]; 3];
    let mut minor = 1.0;

    let pivot0 = a[0][0].re;
    minor *= pivot0;
    if pivot0 <= 0.0 {
        return Err(Error::SigmaNotPsd { order: 1, minor });
    }
    let l00 = pivot0.sqrt();
    l[0][0] = ComplexScalar::new(l00, 0.0);
    l[1][0] = ComplexScalar::new(a[1][0].re / l00, a[1][0].im / l00);
    l[2][0] = ComplexScalar::new(a[2][0].re / l00, a[2][0].im / l00);

    let pivot1 = a[1][1].re - l[1][0].modulus().powi(2);
    minor *= pivot1;
    if pivot1 <= 0.0 {
        return Err(Error::SigmaNotPsd { order: 2, minor });
    }
    let l11 = pivot1.sqrt();
    l[1][1] = ComplexScalar::new(l11, 0.0);
    let num = a[2][1] - l[2][0] * l[1][0].conj();
    l[2][1] = ComplexScalar::new(num.re / l11, num.im / l11);

    let pivot2 = a[2][2].re - l[2][0].modulus().powi(2) - l[2][1].modulus().powi(2);
    minor *= pivot2;
    if pivot2 <= 0.0 {
        return Err(Error::SigmaNotPsd { order: 3, minor });
    }
    l[2][2] = ComplexScalar::new(pivot2.sqrt(), 0.0);
    Ok(l)
}

/// Draws one multilook coherency matrix from the complex Wishart model.
pub fn sample_wishart<R: Rng>(
    sigma: &CoherencyPixel,
    looks: usize,
    rng: &mut R,
) -> Result<CoherencyPixel> {
    let chol = complex_cholesky3(sigma)?;
    Ok(sample_with_cholesky(&chol, looks, rng))
}

/// Sampling path reusing a precomputed Cholesky factor (scene generation
/// draws many pixels per class).
pub fn sample_with_cholesky<R: Rng>(
    chol: &[[ComplexScalar; 3]; 3],
    looks: usize,
    rng: &mut R,
) -> CoherencyPixel {
    let looks = looks.max(1);
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let mut acc = [0.0f64; 9];
    for _ in 0..looks {
        // circular complex standard normal: re, im ~ N(0, 1/2)
        let mut u = [ComplexScalar::ZERO; 3];
        for slot in &mut u {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            *slot = ComplexScalar::new(re * scale, im * scale);
        }
        let mut s = [ComplexScalar::ZERO; 3];
        for i in 0..3 {
            let mut v = ComplexScalar::ZERO;
            for j in 0..=i {
                v = v + chol[i][j] * u[j];
            }
            s[i] = v;
        }
        acc[0] += s[0].modulus().powi(2);
        acc[1] += s[1].modulus().powi(2);
        acc[2] += s[2].modulus().powi(2);
        let t12 = s[0] * s[1].conj();
        let t13 = s[0] * s[2].conj();
        let t23 = s[1] * s[2].conj();
        acc[3] += t12.re;
        acc[4] += t12.im;
        acc[5] += t13.re;
        acc[6] += t13.im;
        acc[7] += t23.re;
        acc[8] += t23.im;
    }
    let inv = 1.0 / looks as f64;
    let mut entries = [0.0; 9];
    for (e, a) in entries.iter_mut().zip(acc.iter()) {
        *e = a * inv;
    }
    CoherencyPixel::new(entries)
}
