//! Shared test oracles: scalar-loop complex references, an
//! eigendecomposition-based 2x2 inverse square root, and a central
//! finite-difference gradient harness. Everything here is independent of
//! the library's im2col/matmul code paths.

use cvgan::ctensor::{ComplexScalar, ComplexTensor};
use rand::Rng;

/// Complex matrix product via scalar cmul/cadd loops.
pub fn scalar_matmul(a: &ComplexTensor, b: &ComplexTensor) -> ComplexTensor {
    let (m, k) = (a.shape()[0], a.shape()[1]);
    let n = b.shape()[1];
    let mut out = ComplexTensor::zeros(&[m, n]);
    for i in 0..m {
        for j in 0..n {
            let mut acc = ComplexScalar::ZERO;
            for t in 0..k {
                acc = acc + a.get(&[i, t]) * b.get(&[t, j]);
            }
            out.set(&[i, j], acc);
        }
    }
    out
}

/// Complex cross-correlation via scalar loops (zero padding).
pub fn scalar_conv2d(
    x: &ComplexTensor,
    kernels: &ComplexTensor,
    bias: &ComplexTensor,
    stride: usize,
    padding: usize,
) -> ComplexTensor {
    let (b, ci, h, w) = (x.shape()[0], x.shape()[1], x.shape()[2], x.shape()[3]);
    let (co, _, kh, kw) = (
        kernels.shape()[0],
        kernels.shape()[1],
        kernels.shape()[2],
        kernels.shape()[3],
    );
    let oh = (h + 2 * padding - kh) / stride + 1;
    let ow = (w + 2 * padding - kw) / stride + 1;
    let mut out = ComplexTensor::zeros(&[b, co, oh, ow]);
    for bi in 0..b {
        for o in 0..co {
            for oy in 0..oh {
                for ox in 0..ow {
                    let mut acc = bias.get(&[o]);
                    for c in 0..ci {
                        for ky in 0..kh {
                            for kx in 0..kw {
                                let iy = (oy * stride + ky) as isize - padding as isize;
                                let ix = (ox * stride + kx) as isize - padding as isize;
                                if iy < 0 || ix < 0 || iy >= h as isize || ix >= w as isize {
                                    continue;
                                }
                                let xv = x.get(&[bi, c, iy as usize, ix as usize]);
                                let kv = kernels.get(&[o, c, ky, kx]);
                                acc = acc + xv * kv;
                            }
                        }
                    }
                    out.set(&[bi, o, oy, ox], acc);
                }
            }
        }
    }
    out
}

/// Complex transposed convolution via scalar scatter loops.
pub fn scalar_deconv2d(
    x: &ComplexTensor,
    kernels: &ComplexTensor,
    bias: &ComplexTensor,
    stride: usize,
    padding: usize,
) -> ComplexTensor {
    let (b, ci, h, w) = (x.shape()[0], x.shape()[1], x.shape()[2], x.shape()[3]);
    let (co, _, kh, kw) = (
        kernels.shape()[0],
        kernels.shape()[1],
        kernels.shape()[2],
        kernels.shape()[3],
    );
    let oh = (h - 1) * stride + kh - 2 * padding;
    let ow = (w - 1) * stride + kw - 2 * padding;
    let mut out = ComplexTensor::zeros(&[b, co, oh, ow]);
    for bi in 0..b {
        for o in 0..co {
            for oy in 0..oh {
                for ox in 0..ow {
                    out.set(&[bi, o, oy, ox], bias.get(&[o]));
                }
            }
        }
    }
    for bi in 0..b {
        for c in 0..ci {
            for iy in 0..h {
                for ix in 0..w {
                    let xv = x.get(&[bi, c, iy, ix]);
                    for o in 0..co {
                        for ky in 0..kh {
                            for kx in 0..kw {
                                let oy = (iy * stride + ky) as isize - padding as isize;
                                let ox = (ix * stride + kx) as isize - padding as isize;
                                if oy < 0 || ox < 0 || oy >= oh as isize || ox >= ow as isize {
                                    continue;
                                }
                                let idx = [bi, o, oy as usize, ox as usize];
                                let cur = out.get(&idx);
                                out.set(&idx, cur + xv * kernels.get(&[o, c, ky, kx]));
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

/// Symmetric 2x2 inverse square root through an explicit
/// eigendecomposition.
pub fn inv_sqrt_2x2_eigen(v: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let (a, b, c) = (v[0][0], v[0][1], v[1][1]);
    let disc = ((a - c) * (a - c) + 4.0 * b * b).sqrt();
    let l1 = 0.5 * (a + c + disc);
    let l2 = 0.5 * (a + c - disc);
    // eigenvector for l1
    let (e1x, e1y) = if b.abs() > 1e-300 {
        (b, l1 - a)
    } else if a >= c {
        (1.0, 0.0)
    } else {
        (0.0, 1.0)
    };
    let n1 = (e1x * e1x + e1y * e1y).sqrt();
    let (q1x, q1y) = (e1x / n1, e1y / n1);
    // orthogonal complement
    let (q2x, q2y) = (-q1y, q1x);
    let (s1, s2) = (1.0 / l1.sqrt(), 1.0 / l2.sqrt());
    [
        [
            s1 * q1x * q1x + s2 * q2x * q2x,
            s1 * q1x * q1y + s2 * q2x * q2y,
        ],
        [
            s1 * q1y * q1x + s2 * q2y * q2x,
            s1 * q1y * q1y + s2 * q2y * q2y,
        ],
    ]
}

/// Fills both planes with uniform draws in (-1, 1).
pub fn randomize(t: &mut ComplexTensor, rng: &mut impl Rng) {
    for v in t.re.iter_mut().chain(t.im.iter_mut()) {
        *v = rng.random_range(-1.0..1.0);
    }
}

/// Central finite-difference check of `analytic` against `loss(values)`,
/// perturbing one coordinate of `base` at a time. Relative tolerance
/// against max(1, |a|, |n|).
pub fn check_gradient(
    base: &[f64],
    analytic: &[f64],
    mut loss: impl FnMut(&[f64]) -> f64,
    label: &str,
) -> f64 {
    const H: f64 = 1e-5;
    const TOL: f64 = 1e-4;
    assert_eq!(base.len(), analytic.len(), "{label}: length mismatch");
    let mut work = base.to_vec();
    let mut worst: f64 = 0.0;
    for i in 0..base.len() {
        work[i] = base[i] + H;
        let up = loss(&work);
        work[i] = base[i] - H;
        let down = loss(&work);
        work[i] = base[i];
        let numeric = (up - down) / (2.0 * H);
        let denom = 1.0f64.max(analytic[i].abs()).max(numeric.abs());
        let rel = (analytic[i] - numeric).abs() / denom;
        assert!(
            rel < TOL,
            "{label}[{i}]: analytic {} vs numeric {} (rel {rel:.3e})",
            analytic[i],
            numeric
        );
        worst = worst.max(rel);
    }
    worst
}

/// Inner product used as a scalar test loss: sum(w_r * out_r + w_i * out_i).
pub fn weighted_sum(out: &ComplexTensor, weights: &ComplexTensor) -> f64 {
    out.re
        .iter()
        .zip(weights.re.iter())
        .map(|(a, b)| a * b)
        .sum::<f64>()
        + out
            .im
            .iter()
            .zip(weights.im.iter())
            .map(|(a, b)| a * b)
            .sum::<f64>()
}

pub fn max_abs_diff(a: &ComplexTensor, b: &ComplexTensor) -> f64 {
    let re = a
        .re
        .iter()
        .zip(b.re.iter())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0f64, f64::max);
    let im = a
        .im
        .iter()
        .zip(b.im.iter())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0f64, f64::max);
    re.max(im)
}
