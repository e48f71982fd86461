//! Whitening complex batch normalization.
//!
//! Each channel's (re, im) pair is treated as a 2-vector. Per batch the
//! layer computes the channel mean and the 2x2 real/imaginary covariance,
//! pushes both into a ring buffer of the last `m` batches, averages the
//! buffer, and whitens with the closed-form inverse square root of the
//! averaged covariance. The output is gamma * x_hat + beta with a real
//! per-channel gamma and a complex per-channel beta.
//!
//! The backward pass treats the averaged statistics as constants.

use std::collections::VecDeque;

use ndarray::Array1;

use crate::ctensor::ComplexTensor;
use crate::error::{Error, Result};

use super::Mode;

pub const CBN_DEFAULT_EPSILON: f64 = 1e-5;

/// Closed-form inverse square root of a symmetric positive 2x2 matrix
/// [[v_rr, v_ri], [v_ri, v_ii]]:
///   S = sqrt(max(v_rr*v_ii - v_ri^2, epsilon^2))
///   T = sqrt(v_rr + v_ii + 2S)
///   V^{-1/2} = [[(v_ii + S), -v_ri], [-v_ri, (v_rr + S)]] / (S*T)
pub fn inv_sqrt_2x2(v: [[f64; 2]; 2], epsilon: f64) -> [[f64; 2]; 2] {
    let (v_rr, v_ri, v_ii) = (v[0][0], v[0][1], v[1][1]);
    let (w_rr, w_ri, w_ii) = inv_sqrt_2x2_entries(v_rr, v_ri, v_ii, epsilon);
    [[w_rr, w_ri], [w_ri, w_ii]]
}

pub(crate) fn inv_sqrt_2x2_entries(
    v_rr: f64,
    v_ri: f64,
    v_ii: f64,
    epsilon: f64,
) -> (f64, f64, f64) {
    let s = (v_rr * v_ii - v_ri * v_ri).max(epsilon * epsilon).sqrt();
    let t = (v_rr + v_ii + 2.0 * s).sqrt();
    let d = s * t;
    ((v_ii + s) / d, -v_ri / d, (v_rr + s) / d)
}

/// One batch's per-channel statistics.
#[derive(Clone, Debug)]
pub struct BatchStats {
    pub mean_re: Array1<f64>,
    pub mean_im: Array1<f64>,
    pub v_rr: Array1<f64>,
    pub v_ri: Array1<f64>,
    pub v_ii: Array1<f64>,
}

/// Whitening batch normalization layer state.
#[derive(Clone, Debug)]
pub struct ComplexBatchNorm {
    /// Real per-channel scale, initialized to 1.
    pub gamma: Array1<f64>,
    /// Complex per-channel shift, initialized to 0.
    pub beta: ComplexTensor,
    /// Ring buffer of the statistics of the last `m` batches.
    buffer: VecDeque<BatchStats>,
    m: usize,
    epsilon: f64,
}

/// Forward state consumed by the backward pass.
pub struct CbnCache {
    x_hat: ComplexTensor,
    whiten: Vec<(f64, f64, f64)>,
}

#[derive(Clone, Debug)]
pub struct CbnGrads {
    pub gamma: Array1<f64>,
    pub beta: ComplexTensor,
}

impl ComplexBatchNorm {
    pub fn new(channels: usize, m: usize) -> Self {
        Self {
            gamma: Array1::ones(channels),
            beta: ComplexTensor::zeros(&[channels]),
            buffer: VecDeque::new(),
            m: m.max(1),
            epsilon: CBN_DEFAULT_EPSILON,
        }
    }

    pub fn channels(&self) -> usize {
        self.gamma.len()
    }

    pub fn memory(&self) -> usize {
        self.m
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn buffer_len(&self) -> usize {
        self.buffer.len()
    }

    pub fn buffered_stats(&self) -> impl Iterator<Item = &BatchStats> {
        self.buffer.iter()
    }

    pub fn push_stats(&mut self, stats: BatchStats) {
        self.buffer.push_back(stats);
        while self.buffer.len() > self.m {
            self.buffer.pop_front();
        }
    }

    /// Replaces the ring buffer contents (checkpoint restore).
    pub fn restore_buffer(&mut self, stats: Vec<BatchStats>) {
        self.buffer.clear();
        for s in stats {
            self.push_stats(s);
        }
    }

    /// Arithmetic mean of the ring buffer contents, or None before any batch.
    pub fn averaged_stats(&self) -> Option<BatchStats> {
        if self.buffer.is_empty() {
            return None;
        }
        let c = self.channels();
        let mut acc = BatchStats {
            mean_re: Array1::zeros(c),
            mean_im: Array1::zeros(c),
            v_rr: Array1::zeros(c),
            v_ri: Array1::zeros(c),
            v_ii: Array1::zeros(c),
        };
        for s in &self.buffer {
            acc.mean_re += &s.mean_re;
            acc.mean_im += &s.mean_im;
            acc.v_rr += &s.v_rr;
            acc.v_ri += &s.v_ri;
            acc.v_ii += &s.v_ii;
        }
        let n = self.buffer.len() as f64;
        acc.mean_re /= n;
        acc.mean_im /= n;
        acc.v_rr /= n;
        acc.v_ri /= n;
        acc.v_ii /= n;
        Some(acc)
    }

    /// Per-channel mean and 2x2 covariance over batch (and spatial) positions.
    pub fn batch_stats(x: &ComplexTensor, channels: usize) -> BatchStats {
        let (_, per, layout) = channel_layout(x.shape(), channels);
        let re = x.re.as_slice().expect("standard layout");
        let im = x.im.as_slice().expect("standard layout");
        let mut stats = BatchStats {
            mean_re: Array1::zeros(channels),
            mean_im: Array1::zeros(channels),
            v_rr: Array1::zeros(channels),
            v_ri: Array1::zeros(channels),
            v_ii: Array1::zeros(channels),
        };
        for c in 0..channels {
            let (mut sr, mut si) = (0.0, 0.0);
            for_channel(layout, c, |idx| {
                sr += re[idx];
                si += im[idx];
            });
            let n = per as f64;
            let (mr, mi) = (sr / n, si / n);
            let (mut vrr, mut vri, mut vii) = (0.0, 0.0, 0.0);
            for_channel(layout, c, |idx| {
                let dr = re[idx] - mr;
                let di = im[idx] - mi;
                vrr += dr * dr;
                vri += dr * di;
                vii += di * di;
            });
            stats.mean_re[c] = mr;
            stats.mean_im[c] = mi;
            stats.v_rr[c] = vrr / n;
            stats.v_ri[c] = vri / n;
            stats.v_ii[c] = vii / n;
        }
        stats
    }

    /// Forward pass over [B, C] or [B, C, H, W] input.
    ///
    /// Training mode pushes this batch's statistics into the ring buffer and
    /// whitens with the refreshed buffer average; eval mode uses the stored
    /// averages unchanged. Before any batch has been seen the layer acts as
    /// identity-plus-affine (mean 0, covariance I).
    pub fn forward(&mut self, x: &ComplexTensor, mode: Mode) -> Result<(ComplexTensor, CbnCache)> {
        let channels = self.channels();
        let shape = x.shape();
        if shape.len() < 2 || shape[1] != channels {
            return Err(Error::ChannelMismatch {
                got: if shape.len() < 2 { 0 } else { shape[1] },
                expected: channels,
            });
        }
        if mode == Mode::Train {
            if shape[0] < 2 {
                return Err(Error::BatchTooSmall { batch: shape[0] });
            }
            let stats = Self::batch_stats(x, channels);
            self.push_stats(stats);
        }

        let averaged = self.averaged_stats();
        let (layout, whiten, mean_re, mean_im) = match &averaged {
            Some(avg) => {
                let whiten: Vec<(f64, f64, f64)> = (0..channels)
                    .map(|c| {
                        inv_sqrt_2x2_entries(
                            avg.v_rr[c] + self.epsilon,
                            avg.v_ri[c],
                            avg.v_ii[c] + self.epsilon,
                            self.epsilon,
                        )
                    })
                    .collect();
                (
                    channel_layout(shape, channels).2,
                    whiten,
                    avg.mean_re.clone(),
                    avg.mean_im.clone(),
                )
            }
            None => (
                channel_layout(shape, channels).2,
                vec![(1.0, 0.0, 1.0); channels],
                Array1::zeros(channels),
                Array1::zeros(channels),
            ),
        };

        let mut x_hat = ComplexTensor::zeros(shape);
        {
            let re = x.re.as_slice().unwrap();
            let im = x.im.as_slice().unwrap();
            let hr = x_hat.re.as_slice_mut().unwrap();
            let hi = x_hat.im.as_slice_mut().unwrap();
            for c in 0..channels {
                let (w_rr, w_ri, w_ii) = whiten[c];
                let (mr, mi) = (mean_re[c], mean_im[c]);
                for_channel(layout, c, |idx| {
                    let dr = re[idx] - mr;
                    let di = im[idx] - mi;
                    hr[idx] = w_rr * dr + w_ri * di;
                    hi[idx] = w_ri * dr + w_ii * di;
                });
            }
        }

        let mut out = ComplexTensor::zeros(shape);
        {
            let hr = x_hat.re.as_slice().unwrap();
            let hi = x_hat.im.as_slice().unwrap();
            let or_ = out.re.as_slice_mut().unwrap();
            let oi = out.im.as_slice_mut().unwrap();
            let br = self.beta.re.as_slice().unwrap();
            let bi = self.beta.im.as_slice().unwrap();
            for c in 0..channels {
                let g = self.gamma[c];
                for_channel(layout, c, |idx| {
                    or_[idx] = g * hr[idx] + br[c];
                    oi[idx] = g * hi[idx] + bi[c];
                });
            }
        }

        Ok((out, CbnCache { x_hat, whiten }))
    }

    /// Backward pass with the whitening statistics held constant.
    pub fn backward(&self, cache: &CbnCache, grad_out: &ComplexTensor) -> (CbnGrads, ComplexTensor) {
        let channels = self.channels();
        let shape = grad_out.shape();
        let layout = channel_layout(shape, channels).2;

        let mut dgamma = Array1::zeros(channels);
        let mut dbeta = ComplexTensor::zeros(&[channels]);
        let mut dx = ComplexTensor::zeros(shape);
        {
            let gr = grad_out.re.as_slice().unwrap();
            let gi = grad_out.im.as_slice().unwrap();
            let hr = cache.x_hat.re.as_slice().unwrap();
            let hi = cache.x_hat.im.as_slice().unwrap();
            let dxr = dx.re.as_slice_mut().unwrap();
            let dxi = dx.im.as_slice_mut().unwrap();
            for c in 0..channels {
                let (w_rr, w_ri, w_ii) = cache.whiten[c];
                let g = self.gamma[c];
                let (mut sg, mut sbr, mut sbi) = (0.0, 0.0, 0.0);
                for_channel(layout, c, |idx| {
                    sg += gr[idx] * hr[idx] + gi[idx] * hi[idx];
                    sbr += gr[idx];
                    sbi += gi[idx];
                    // dx = W^T (gamma * g); W symmetric.
                    let tr = g * gr[idx];
                    let ti = g * gi[idx];
                    dxr[idx] = w_rr * tr + w_ri * ti;
                    dxi[idx] = w_ri * tr + w_ii * ti;
                });
                dgamma[c] = sg;
                dbeta.re[c] = sbr;
                dbeta.im[c] = sbi;
            }
        }

        (
            CbnGrads {
                gamma: dgamma,
                beta: dbeta,
            },
            dx,
        )
    }
}

/// (outer count, elements per channel, iteration layout) for shape [B, C, ...].
#[derive(Clone, Copy)]
pub(crate) struct ChannelLayout {
    batch: usize,
    channels: usize,
    spatial: usize,
}

fn channel_layout(shape: &[usize], channels: usize) -> (usize, usize, ChannelLayout) {
    let batch = shape[0];
    let spatial: usize = shape[2..].iter().product();
    let layout = ChannelLayout {
        batch,
        channels,
        spatial,
    };
    (batch, batch * spatial, layout)
}

/// Visits the flat indices of channel `c` in a standard-layout [B, C, ...]
/// array.
fn for_channel(layout: ChannelLayout, c: usize, mut f: impl FnMut(usize)) {
    for b in 0..layout.batch {
        let base = (b * layout.channels + c) * layout.spatial;
        for s in 0..layout.spatial {
            f(base + s);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn inv_sqrt_identity() {
        let w = inv_sqrt_2x2([[1.0, 0.0], [0.0, 1.0]], 1e-5);
        assert_abs_diff_eq!(w[0][0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(w[0][1], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(w[1][1], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn inv_sqrt_diag_4() {
        let w = inv_sqrt_2x2([[4.0, 0.0], [0.0, 4.0]], 1e-5);
        assert_abs_diff_eq!(w[0][0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(w[1][1], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn inv_sqrt_correlated() {
        // V = [[2,1],[1,2]]: eigenvalues 3 and 1 along (1,1)/sqrt(2), (1,-1)/sqrt(2).
        let w = inv_sqrt_2x2([[2.0, 1.0], [1.0, 2.0]], 1e-5);
        assert_abs_diff_eq!(w[0][0], 0.788675, epsilon = 1e-6);
        assert_abs_diff_eq!(w[0][1], -0.211325, epsilon = 1e-6);
        assert_abs_diff_eq!(w[1][0], -0.211325, epsilon = 1e-6);
        assert_abs_diff_eq!(w[1][1], 0.788675, epsilon = 1e-6);
    }

    #[test]
    fn degenerate_batch_outputs_beta() {
        let mut bn = ComplexBatchNorm::new(1, 4);
        bn.beta.re[0] = 2.5;
        bn.beta.im[0] = -1.5;
        let x = ComplexTensor::full(&[8, 1], crate::ctensor::ComplexScalar::new(3.0, 3.0));
        let (y, _) = bn.forward(&x, Mode::Train).unwrap();
        for i in 0..8 {
            assert_abs_diff_eq!(y.re[[i, 0]], 2.5, epsilon = 1e-12);
            assert_abs_diff_eq!(y.im[[i, 0]], -1.5, epsilon = 1e-12);
        }
    }

    #[test]
    fn batch_of_one_rejected_in_training() {
        let mut bn = ComplexBatchNorm::new(2, 4);
        let x = ComplexTensor::zeros(&[1, 2]);
        assert!(matches!(
            bn.forward(&x, Mode::Train),
            Err(Error::BatchTooSmall { batch: 1 })
        ));
    }

    #[test]
    fn whitening_normalizes_correlated_input() {
        // m = 1, gamma = 1, beta = 0, one large batch: output mean ~0, cov ~I.
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 4096;
        let mut x = ComplexTensor::zeros(&[n, 1]);
        for i in 0..n {
            let a: f64 = rng.sample(rand_distr::StandardNormal);
            let b: f64 = rng.sample(rand_distr::StandardNormal);
            // correlated planes with distinct scales
            x.re[[i, 0]] = 2.0 * a + 0.5;
            x.im[[i, 0]] = 0.8 * a + 0.6 * b - 1.0;
        }
        let mut bn = ComplexBatchNorm::new(1, 1);
        let (y, _) = bn.forward(&x, Mode::Train).unwrap();
        let stats = ComplexBatchNorm::batch_stats(&y, 1);
        assert!(stats.mean_re[0].abs() < 0.02);
        assert!(stats.mean_im[0].abs() < 0.02);
        assert!((stats.v_rr[0] - 1.0).abs() < 0.05);
        assert!(stats.v_ri[0].abs() < 0.05);
        assert!((stats.v_ii[0] - 1.0).abs() < 0.05);
    }

    #[test]
    fn buffer_average_is_arithmetic_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut bn = ComplexBatchNorm::new(2, 4);
        let mut expected_vrr = vec![0.0; 2];
        let mut pushed = Vec::new();
        for _ in 0..4 {
            let mut x = ComplexTensor::zeros(&[16, 2]);
            for v in x.re.iter_mut().chain(x.im.iter_mut()) {
                *v = rng.random_range(-2.0..2.0);
            }
            let stats = ComplexBatchNorm::batch_stats(&x, 2);
            pushed.push(stats.clone());
            bn.forward(&x, Mode::Train).unwrap();
        }
        for c in 0..2 {
            expected_vrr[c] = pushed.iter().map(|s| s.v_rr[c]).sum::<f64>() / 4.0;
        }
        let avg = bn.averaged_stats().unwrap();
        for c in 0..2 {
            assert_eq!(avg.v_rr[c], expected_vrr[c]);
        }
    }

    #[test]
    fn ring_buffer_caps_at_m() {
        let mut bn = ComplexBatchNorm::new(1, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..7 {
            let mut x = ComplexTensor::zeros(&[4, 1]);
            for v in x.re.iter_mut().chain(x.im.iter_mut()) {
                *v = rng.random_range(-1.0..1.0);
            }
            bn.forward(&x, Mode::Train).unwrap();
        }
        assert_eq!(bn.buffer_len(), 3);
    }

    #[test]
    fn eval_before_training_is_identity_affine() {
        let mut bn = ComplexBatchNorm::new(2, 4);
        bn.gamma[0] = 2.0;
        bn.beta.re[1] = 1.0;
        let x = ComplexTensor::from_vecs(&[1, 2], vec![1.0, 2.0], vec![3.0, 4.0]).unwrap();
        let (y, _) = bn.forward(&x, Mode::Eval).unwrap();
        assert_abs_diff_eq!(y.re[[0, 0]], 2.0);
        assert_abs_diff_eq!(y.im[[0, 0]], 6.0);
        assert_abs_diff_eq!(y.re[[0, 1]], 3.0);
        assert_abs_diff_eq!(y.im[[0, 1]], 4.0);
    }
}
