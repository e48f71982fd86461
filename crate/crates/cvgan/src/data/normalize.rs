//! Per-channel, per-plane standardization.
//!
//! Statistics come from the training pools only; the recorded transform is
//! applied identically at test time and inverted when generated patches are
//! written back out in physical units.

use crate::ctensor::ComplexTensor;
use crate::error::{Error, Result};

use super::Patch;

pub const NORM_STD_FLOOR: f64 = 1e-12;

/// Mean/std per (channel, plane); plane 0 = real, plane 1 = imaginary.
#[derive(Clone, Debug, PartialEq)]
pub struct NormStats {
    pub mean: Vec<[f64; 2]>,
    pub std: Vec<[f64; 2]>,
}

impl NormStats {
    pub fn channels(&self) -> usize {
        self.mean.len()
    }

    /// Standardizes a [C, ...] or [B, C, ...] tensor in place.
    pub fn apply(&self, t: &mut ComplexTensor) {
        self.transform(t, false)
    }

    /// Inverts [`Self::apply`] in place.
    pub fn invert(&self, t: &mut ComplexTensor) {
        self.transform(t, true)
    }

    fn transform(&self, t: &mut ComplexTensor, invert: bool) {
        let c = self.channels();
        let shape = t.shape().to_vec();
        // [C, H, W] patches or [B, C, H, W] batches
        let channel_axis = if shape.len() == 4 { 1 } else { 0 };
        debug_assert_eq!(shape[channel_axis], c);
        let outer: usize = shape[..channel_axis].iter().product();
        let inner: usize = shape[channel_axis + 1..].iter().product();
        for (plane_idx, plane) in [&mut t.re, &mut t.im].into_iter().enumerate() {
            let s = plane.as_slice_mut().expect("standard layout");
            for o in 0..outer {
                for ch in 0..c {
                    let mean = self.mean[ch][plane_idx];
                    let std = self.std[ch][plane_idx].max(NORM_STD_FLOOR);
                    let base = (o * c + ch) * inner;
                    for v in &mut s[base..base + inner] {
                        if invert {
                            *v = *v * std + mean;
                        } else {
                            *v = (*v - mean) / std;
                        }
                    }
                }
            }
        }
    }
}

/// Computes per-channel, per-plane mean and standard deviation over the
/// selected patches.
pub fn compute_norm_stats(patches: &[Patch], indices: &[usize]) -> Result<NormStats> {
    if indices.is_empty() {
        return Err(Error::EmptySample {
            what: "normalization statistics",
        });
    }
    let channels = patches[indices[0]].data.shape()[0];
    let per_channel: usize = patches[indices[0]].data.shape()[1..].iter().product();
    let n = (indices.len() * per_channel) as f64;

    let mut mean = vec![[0.0f64; 2]; channels];
    let mut sq = vec![[0.0f64; 2]; channels];
    for &i in indices {
        let p = &patches[i].data;
        for (plane_idx, plane) in [&p.re, &p.im].into_iter().enumerate() {
            let s = plane.as_slice().expect("standard layout");
            for ch in 0..channels {
                let base = ch * per_channel;
                for &v in &s[base..base + per_channel] {
                    mean[ch][plane_idx] += v;
                    sq[ch][plane_idx] += v * v;
                }
            }
        }
    }
    let mut std = vec![[0.0f64; 2]; channels];
    for ch in 0..channels {
        for plane in 0..2 {
            mean[ch][plane] /= n;
            let var = (sq[ch][plane] / n - mean[ch][plane] * mean[ch][plane]).max(0.0);
            std[ch][plane] = var.sqrt();
        }
    }
    Ok(NormStats { mean, std })
}

/// Applies the transform to every patch in the slice.
pub fn normalize_patches(patches: &mut [Patch], stats: &NormStats) {
    for p in patches.iter_mut() {
        stats.apply(&mut p.data);
    }
}
