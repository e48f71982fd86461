//! Complex-valued discriminator: {CConv -> (CBN) -> CA} stages, then the
//! real/imaginary concatenation feeding a real full connection to K+1
//! logits. The first stage carries no normalization.

use ndarray::{s, Array2};
use rand::Rng;

use crate::ctensor::ComplexTensor;
use crate::error::{Error, Result};
use crate::layers::{
    crelu_backward, crelu_forward, CbnCache, CbnGrads, ComplexBatchNorm, ComplexConv2d, ConvCache,
    ConvGrads, Mode, RealLinear, RealLinearCache, RealLinearGrads,
};

use super::generator::named;

pub struct DiscStage {
    pub conv: ComplexConv2d,
    pub bn: Option<ComplexBatchNorm>,
}

/// Maps [B, in_channels, patch, patch] complex patches to K+1 real logits.
pub struct Discriminator {
    pub stages: Vec<DiscStage>,
    pub fc: RealLinear,
    k: usize,
    patch: usize,
    in_channels: usize,
    final_spatial: usize,
    final_channels: usize,
}

pub struct DiscStageCache {
    conv: ConvCache,
    bn: Option<CbnCache>,
    mask: ComplexTensor,
}

pub struct DiscCache {
    stages: Vec<DiscStageCache>,
    fc: RealLinearCache,
    batch: usize,
}

pub struct DiscGrads {
    pub stages: Vec<(ConvGrads, Option<CbnGrads>)>,
    pub fc: RealLinearGrads,
}

impl Discriminator {
    pub fn new(
        rng: &mut impl Rng,
        in_channels: usize,
        conv_channels: &[usize],
        k: usize,
        patch: usize,
        m: usize,
    ) -> Result<Self> {
        if conv_channels.is_empty() || k < 1 {
            return Err(Error::InvalidConfig {
                reason: "discriminator needs at least one conv stage and one class".into(),
            });
        }
        let depth = conv_channels.len();
        if patch % (1 << depth) != 0 || patch >> depth == 0 {
            return Err(Error::PatchDepthMismatch { patch, depth });
        }
        let final_spatial = patch >> depth;
        let mut stages = Vec::with_capacity(depth);
        let mut prev = in_channels;
        for (i, &c) in conv_channels.iter().enumerate() {
            stages.push(DiscStage {
                conv: ComplexConv2d::new(rng, prev, c, 4, 2, 1),
                bn: if i == 0 {
                    None
                } else {
                    Some(ComplexBatchNorm::new(c, m))
                },
            });
            prev = c;
        }
        let final_channels = *conv_channels.last().unwrap();
        let fc_in = 2 * final_channels * final_spatial * final_spatial;
        let fc = RealLinear::new(rng, fc_in, k + 1);
        Ok(Self {
            stages,
            fc,
            k,
            patch,
            in_channels,
            final_spatial,
            final_channels,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn patch(&self) -> usize {
        self.patch
    }

    pub fn in_channels(&self) -> usize {
        self.in_channels
    }

    /// Forward pass to K+1 logits.
    pub fn forward(&mut self, x: &ComplexTensor, mode: Mode) -> Result<(Array2<f64>, DiscCache)> {
        let shape = x.shape().to_vec();
        if shape.len() != 4 || shape[1] != self.in_channels || shape[2] != self.patch {
            return Err(Error::ShapeMismatch {
                left: shape,
                right: vec![0, self.in_channels, self.patch, self.patch],
            });
        }
        let batch = shape[0];
        let mut cur = x.clone();
        let mut stage_caches = Vec::with_capacity(self.stages.len());
        for stage in &mut self.stages {
            let (conv_out, conv_cache) = stage.conv.forward(&cur)?;
            let (normed, bn_cache) = match stage.bn.as_mut() {
                Some(bn) => {
                    let (y, c) = bn.forward(&conv_out, mode)?;
                    (y, Some(c))
                }
                None => (conv_out, None),
            };
            let (activated, mask) = crelu_forward(&normed);
            stage_caches.push(DiscStageCache {
                conv: conv_cache,
                bn: bn_cache,
                mask,
            });
            cur = activated;
        }
        let feat = self.final_channels * self.final_spatial * self.final_spatial;
        let flat = cur.reshape(&[batch, feat])?;
        let real_input = flat
            .concat_real_imag()
            .into_dimensionality::<ndarray::Ix2>()
            .expect("rank 2 after concat");
        let (logits, fc_cache) = self.fc.forward(&real_input)?;
        Ok((
            logits,
            DiscCache {
                stages: stage_caches,
                fc: fc_cache,
                batch,
            },
        ))
    }

    /// Backward pass; returns parameter gradients and the gradient w.r.t.
    /// the complex input patches (used when training the generator).
    pub fn backward(&self, cache: &DiscCache, grad_logits: &Array2<f64>) -> (DiscGrads, ComplexTensor) {
        let (fc_grads, d_flat) = self.fc.backward(&cache.fc, grad_logits);
        let feat = self.final_channels * self.final_spatial * self.final_spatial;
        let d_complex = ComplexTensor {
            re: d_flat.slice(s![.., ..feat]).to_owned().into_dyn(),
            im: d_flat.slice(s![.., feat..]).to_owned().into_dyn(),
        };
        let mut grad = d_complex
            .reshape(&[
                cache.batch,
                self.final_channels,
                self.final_spatial,
                self.final_spatial,
            ])
            .expect("flat gradient matches the final feature map");

        let mut stage_grads_rev = Vec::with_capacity(self.stages.len());
        for (stage, sc) in self.stages.iter().zip(cache.stages.iter()).rev() {
            let d_act = crelu_backward(&sc.mask, &grad);
            let (bn_grads, d_conv_out) = match (&stage.bn, &sc.bn) {
                (Some(bn), Some(bn_cache)) => {
                    let (g, dx) = bn.backward(bn_cache, &d_act);
                    (Some(g), dx)
                }
                _ => (None, d_act),
            };
            let (conv_grads, d_in) = stage.conv.backward(&sc.conv, &d_conv_out);
            stage_grads_rev.push((conv_grads, bn_grads));
            grad = d_in;
        }
        stage_grads_rev.reverse();
        (
            DiscGrads {
                stages: stage_grads_rev,
                fc: fc_grads,
            },
            grad,
        )
    }

    /// Normalization layers paired with their stage index (stage 0 has none).
    pub fn batchnorms_mut(&mut self) -> Vec<(usize, &mut ComplexBatchNorm)> {
        self.stages
            .iter_mut()
            .enumerate()
            .filter_map(|(i, s)| s.bn.as_mut().map(|bn| (i, bn)))
            .collect()
    }

    pub fn param_lens(&self) -> Vec<usize> {
        let mut lens = Vec::new();
        for stage in &self.stages {
            lens.push(stage.conv.kernels.re.len());
            lens.push(stage.conv.kernels.im.len());
            lens.push(stage.conv.bias.re.len());
            lens.push(stage.conv.bias.im.len());
            if let Some(bn) = &stage.bn {
                lens.push(bn.gamma.len());
                lens.push(bn.beta.re.len());
                lens.push(bn.beta.im.len());
            }
        }
        lens.push(self.fc.weight.len());
        lens.push(self.fc.bias.len());
        lens
    }

    pub fn params_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::new();
        for stage in &mut self.stages {
            out.push(stage.conv.kernels.re.as_slice_mut().unwrap());
            out.push(stage.conv.kernels.im.as_slice_mut().unwrap());
            out.push(stage.conv.bias.re.as_slice_mut().unwrap());
            out.push(stage.conv.bias.im.as_slice_mut().unwrap());
            if let Some(bn) = stage.bn.as_mut() {
                out.push(bn.gamma.as_slice_mut().unwrap());
                out.push(bn.beta.re.as_slice_mut().unwrap());
                out.push(bn.beta.im.as_slice_mut().unwrap());
            }
        }
        out.push(self.fc.weight.as_slice_mut().unwrap());
        out.push(self.fc.bias.as_slice_mut().unwrap());
        out
    }

    /// (name, shape, data) triples in the same order as [`Self::params_mut`].
    pub fn named_params(&self) -> Vec<(String, Vec<usize>, &[f64])> {
        let mut out: Vec<(String, Vec<usize>, &[f64])> = Vec::new();
        for (i, stage) in self.stages.iter().enumerate() {
            out.push(named(
                &format!("d.stage{i}.conv.kernels.re"),
                &stage.conv.kernels.re,
            ));
            out.push(named(
                &format!("d.stage{i}.conv.kernels.im"),
                &stage.conv.kernels.im,
            ));
            out.push(named(
                &format!("d.stage{i}.conv.bias.re"),
                &stage.conv.bias.re,
            ));
            out.push(named(
                &format!("d.stage{i}.conv.bias.im"),
                &stage.conv.bias.im,
            ));
            if let Some(bn) = &stage.bn {
                out.push((
                    format!("d.stage{i}.bn.gamma"),
                    vec![bn.gamma.len()],
                    bn.gamma.as_slice().unwrap(),
                ));
                out.push(named(&format!("d.stage{i}.bn.beta.re"), &bn.beta.re));
                out.push(named(&format!("d.stage{i}.bn.beta.im"), &bn.beta.im));
            }
        }
        out.push(named("d.fc.weight", &self.fc.weight));
        out.push(named("d.fc.bias", &self.fc.bias));
        out
    }
}

impl DiscGrads {
    /// Gradient slices in [`Discriminator::params_mut`] order.
    pub fn flat(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = Vec::new();
        for (conv, bn) in &self.stages {
            out.push(conv.kernels.re.as_slice().unwrap());
            out.push(conv.kernels.im.as_slice().unwrap());
            out.push(conv.bias.re.as_slice().unwrap());
            out.push(conv.bias.im.as_slice().unwrap());
            if let Some(bn) = bn {
                out.push(bn.gamma.as_slice().unwrap());
                out.push(bn.beta.re.as_slice().unwrap());
                out.push(bn.beta.im.as_slice().unwrap());
            }
        }
        out.push(self.fc.weight.as_slice().unwrap());
        out.push(self.fc.bias.as_slice().unwrap());
        out
    }
}
