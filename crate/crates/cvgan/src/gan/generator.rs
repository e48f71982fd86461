//! Complex-valued generator: CFC -> reshape -> {CBN -> CA -> CDeConv} per
//! stage, with a linear (no activation, no normalization) output layer.

use rand::Rng;

use crate::ctensor::ComplexTensor;
use crate::error::{Error, Result};
use crate::layers::{
    crelu_backward, crelu_forward, CbnCache, CbnGrads, ComplexBatchNorm, ComplexConvTranspose2d,
    ComplexLinear, ComplexLinearGrads, DeconvCache, DeconvGrads, LinearCache, Mode,
};

pub struct GenStage {
    pub bn: ComplexBatchNorm,
    pub deconv: ComplexConvTranspose2d,
}

/// Translates a pair of latent vectors (real plane, imaginary plane) into a
/// complex patch tensor [B, out_channels, patch, patch].
pub struct Generator {
    pub fc: ComplexLinear,
    pub stages: Vec<GenStage>,
    latent_width: usize,
    base: usize,
    base_channels: usize,
    out_channels: usize,
    patch: usize,
}

pub struct GenStageCache {
    bn: CbnCache,
    mask: ComplexTensor,
    deconv: DeconvCache,
}

pub struct GenCache {
    fc: LinearCache,
    stages: Vec<GenStageCache>,
    batch: usize,
}

pub struct GenGrads {
    pub fc: ComplexLinearGrads,
    pub stages: Vec<(CbnGrads, DeconvGrads)>,
}

impl Generator {
    /// `channels` lists the deconv stack widths from the deepest feature map
    /// outward; each stage doubles the spatial size, so the initial feature
    /// map is patch / 2^len(channels) square.
    pub fn new(
        rng: &mut impl Rng,
        latent_width: usize,
        channels: &[usize],
        out_channels: usize,
        patch: usize,
        m: usize,
    ) -> Result<Self> {
        if channels.is_empty() {
            return Err(Error::InvalidConfig {
                reason: "generator needs at least one deconv stage".into(),
            });
        }
        let depth = channels.len();
        if patch % (1 << depth) != 0 || patch >> depth == 0 {
            return Err(Error::PatchDepthMismatch { patch, depth });
        }
        let base = patch >> depth;
        let fc = ComplexLinear::new(rng, latent_width, channels[0] * base * base);
        let mut stages = Vec::with_capacity(depth);
        for (i, &c) in channels.iter().enumerate() {
            let next = if i + 1 < depth {
                channels[i + 1]
            } else {
                out_channels
            };
            stages.push(GenStage {
                bn: ComplexBatchNorm::new(c, m),
                deconv: ComplexConvTranspose2d::new(rng, c, next, 4, 2, 1),
            });
        }
        Ok(Self {
            fc,
            stages,
            latent_width,
            base,
            base_channels: channels[0],
            out_channels,
            patch,
        })
    }

    pub fn latent_width(&self) -> usize {
        self.latent_width
    }

    pub fn patch(&self) -> usize {
        self.patch
    }

    pub fn out_channels(&self) -> usize {
        self.out_channels
    }

    /// Forward pass over a latent batch [B, latent_width].
    pub fn forward(&mut self, z: &ComplexTensor, mode: Mode) -> Result<(ComplexTensor, GenCache)> {
        if z.shape().len() != 2 || z.shape()[1] != self.latent_width {
            return Err(Error::LatentWidthMismatch {
                got: if z.shape().len() == 2 { z.shape()[1] } else { 0 },
                expected: self.latent_width,
            });
        }
        let batch = z.shape()[0];
        let (fc_out, fc_cache) = self.fc.forward(z)?;
        let mut x = fc_out.reshape(&[batch, self.base_channels, self.base, self.base])?;
        let mut stage_caches = Vec::with_capacity(self.stages.len());
        for stage in &mut self.stages {
            let (normed, bn_cache) = stage.bn.forward(&x, mode)?;
            let (activated, mask) = crelu_forward(&normed);
            let (out, deconv_cache) = stage.deconv.forward(&activated)?;
            stage_caches.push(GenStageCache {
                bn: bn_cache,
                mask,
                deconv: deconv_cache,
            });
            x = out;
        }
        Ok((
            x,
            GenCache {
                fc: fc_cache,
                stages: stage_caches,
                batch,
            },
        ))
    }

    /// Backward pass; latent gradients are discarded.
    pub fn backward(&self, cache: &GenCache, grad_out: &ComplexTensor) -> GenGrads {
        let mut grad = grad_out.clone();
        let mut stage_grads_rev = Vec::with_capacity(self.stages.len());
        for (stage, sc) in self.stages.iter().zip(cache.stages.iter()).rev() {
            let (deconv_grads, d_act) = stage.deconv.backward(&sc.deconv, &grad);
            let d_norm = crelu_backward(&sc.mask, &d_act);
            let (bn_grads, d_in) = stage.bn.backward(&sc.bn, &d_norm);
            stage_grads_rev.push((bn_grads, deconv_grads));
            grad = d_in;
        }
        stage_grads_rev.reverse();
        let flat = grad
            .reshape(&[cache.batch, self.base_channels * self.base * self.base])
            .expect("stage-0 gradient matches the fc output shape");
        let (fc_grads, _) = self.fc.backward(&cache.fc, &flat);
        GenGrads {
            fc: fc_grads,
            stages: stage_grads_rev,
        }
    }

    /// Normalization layers paired with their stage index.
    pub fn batchnorms_mut(&mut self) -> Vec<(usize, &mut ComplexBatchNorm)> {
        self.stages
            .iter_mut()
            .enumerate()
            .map(|(i, s)| (i, &mut s.bn))
            .collect()
    }

    pub fn param_lens(&self) -> Vec<usize> {
        let mut lens = vec![
            self.fc.weight.re.len(),
            self.fc.weight.im.len(),
            self.fc.bias.re.len(),
            self.fc.bias.im.len(),
        ];
        for stage in &self.stages {
            lens.push(stage.bn.gamma.len());
            lens.push(stage.bn.beta.re.len());
            lens.push(stage.bn.beta.im.len());
            lens.push(stage.deconv.kernels.re.len());
            lens.push(stage.deconv.kernels.im.len());
            lens.push(stage.deconv.bias.re.len());
            lens.push(stage.deconv.bias.im.len());
        }
        lens
    }

    pub fn params_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = vec![
            self.fc.weight.re.as_slice_mut().unwrap(),
            self.fc.weight.im.as_slice_mut().unwrap(),
            self.fc.bias.re.as_slice_mut().unwrap(),
            self.fc.bias.im.as_slice_mut().unwrap(),
        ];
        for stage in &mut self.stages {
            out.push(stage.bn.gamma.as_slice_mut().unwrap());
            out.push(stage.bn.beta.re.as_slice_mut().unwrap());
            out.push(stage.bn.beta.im.as_slice_mut().unwrap());
            out.push(stage.deconv.kernels.re.as_slice_mut().unwrap());
            out.push(stage.deconv.kernels.im.as_slice_mut().unwrap());
            out.push(stage.deconv.bias.re.as_slice_mut().unwrap());
            out.push(stage.deconv.bias.im.as_slice_mut().unwrap());
        }
        out
    }

    /// (name, shape, data) triples in the same order as [`Self::params_mut`].
    pub fn named_params(&self) -> Vec<(String, Vec<usize>, &[f64])> {
        let mut out: Vec<(String, Vec<usize>, &[f64])> = vec![
            named("g.fc.weight.re", &self.fc.weight.re),
            named("g.fc.weight.im", &self.fc.weight.im),
            named("g.fc.bias.re", &self.fc.bias.re),
            named("g.fc.bias.im", &self.fc.bias.im),
        ];
        for (i, stage) in self.stages.iter().enumerate() {
            out.push((
                format!("g.stage{i}.bn.gamma"),
                vec![stage.bn.gamma.len()],
                stage.bn.gamma.as_slice().unwrap(),
            ));
            out.push(named(&format!("g.stage{i}.bn.beta.re"), &stage.bn.beta.re));
            out.push(named(&format!("g.stage{i}.bn.beta.im"), &stage.bn.beta.im));
            out.push(named(
                &format!("g.stage{i}.deconv.kernels.re"),
                &stage.deconv.kernels.re,
            ));
            out.push(named(
                &format!("g.stage{i}.deconv.kernels.im"),
                &stage.deconv.kernels.im,
            ));
            out.push(named(
                &format!("g.stage{i}.deconv.bias.re"),
                &stage.deconv.bias.re,
            ));
            out.push(named(
                &format!("g.stage{i}.deconv.bias.im"),
                &stage.deconv.bias.im,
            ));
        }
        out
    }
}

pub(crate) fn named<'a>(
    name: &str,
    a: &'a ndarray::ArrayD<f64>,
) -> (String, Vec<usize>, &'a [f64]) {
    (
        name.to_string(),
        a.shape().to_vec(),
        a.as_slice().expect("standard layout"),
    )
}

impl GenGrads {
    /// Gradient slices in [`Generator::params_mut`] order.
    pub fn flat(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = vec![
            self.fc.weight.re.as_slice().unwrap(),
            self.fc.weight.im.as_slice().unwrap(),
            self.fc.bias.re.as_slice().unwrap(),
            self.fc.bias.im.as_slice().unwrap(),
        ];
        for (bn, deconv) in &self.stages {
            out.push(bn.gamma.as_slice().unwrap());
            out.push(bn.beta.re.as_slice().unwrap());
            out.push(bn.beta.im.as_slice().unwrap());
            out.push(deconv.kernels.re.as_slice().unwrap());
            out.push(deconv.kernels.im.as_slice().unwrap());
            out.push(deconv.bias.re.as_slice().unwrap());
            out.push(deconv.bias.im.as_slice().unwrap());
        }
        out
    }
}
