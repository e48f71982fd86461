//! Generator/discriminator assembly, semi-supervised losses, Adam, the
//! alternating training loop, and checkpoint I/O.

pub mod adam;
pub mod checkpoint;
pub mod discriminator;
pub mod generator;
pub mod loss;
pub mod train;

pub use adam::{AdamHyper, AdamState, ADAM_EPSILON};
pub use discriminator::{DiscGrads, Discriminator};
pub use generator::{GenGrads, Generator};
pub use loss::{
    discriminator_loss, generated_loss_and_grad, generator_loss_and_grad, labeled_loss_and_grad,
    p_fake, real_logit_logsumexp, real_side_loss_and_grad, LossBreakdown, PROB_EPS,
};
pub use train::{predict_classes, sample_latents, train, TrainInputs, TrainedModel};

use crate::error::{Error, Result};

/// Number of complex input channels of a coherency patch.
pub const COHERENCY_CHANNELS: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TrainMode {
    Semisup,
    Supervised,
}

impl TrainMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            TrainMode::Semisup => "semisup",
            TrainMode::Supervised => "supervised",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "semisup" => Ok(TrainMode::Semisup),
            "supervised" => Ok(TrainMode::Supervised),
            other => Err(Error::InvalidConfig {
                reason: format!("unknown mode {other:?} (expected semisup or supervised)"),
            }),
        }
    }
}

/// Hyperparameters and architecture widths for one training run.
#[derive(Clone, Debug)]
pub struct TrainingConfig {
    pub patch_size: usize,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub batch_size: usize,
    pub epochs: usize,
    /// Batch-normalization memory: number of batches averaged.
    pub m: usize,
    /// Latent width per plane.
    pub latent_width: usize,
    pub seed: u64,
    pub mode: TrainMode,
    pub k: usize,
    pub in_channels: usize,
    /// Generator deconv widths, deepest first.
    pub g_channels: Vec<usize>,
    /// Discriminator conv widths, input side first.
    pub d_channels: Vec<usize>,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            patch_size: 32,
            lr: 0.0005,
            beta1: 0.5,
            beta2: 0.999,
            batch_size: 64,
            epochs: 100,
            m: 8,
            latent_width: 100,
            seed: 0,
            mode: TrainMode::Semisup,
            k: 2,
            in_channels: COHERENCY_CHANNELS,
            g_channels: vec![64, 32, 16],
            d_channels: vec![16, 32, 64],
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("patch_size", self.patch_size),
            ("batch_size", self.batch_size),
            ("epochs", self.epochs),
            ("m", self.m),
            ("latent_width", self.latent_width),
            ("k", self.k),
            ("in_channels", self.in_channels),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::InvalidConfig {
                    reason: format!("{name} must be positive"),
                });
            }
        }
        if self.batch_size < 2 {
            return Err(Error::InvalidConfig {
                reason: "batch_size must be at least 2 (batch statistics)".into(),
            });
        }
        if !(self.lr > 0.0) || !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2)
        {
            return Err(Error::InvalidConfig {
                reason: "lr must be positive and beta1, beta2 in [0, 1)".into(),
            });
        }
        if self.g_channels.is_empty() || self.d_channels.is_empty() {
            return Err(Error::InvalidConfig {
                reason: "g_channels and d_channels must be non-empty".into(),
            });
        }
        Ok(())
    }
}
