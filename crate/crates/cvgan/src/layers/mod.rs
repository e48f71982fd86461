//! Complex-valued neural layers.
//!
//! Every layer offers a forward pass returning the output plus a cache, and
//! an analytic backward pass consuming that cache. Gradients treat the real
//! and imaginary planes as independent real variables.

mod activation;
mod batchnorm;
mod conv;
mod linear;

pub use activation::{crelu_backward, crelu_forward};
pub use batchnorm::{inv_sqrt_2x2, BatchStats, CbnCache, CbnGrads, ComplexBatchNorm};
pub use conv::{
    ComplexConv2d, ComplexConvTranspose2d, ConvCache, ConvGrads, DeconvCache, DeconvGrads,
};
pub use linear::{
    ComplexLinear, ComplexLinearGrads, LinearCache, RealLinear, RealLinearCache, RealLinearGrads,
};

use rand::Rng;

/// Whether a forward pass updates normalization statistics.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Uniform Glorot bound for a real-valued parameter plane.
pub(crate) fn glorot_bound(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

/// Fills a slice with U(-bound, bound) draws.
pub(crate) fn fill_uniform<R: Rng>(rng: &mut R, data: &mut [f64], bound: f64) {
    for v in data.iter_mut() {
        *v = rng.random_range(-bound..bound);
    }
}

/// Complex Glorot initialization: each plane is scaled by 1/sqrt(2) so the
/// complex-modulus variance matches the real-valued Glorot target.
pub(crate) fn init_complex_planes<R: Rng>(
    rng: &mut R,
    re: &mut [f64],
    im: &mut [f64],
    fan_in: usize,
    fan_out: usize,
) {
    let bound = glorot_bound(fan_in, fan_out) / std::f64::consts::SQRT_2;
    fill_uniform(rng, re, bound);
    fill_uniform(rng, im, bound);
}
