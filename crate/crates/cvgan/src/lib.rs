//! Complex-valued semi-supervised GAN engine for PolSAR coherency data.
//!
//! The crate builds a complex-valued generator/discriminator pair from first
//! principles: a planar complex tensor type, complex layers with analytic
//! backward passes, whitening batch normalization, the K+1-logit
//! semi-supervised losses, synthetic complex-Wishart scene generation, and
//! the classification/distribution metrics used to evaluate the result.

pub mod ctensor;
pub mod data;
pub mod error;
pub mod gan;
pub mod layers;
pub mod metrics;

pub use ctensor::{complex_matmul, ComplexScalar, ComplexTensor};
pub use error::{Error, Result};
