//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {left:?} vs {right:?}")]
    ShapeMismatch { left: Vec<usize>, right: Vec<usize> },

    #[error("matmul dimension mismatch: [{m}, {k_left}] x [{k_right}, {n}]")]
    MatmulDims {
        m: usize,
        k_left: usize,
        k_right: usize,
        n: usize,
    },

    #[error("reshape from {from:?} ({from_len} elements) to {to:?} ({to_len} elements)")]
    ReshapeCount {
        from: Vec<usize>,
        from_len: usize,
        to: Vec<usize>,
        to_len: usize,
    },

    #[error(
        "degenerate convolution output: input {h}x{w}, kernel {kh}x{kw}, \
         stride {stride}, padding {padding} gives non-positive output size"
    )]
    DegenerateConvOutput {
        h: usize,
        w: usize,
        kh: usize,
        kw: usize,
        stride: usize,
        padding: usize,
    },

    #[error("batch size {batch} too small for batch normalization in training mode (need >= 2)")]
    BatchTooSmall { batch: usize },

    #[error("channel count {got} does not match normalizer state ({expected} channels)")]
    ChannelMismatch { got: usize, expected: usize },

    #[error("latent width {got} does not match generator input width {expected}")]
    LatentWidthMismatch { got: usize, expected: usize },

    #[error("class label {label} out of range 1..={k}")]
    LabelOutOfRange { label: i64, k: usize },

    #[error("labeled training set is empty")]
    EmptyLabeledSet,

    #[error("class {class} has no labeled training samples")]
    ClassMissing { class: usize },

    #[error("labeled quota {quota} exceeds population {population} of class {class}")]
    QuotaExceedsClass {
        class: usize,
        quota: usize,
        population: usize,
    },

    #[error("sigma matrix is not positive definite: leading {order}x{order} minor is {minor}")]
    SigmaNotPsd { order: usize, minor: f64 },

    #[error("layout provides {layout_regions} regions but {k} classes were requested")]
    LayoutClassMismatch { layout_regions: usize, k: usize },

    #[error("raster {h}x{w} smaller than patch size {patch}")]
    RasterTooSmall { h: usize, w: usize, patch: usize },

    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: [u8; 4], found: [u8; 4] },

    #[error("truncated payload: expected {expected} bytes, got {actual}")]
    Truncated { expected: u64, actual: u64 },

    #[error("dimensions {h}x{w} overflow the supported raster size")]
    DimensionOverflow { h: u64, w: u64 },

    #[error("empty sample passed to {what}")]
    EmptySample { what: &'static str },

    #[error("metric undefined on empty confusion matrix")]
    EmptyConfusion,

    #[error("kappa undefined: expected agreement is 1 (all mass in one cell)")]
    KappaUndefined,

    #[error("checkpoint field missing: {name}")]
    CheckpointFieldMissing { name: String },

    #[error("checkpoint is not valid: {reason}")]
    CheckpointInvalid { reason: String },

    #[error("checkpoint has {expected} classes but labels imply {got}")]
    ClassCountMismatch { expected: usize, got: usize },

    #[error(
        "patch size {patch} is not divisible by 2^{depth} (required by the stride-2 layer stack)"
    )]
    PatchDepthMismatch { patch: usize, depth: usize },

    #[error("invalid configuration: {reason}")]
    InvalidConfig { reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
