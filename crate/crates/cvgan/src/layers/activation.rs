//! Complex activation: CReLU, an independent ReLU on each plane.

use crate::ctensor::ComplexTensor;

/// Forward CReLU. The returned mask tensor (1.0 where the plane value was
/// positive) is the backward cache.
pub fn crelu_forward(x: &ComplexTensor) -> (ComplexTensor, ComplexTensor) {
    let out = ComplexTensor {
        re: x.re.mapv(|v| v.max(0.0)),
        im: x.im.mapv(|v| v.max(0.0)),
    };
    let mask = ComplexTensor {
        re: x.re.mapv(|v| if v > 0.0 { 1.0 } else { 0.0 }),
        im: x.im.mapv(|v| if v > 0.0 { 1.0 } else { 0.0 }),
    };
    (out, mask)
}

/// Backward CReLU: the upstream gradient gated by the forward mask.
pub fn crelu_backward(mask: &ComplexTensor, grad_out: &ComplexTensor) -> ComplexTensor {
    ComplexTensor {
        re: &mask.re * &grad_out.re,
        im: &mask.im * &grad_out.im,
    }
}
