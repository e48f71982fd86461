//! Complex and real fully connected layers.

use ndarray::{Array1, Array2, ArrayD};
use rand::Rng;

use crate::ctensor::{as_mat, matmul_std, ComplexTensor};
use crate::error::{Error, Result};

use super::{fill_uniform, glorot_bound, init_complex_planes};

/// Complex full connection: out = x W^T + b via the four-real-products mask.
#[derive(Clone, Debug)]
pub struct ComplexLinear {
    /// [out, in]
    pub weight: ComplexTensor,
    /// [out]
    pub bias: ComplexTensor,
}

pub struct LinearCache {
    x: ComplexTensor,
}

#[derive(Clone, Debug)]
pub struct ComplexLinearGrads {
    pub weight: ComplexTensor,
    pub bias: ComplexTensor,
}

impl ComplexLinear {
    pub fn new(rng: &mut impl Rng, in_width: usize, out_width: usize) -> Self {
        let mut weight = ComplexTensor::zeros(&[out_width, in_width]);
        init_complex_planes(
            rng,
            weight.re.as_slice_mut().unwrap(),
            weight.im.as_slice_mut().unwrap(),
            in_width,
            out_width,
        );
        Self {
            weight,
            bias: ComplexTensor::zeros(&[out_width]),
        }
    }

    pub fn in_width(&self) -> usize {
        self.weight.shape()[1]
    }

    pub fn out_width(&self) -> usize {
        self.weight.shape()[0]
    }

    /// x: [B, in] -> [B, out]
    /// out_r = x_r W_r^T - x_i W_i^T + b_r; out_i = x_r W_i^T + x_i W_r^T + b_i
    pub fn forward(&self, x: &ComplexTensor) -> Result<(ComplexTensor, LinearCache)> {
        if x.shape().len() != 2 || x.shape()[1] != self.in_width() {
            return Err(Error::ShapeMismatch {
                left: x.shape().to_vec(),
                right: self.weight.shape().to_vec(),
            });
        }
        let xr = as_mat(&x.re);
        let xi = as_mat(&x.im);
        let wr = as_mat(&self.weight.re);
        let wi = as_mat(&self.weight.im);
        let br = self
            .bias
            .re
            .view()
            .into_dimensionality::<ndarray::Ix1>()
            .expect("bias is rank 1");
        let bi = self
            .bias
            .im
            .view()
            .into_dimensionality::<ndarray::Ix1>()
            .expect("bias is rank 1");

        let mut out_r = matmul_std(&xr, &wr.t()) - matmul_std(&xi, &wi.t());
        let mut out_i = matmul_std(&xr, &wi.t()) + matmul_std(&xi, &wr.t());
        for mut row in out_r.rows_mut() {
            row += &br;
        }
        for mut row in out_i.rows_mut() {
            row += &bi;
        }

        Ok((
            ComplexTensor {
                re: out_r.into_dyn(),
                im: out_i.into_dyn(),
            },
            LinearCache { x: x.clone() },
        ))
    }

    pub fn backward(
        &self,
        cache: &LinearCache,
        grad_out: &ComplexTensor,
    ) -> (ComplexLinearGrads, ComplexTensor) {
        let xr = as_mat(&cache.x.re);
        let xi = as_mat(&cache.x.im);
        let gr = as_mat(&grad_out.re);
        let gi = as_mat(&grad_out.im);
        let wr = as_mat(&self.weight.re);
        let wi = as_mat(&self.weight.im);

        let dwr = matmul_std(&gr.t(), &xr) + matmul_std(&gi.t(), &xi);
        let dwi = matmul_std(&gi.t(), &xr) - matmul_std(&gr.t(), &xi);
        let dbr = gr.sum_axis(ndarray::Axis(0));
        let dbi = gi.sum_axis(ndarray::Axis(0));

        let dx_r = matmul_std(&gr, &wr) + matmul_std(&gi, &wi);
        let dx_i = matmul_std(&gi, &wr) - matmul_std(&gr, &wi);

        (
            ComplexLinearGrads {
                weight: ComplexTensor {
                    re: dwr.into_dyn(),
                    im: dwi.into_dyn(),
                },
                bias: ComplexTensor {
                    re: dbr.into_dyn(),
                    im: dbi.into_dyn(),
                },
            },
            ComplexTensor {
                re: dx_r.into_dyn(),
                im: dx_i.into_dyn(),
            },
        )
    }
}

/// Plain real fully connected layer; closes the discriminator after the
/// real/imaginary concatenation.
#[derive(Clone, Debug)]
pub struct RealLinear {
    /// [out, in]
    pub weight: ArrayD<f64>,
    /// [out]
    pub bias: ArrayD<f64>,
}

pub struct RealLinearCache {
    x: Array2<f64>,
}

#[derive(Clone, Debug)]
pub struct RealLinearGrads {
    pub weight: ArrayD<f64>,
    pub bias: ArrayD<f64>,
}

impl RealLinear {
    pub fn new(rng: &mut impl Rng, in_width: usize, out_width: usize) -> Self {
        let mut weight = ArrayD::zeros(ndarray::IxDyn(&[out_width, in_width]));
        fill_uniform(
            rng,
            weight.as_slice_mut().unwrap(),
            glorot_bound(in_width, out_width),
        );
        Self {
            weight,
            bias: ArrayD::zeros(ndarray::IxDyn(&[out_width])),
        }
    }

    pub fn in_width(&self) -> usize {
        self.weight.shape()[1]
    }

    pub fn out_width(&self) -> usize {
        self.weight.shape()[0]
    }

    /// x: [B, in] -> [B, out]
    pub fn forward(&self, x: &Array2<f64>) -> Result<(Array2<f64>, RealLinearCache)> {
        if x.ncols() != self.in_width() {
            return Err(Error::ShapeMismatch {
                left: x.shape().to_vec(),
                right: self.weight.shape().to_vec(),
            });
        }
        let w = as_mat(&self.weight);
        let b = Array1::from_iter(self.bias.iter().copied());
        let mut out = matmul_std(&x.view(), &w.t());
        for mut row in out.rows_mut() {
            row += &b;
        }
        Ok((out, RealLinearCache { x: x.clone() }))
    }

    pub fn backward(
        &self,
        cache: &RealLinearCache,
        grad_out: &Array2<f64>,
    ) -> (RealLinearGrads, Array2<f64>) {
        let w = as_mat(&self.weight);
        let dw = matmul_std(&grad_out.t(), &cache.x.view());
        let db = grad_out.sum_axis(ndarray::Axis(0));
        let dx = matmul_std(&grad_out.view(), &w);
        (
            RealLinearGrads {
                weight: dw.into_dyn(),
                bias: db.into_dyn(),
            },
            dx,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ctensor::ComplexScalar;
    use approx::assert_abs_diff_eq;

    #[test]
    fn identity_weight_passes_input_through() {
        let mut weight = ComplexTensor::zeros(&[2, 2]);
        weight.set(&[0, 0], ComplexScalar::ONE);
        weight.set(&[1, 1], ComplexScalar::ONE);
        let layer = ComplexLinear {
            weight,
            bias: ComplexTensor::zeros(&[2]),
        };
        let x = ComplexTensor::from_vecs(&[3, 2], vec![1., 2., 3., 4., 5., 6.], vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6]).unwrap();
        let (y, _) = layer.forward(&x).unwrap();
        assert_eq!(y, x);
    }

    #[test]
    fn weight_i_rotates() {
        // W = [[i]]: (a+bi) -> (-b+ai)
        let mut weight = ComplexTensor::zeros(&[1, 1]);
        weight.set(&[0, 0], ComplexScalar::I);
        let layer = ComplexLinear {
            weight,
            bias: ComplexTensor::zeros(&[1]),
        };
        let x = ComplexTensor::from_vecs(&[1, 1], vec![3.0], vec![4.0]).unwrap();
        let (y, _) = layer.forward(&x).unwrap();
        assert_abs_diff_eq!(y.re[[0, 0]], -4.0);
        assert_abs_diff_eq!(y.im[[0, 0]], 3.0);
    }

    #[test]
    fn scalar_backward_matches_hand_derivation() {
        // 1-in/1-out layer: out_r = x_r w_r - x_i w_i + b_r, so d out_r / d w_r = x_r.
        let mut weight = ComplexTensor::zeros(&[1, 1]);
        weight.set(&[0, 0], ComplexScalar::new(0.7, -0.3));
        let layer = ComplexLinear {
            weight,
            bias: ComplexTensor::zeros(&[1]),
        };
        let (xr, xi) = (1.25, -2.5);
        let x = ComplexTensor::from_vecs(&[1, 1], vec![xr], vec![xi]).unwrap();
        let (_, cache) = layer.forward(&x).unwrap();

        // Upstream gradient 1 on the real plane only.
        let g = ComplexTensor::from_vecs(&[1, 1], vec![1.0], vec![0.0]).unwrap();
        let (grads, dx) = layer.backward(&cache, &g);
        assert_abs_diff_eq!(grads.weight.re[[0, 0]], xr);
        assert_abs_diff_eq!(grads.weight.im[[0, 0]], -xi);
        assert_abs_diff_eq!(grads.bias.re[[0]], 1.0);
        assert_abs_diff_eq!(grads.bias.im[[0]], 0.0);
        assert_abs_diff_eq!(dx.re[[0, 0]], 0.7);
        assert_abs_diff_eq!(dx.im[[0, 0]], 0.3); // -w_i
    }

    #[test]
    fn zero_upstream_gives_zero_grads() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let layer = ComplexLinear::new(&mut rng, 4, 3);
        let x = ComplexTensor::full(&[2, 4], ComplexScalar::new(0.5, -0.5));
        let (_, cache) = layer.forward(&x).unwrap();
        let g = ComplexTensor::zeros(&[2, 3]);
        let (grads, dx) = layer.backward(&cache, &g);
        assert!(grads.weight.re.iter().all(|&v| v == 0.0));
        assert!(grads.weight.im.iter().all(|&v| v == 0.0));
        assert!(dx.re.iter().all(|&v| v == 0.0));
    }

    use rand::SeedableRng;

    #[test]
    fn real_linear_forward_backward() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(6);
        let layer = RealLinear::new(&mut rng, 3, 2);
        let x = ndarray::arr2(&[[1.0, 2.0, 3.0], [0.5, -1.0, 2.0]]);
        let (y, cache) = layer.forward(&x).unwrap();
        assert_eq!(y.dim(), (2, 2));
        let g = ndarray::arr2(&[[1.0, 0.0], [0.0, 1.0]]);
        let (grads, dx) = layer.backward(&cache, &g);
        assert_eq!(grads.weight.shape(), &[2, 3]);
        assert_eq!(dx.dim(), (2, 3));
        // db = column sums of g
        assert_abs_diff_eq!(grads.bias[[0]], 1.0);
        assert_abs_diff_eq!(grads.bias[[1]], 1.0);
    }
}
