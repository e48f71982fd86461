//! Complex convolution and transposed convolution.
//!
//! Both layers lower their real-plane work onto im2col/col2im plus dense
//! matrix products, then combine the four real results with the complex
//! operation mask: out_r = op(x_r, W_r) - op(x_i, W_i),
//! out_i = op(x_r, W_i) + op(x_i, W_r).
//!
//! Convolution here means cross-correlation (no kernel flip) with zero
//! padding. A transposed convolution is the exact adjoint of the matching
//! convolution at the real-plane level.

use ndarray::{Array2, Array4, ArrayD, Ix4};
use rand::Rng;

use crate::ctensor::{matmul_std, ComplexTensor};
use crate::error::{Error, Result};

use super::init_complex_planes;

/// Spatial bookkeeping for one convolution: input (h, w) -> output (oh, ow).
#[derive(Clone, Copy, Debug)]
struct ConvGeom {
    h: usize,
    w: usize,
    kh: usize,
    kw: usize,
    stride: usize,
    padding: usize,
    oh: usize,
    ow: usize,
}

impl ConvGeom {
    fn forward(h: usize, w: usize, kh: usize, kw: usize, stride: usize, padding: usize) -> Result<Self> {
        let oh = (h + 2 * padding).checked_sub(kh).map(|d| d / stride + 1);
        let ow = (w + 2 * padding).checked_sub(kw).map(|d| d / stride + 1);
        match (oh, ow) {
            (Some(oh), Some(ow)) if oh > 0 && ow > 0 => Ok(Self {
                h,
                w,
                kh,
                kw,
                stride,
                padding,
                oh,
                ow,
            }),
            _ => Err(Error::DegenerateConvOutput {
                h,
                w,
                kh,
                kw,
                stride,
                padding,
            }),
        }
    }

    /// Geometry of the convolution whose adjoint realizes a transposed
    /// convolution from (h, w) up to ((h-1)*stride + kh - 2*padding, ...).
    fn transposed(h: usize, w: usize, kh: usize, kw: usize, stride: usize, padding: usize) -> Result<Self> {
        let oh = ((h - 1) * stride + kh).checked_sub(2 * padding);
        let ow = ((w - 1) * stride + kw).checked_sub(2 * padding);
        match (oh, ow) {
            (Some(th), Some(tw)) if th > 0 && tw > 0 => Ok(Self {
                h: th,
                w: tw,
                kh,
                kw,
                stride,
                padding,
                oh: h,
                ow: w,
            }),
            _ => Err(Error::DegenerateConvOutput {
                h,
                w,
                kh,
                kw,
                stride,
                padding,
            }),
        }
    }
}

fn as4(a: &ArrayD<f64>) -> Array4<f64> {
    a.view()
        .into_dimensionality::<Ix4>()
        .expect("expected a rank-4 tensor")
        .to_owned()
}

/// Unfolds [B, C, h, w] into [B*oh*ow, C*kh*kw]; each row is the receptive
/// field of one output position, zero-filled outside the padded input.
fn im2col(x: &Array4<f64>, g: &ConvGeom) -> Array2<f64> {
    let (b, c, h, w) = x.dim();
    debug_assert_eq!((h, w), (g.h, g.w));
    let xs = x.as_slice().expect("standard layout");
    let row_len = c * g.kh * g.kw;
    let mut cols = Array2::<f64>::zeros((b * g.oh * g.ow, row_len));
    let cs = cols.as_slice_mut().expect("freshly allocated");
    for bi in 0..b {
        for oy in 0..g.oh {
            for ox in 0..g.ow {
                let row = ((bi * g.oh) + oy) * g.ow + ox;
                let base = row * row_len;
                for ci in 0..c {
                    let x_chan = ((bi * c) + ci) * h * w;
                    for ky in 0..g.kh {
                        let iy = (oy * g.stride + ky) as isize - g.padding as isize;
                        let col0 = base + ((ci * g.kh) + ky) * g.kw;
                        if iy < 0 || iy >= h as isize {
                            continue;
                        }
                        let x_row = x_chan + iy as usize * w;
                        for kx in 0..g.kw {
                            let ix = (ox * g.stride + kx) as isize - g.padding as isize;
                            if ix < 0 || ix >= w as isize {
                                continue;
                            }
                            cs[col0 + kx] = xs[x_row + ix as usize];
                        }
                    }
                }
            }
        }
    }
    cols
}

/// Adjoint of [`im2col`]: scatter-adds rows back into [B, C, h, w].
fn col2im(cols: &Array2<f64>, g: &ConvGeom, b: usize, c: usize) -> Array4<f64> {
    let row_len = c * g.kh * g.kw;
    debug_assert_eq!(cols.dim(), (b * g.oh * g.ow, row_len));
    let cs = cols.as_slice().expect("standard layout");
    let mut x = Array4::<f64>::zeros((b, c, g.h, g.w));
    let xs = x.as_slice_mut().expect("freshly allocated");
    for bi in 0..b {
        for oy in 0..g.oh {
            for ox in 0..g.ow {
                let row = ((bi * g.oh) + oy) * g.ow + ox;
                let base = row * row_len;
                for ci in 0..c {
                    let x_chan = ((bi * c) + ci) * g.h * g.w;
                    for ky in 0..g.kh {
                        let iy = (oy * g.stride + ky) as isize - g.padding as isize;
                        if iy < 0 || iy >= g.h as isize {
                            continue;
                        }
                        let col0 = base + ((ci * g.kh) + ky) * g.kw;
                        let x_row = x_chan + iy as usize * g.w;
                        for kx in 0..g.kw {
                            let ix = (ox * g.stride + kx) as isize - g.padding as isize;
                            if ix < 0 || ix >= g.w as isize {
                                continue;
                            }
                            xs[x_row + ix as usize] += cs[col0 + kx];
                        }
                    }
                }
            }
        }
    }
    x
}

/// [B*oh*ow, Co] -> [B, Co, oh, ow]
fn rows_to_nchw(rows: Array2<f64>, b: usize, co: usize, oh: usize, ow: usize) -> ArrayD<f64> {
    rows.into_shape_with_order((b, oh, ow, co))
        .expect("row count matches")
        .permuted_axes([0, 3, 1, 2])
        .as_standard_layout()
        .into_owned()
        .into_dyn()
}

/// [B, C, h, w] -> [B*h*w, C]
fn nchw_to_rows(x: &Array4<f64>) -> Array2<f64> {
    let (b, c, h, w) = x.dim();
    x.view()
        .permuted_axes([0, 2, 3, 1])
        .as_standard_layout()
        .into_owned()
        .into_shape_with_order((b * h * w, c))
        .expect("element count preserved")
}

/// Kernel tensor [Co, Ci, kh, kw] -> matrix [Co, Ci*kh*kw].
fn kernel_matrix(k: &ArrayD<f64>) -> Array2<f64> {
    let shape = k.shape().to_vec();
    k.to_owned()
        .into_shape_with_order((shape[0], shape[1] * shape[2] * shape[3]))
        .expect("contiguous kernel")
}

fn add_channel_bias(out: &mut ArrayD<f64>, bias: &ArrayD<f64>) {
    let co = bias.len();
    let b = out.shape()[0];
    let spatial: usize = out.len() / (b * co);
    let os = out.as_slice_mut().expect("standard layout");
    let bs = bias.as_slice().expect("standard layout");
    for bi in 0..b {
        for c in 0..co {
            let base = ((bi * co) + c) * spatial;
            let add = bs[c];
            for v in &mut os[base..base + spatial] {
                *v += add;
            }
        }
    }
}

/// Sums gradient over batch and spatial positions per output channel.
fn channel_bias_grad(g: &Array4<f64>) -> ArrayD<f64> {
    let (b, co, oh, ow) = g.dim();
    let gs = g.as_slice().expect("standard layout");
    let mut out = vec![0.0; co];
    for bi in 0..b {
        for c in 0..co {
            let base = ((bi * co) + c) * oh * ow;
            out[c] += gs[base..base + oh * ow].iter().sum::<f64>();
        }
    }
    ArrayD::from_shape_vec(ndarray::IxDyn(&[co]), out).expect("length co")
}

/// Complex 2-D convolution over [B, inC, H, W] inputs.
#[derive(Clone, Debug)]
pub struct ComplexConv2d {
    /// [outC, inC, kH, kW]
    pub kernels: ComplexTensor,
    /// [outC]
    pub bias: ComplexTensor,
    pub stride: usize,
    pub padding: usize,
}

/// Forward-pass state a convolution backward pass needs.
pub struct ConvCache {
    cols_r: Array2<f64>,
    cols_i: Array2<f64>,
    geom: ConvGeom,
    batch: usize,
    in_channels: usize,
}

#[derive(Clone, Debug)]
pub struct ConvGrads {
    pub kernels: ComplexTensor,
    pub bias: ComplexTensor,
}

impl ComplexConv2d {
    pub fn new(
        rng: &mut impl Rng,
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
    ) -> Self {
        let mut kernels = ComplexTensor::zeros(&[out_channels, in_channels, kernel, kernel]);
        let fan_in = in_channels * kernel * kernel;
        let fan_out = out_channels * kernel * kernel;
        init_complex_planes(
            rng,
            kernels.re.as_slice_mut().unwrap(),
            kernels.im.as_slice_mut().unwrap(),
            fan_in,
            fan_out,
        );
        Self {
            kernels,
            bias: ComplexTensor::zeros(&[out_channels]),
            stride,
            padding,
        }
    }

    pub fn out_channels(&self) -> usize {
        self.kernels.shape()[0]
    }

    pub fn in_channels(&self) -> usize {
        self.kernels.shape()[1]
    }

    pub fn forward(&self, x: &ComplexTensor) -> Result<(ComplexTensor, ConvCache)> {
        let shape = x.shape().to_vec();
        if shape.len() != 4 || shape[1] != self.in_channels() {
            return Err(Error::ShapeMismatch {
                left: shape,
                right: self.kernels.shape().to_vec(),
            });
        }
        let (b, _, h, w) = (shape[0], shape[1], shape[2], shape[3]);
        let kshape = self.kernels.shape();
        let geom = ConvGeom::forward(h, w, kshape[2], kshape[3], self.stride, self.padding)?;

        let xr = as4(&x.re);
        let xi = as4(&x.im);
        let cols_r = im2col(&xr, &geom);
        let cols_i = im2col(&xi, &geom);
        let wr = kernel_matrix(&self.kernels.re);
        let wi = kernel_matrix(&self.kernels.im);

        let out_r_rows = matmul_std(&cols_r.view(), &wr.t()) - matmul_std(&cols_i.view(), &wi.t());
        let out_i_rows = matmul_std(&cols_r.view(), &wi.t()) + matmul_std(&cols_i.view(), &wr.t());
        let co = self.out_channels();
        let mut out_r = rows_to_nchw(out_r_rows, b, co, geom.oh, geom.ow);
        let mut out_i = rows_to_nchw(out_i_rows, b, co, geom.oh, geom.ow);
        add_channel_bias(&mut out_r, &self.bias.re);
        add_channel_bias(&mut out_i, &self.bias.im);

        Ok((
            ComplexTensor {
                re: out_r,
                im: out_i,
            },
            ConvCache {
                cols_r,
                cols_i,
                geom,
                batch: b,
                in_channels: self.in_channels(),
            },
        ))
    }

    /// Returns parameter gradients and the gradient w.r.t. the input.
    pub fn backward(
        &self,
        cache: &ConvCache,
        grad_out: &ComplexTensor,
    ) -> (ConvGrads, ComplexTensor) {
        let g = &cache.geom;
        let co = self.out_channels();
        let gr4 = as4(&grad_out.re);
        let gi4 = as4(&grad_out.im);
        let bias_grads = ComplexTensor {
            re: channel_bias_grad(&gr4),
            im: channel_bias_grad(&gi4),
        };

        // Rows indexed like the forward im2col output positions.
        let gr = nchw_to_rows_from_nchw(gr4, cache.batch, co, g.oh, g.ow);
        let gi = nchw_to_rows_from_nchw(gi4, cache.batch, co, g.oh, g.ow);

        let dwr = matmul_std(&gr.t(), &cache.cols_r.view()) + matmul_std(&gi.t(), &cache.cols_i.view());
        let dwi = matmul_std(&gi.t(), &cache.cols_r.view()) - matmul_std(&gr.t(), &cache.cols_i.view());
        let kshape = self.kernels.shape().to_vec();
        let kernel_grads = ComplexTensor {
            re: dwr.into_shape_with_order(kshape.clone()).unwrap().into_dyn(),
            im: dwi.into_shape_with_order(kshape).unwrap().into_dyn(),
        };

        let wr = kernel_matrix(&self.kernels.re);
        let wi = kernel_matrix(&self.kernels.im);
        let dcols_r = matmul_std(&gr.view(), &wr.view()) + matmul_std(&gi.view(), &wi.view());
        let dcols_i = matmul_std(&gi.view(), &wr.view()) - matmul_std(&gr.view(), &wi.view());
        let dx_r = col2im(&dcols_r, g, cache.batch, cache.in_channels);
        let dx_i = col2im(&dcols_i, g, cache.batch, cache.in_channels);

        (
            ConvGrads {
                kernels: kernel_grads,
                bias: bias_grads,
            },
            ComplexTensor {
                re: dx_r.into_dyn(),
                im: dx_i.into_dyn(),
            },
        )
    }
}

/// [B, C, oh, ow] (owned) -> [B*oh*ow, C]
fn nchw_to_rows_from_nchw(x: Array4<f64>, b: usize, c: usize, oh: usize, ow: usize) -> Array2<f64> {
    debug_assert_eq!(x.dim(), (b, c, oh, ow));
    nchw_to_rows(&x)
}

/// Complex 2-D transposed convolution (deconvolution).
///
/// At the real-plane level the forward pass is the adjoint of the matching
/// stride/padding convolution, so output spatial size is
/// (H - 1) * stride + kH - 2 * padding.
#[derive(Clone, Debug)]
pub struct ComplexConvTranspose2d {
    /// [outC, inC, kH, kW]
    pub kernels: ComplexTensor,
    /// [outC]
    pub bias: ComplexTensor,
    pub stride: usize,
    pub padding: usize,
}

pub struct DeconvCache {
    /// Input as rows [B*H*W, inC], per plane.
    x_rows_r: Array2<f64>,
    x_rows_i: Array2<f64>,
    geom: ConvGeom,
    batch: usize,
    in_spatial: (usize, usize),
}

#[derive(Clone, Debug)]
pub struct DeconvGrads {
    pub kernels: ComplexTensor,
    pub bias: ComplexTensor,
}

impl ComplexConvTranspose2d {
    pub fn new(
        rng: &mut impl Rng,
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
    ) -> Self {
        let mut kernels = ComplexTensor::zeros(&[out_channels, in_channels, kernel, kernel]);
        let fan_in = in_channels * kernel * kernel;
        let fan_out = out_channels * kernel * kernel;
        init_complex_planes(
            rng,
            kernels.re.as_slice_mut().unwrap(),
            kernels.im.as_slice_mut().unwrap(),
            fan_in,
            fan_out,
        );
        Self {
            kernels,
            bias: ComplexTensor::zeros(&[out_channels]),
            stride,
            padding,
        }
    }

    pub fn out_channels(&self) -> usize {
        self.kernels.shape()[0]
    }

    pub fn in_channels(&self) -> usize {
        self.kernels.shape()[1]
    }

    /// Kernel as the matrix [inC, outC*kh*kw] of the adjoint convolution.
    fn adjoint_kernel_matrix(k: &ArrayD<f64>) -> Array2<f64> {
        let s = k.shape().to_vec(); // [outC, inC, kh, kw]
        let swapped = k
            .view()
            .into_dimensionality::<Ix4>()
            .expect("rank-4 kernels")
            .permuted_axes([1, 0, 2, 3])
            .as_standard_layout()
            .into_owned();
        swapped
            .into_shape_with_order((s[1], s[0] * s[2] * s[3]))
            .expect("contiguous")
    }

    pub fn forward(&self, x: &ComplexTensor) -> Result<(ComplexTensor, DeconvCache)> {
        let shape = x.shape().to_vec();
        if shape.len() != 4 || shape[1] != self.in_channels() {
            return Err(Error::ShapeMismatch {
                left: shape,
                right: self.kernels.shape().to_vec(),
            });
        }
        let (b, _, h, w) = (shape[0], shape[1], shape[2], shape[3]);
        let kshape = self.kernels.shape();
        let geom = ConvGeom::transposed(h, w, kshape[2], kshape[3], self.stride, self.padding)?;

        let x_rows_r = nchw_to_rows(&as4(&x.re));
        let x_rows_i = nchw_to_rows(&as4(&x.im));
        let wr = Self::adjoint_kernel_matrix(&self.kernels.re);
        let wi = Self::adjoint_kernel_matrix(&self.kernels.im);

        let co = self.out_channels();
        let cols_from =
            |rows: &Array2<f64>, wm: &Array2<f64>| matmul_std(&rows.view(), &wm.view());
        // Mask combination at the plane level.
        let dcols_r = cols_from(&x_rows_r, &wr) - cols_from(&x_rows_i, &wi);
        let dcols_i = cols_from(&x_rows_r, &wi) + cols_from(&x_rows_i, &wr);
        let mut out_r = col2im(&dcols_r, &geom, b, co).into_dyn();
        let mut out_i = col2im(&dcols_i, &geom, b, co).into_dyn();
        add_channel_bias(&mut out_r, &self.bias.re);
        add_channel_bias(&mut out_i, &self.bias.im);

        Ok((
            ComplexTensor {
                re: out_r,
                im: out_i,
            },
            DeconvCache {
                x_rows_r,
                x_rows_i,
                geom,
                batch: b,
                in_spatial: (h, w),
            },
        ))
    }

    pub fn backward(
        &self,
        cache: &DeconvCache,
        grad_out: &ComplexTensor,
    ) -> (DeconvGrads, ComplexTensor) {
        let g = &cache.geom;
        let b = cache.batch;
        let (h, w) = cache.in_spatial;
        let gr4 = as4(&grad_out.re);
        let gi4 = as4(&grad_out.im);
        let bias_grads = ComplexTensor {
            re: channel_bias_grad(&gr4),
            im: channel_bias_grad(&gi4),
        };

        // The adjoint convolution runs forward over the upstream gradient.
        let gcols_r = im2col(&gr4, g);
        let gcols_i = im2col(&gi4, g);

        // dW' [inC, outC*kh*kw] = x_rows^T . cols(g), combined by the mask.
        let dwr_adj = matmul_std(&cache.x_rows_r.t(), &gcols_r.view())
            + matmul_std(&cache.x_rows_i.t(), &gcols_i.view());
        let dwi_adj = matmul_std(&cache.x_rows_r.t(), &gcols_i.view())
            - matmul_std(&cache.x_rows_i.t(), &gcols_r.view());
        let kshape = self.kernels.shape().to_vec(); // [outC, inC, kh, kw]
        let unswap = |m: Array2<f64>| {
            m.into_shape_with_order((kshape[1], kshape[0], kshape[2], kshape[3]))
                .expect("contiguous")
                .permuted_axes([1, 0, 2, 3])
                .as_standard_layout()
                .into_owned()
                .into_dyn()
        };
        let kernel_grads = ComplexTensor {
            re: unswap(dwr_adj),
            im: unswap(dwi_adj),
        };

        let wr = Self::adjoint_kernel_matrix(&self.kernels.re);
        let wi = Self::adjoint_kernel_matrix(&self.kernels.im);
        let dx_rows_r = matmul_std(&gcols_r.view(), &wr.t()) + matmul_std(&gcols_i.view(), &wi.t());
        let dx_rows_i = matmul_std(&gcols_i.view(), &wr.t()) - matmul_std(&gcols_r.view(), &wi.t());
        let ci = self.in_channels();
        let to_nchw = |rows: Array2<f64>| {
            rows.into_shape_with_order((b, h, w, ci))
                .expect("row count matches")
                .permuted_axes([0, 3, 1, 2])
                .as_standard_layout()
                .into_owned()
                .into_dyn()
        };

        (
            DeconvGrads {
                kernels: kernel_grads,
                bias: bias_grads,
            },
            ComplexTensor {
                re: to_nchw(dx_rows_r),
                im: to_nchw(dx_rows_i),
            },
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ctensor::ComplexScalar;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn unit_kernel_conv(value: ComplexScalar) -> ComplexConv2d {
        let mut kernels = ComplexTensor::zeros(&[1, 1, 1, 1]);
        kernels.set(&[0, 0, 0, 0], value);
        ComplexConv2d {
            kernels,
            bias: ComplexTensor::zeros(&[1]),
            stride: 1,
            padding: 0,
        }
    }

    #[test]
    fn conv_1x1_identity_and_rotation() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut x = ComplexTensor::zeros(&[2, 1, 3, 3]);
        for v in x.re.iter_mut() {
            *v = rng.random_range(-1.0..1.0);
        }
        for v in x.im.iter_mut() {
            *v = rng.random_range(-1.0..1.0);
        }

        let (y, _) = unit_kernel_conv(ComplexScalar::ONE).forward(&x).unwrap();
        assert_eq!(y, x);

        // multiplication by i: (a+bi) -> (-b+ai)
        let (y, _) = unit_kernel_conv(ComplexScalar::I).forward(&x).unwrap();
        for (yv, xv) in y.re.iter().zip(x.im.iter()) {
            assert_abs_diff_eq!(*yv, -xv, epsilon = 1e-15);
        }
        for (yv, xv) in y.im.iter().zip(x.re.iter()) {
            assert_abs_diff_eq!(*yv, *xv, epsilon = 1e-15);
        }
    }

    #[test]
    fn conv_2x2_constant_sum() {
        // 2x2 all-(1+0i) kernel on constant (c+0i), valid padding: every output 4c.
        let kernels = ComplexTensor::from_real(ndarray::ArrayD::ones(ndarray::IxDyn(&[1, 1, 2, 2])));
        let conv = ComplexConv2d {
            kernels,
            bias: ComplexTensor::zeros(&[1]),
            stride: 1,
            padding: 0,
        };
        let c = 1.75;
        let x = ComplexTensor::from_real(ndarray::ArrayD::from_elem(ndarray::IxDyn(&[1, 1, 4, 4]), c));
        let (y, _) = conv.forward(&x).unwrap();
        assert_eq!(y.shape(), &[1, 1, 3, 3]);
        for v in y.re.iter() {
            assert_abs_diff_eq!(*v, 4.0 * c, epsilon = 1e-12);
        }
        for v in y.im.iter() {
            assert_abs_diff_eq!(*v, 0.0);
        }
    }

    #[test]
    fn conv_degenerate_output_is_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let conv = ComplexConv2d::new(&mut rng, 1, 1, 5, 1, 0);
        let x = ComplexTensor::zeros(&[1, 1, 3, 3]);
        assert!(matches!(
            conv.forward(&x),
            Err(Error::DegenerateConvOutput { h: 3, w: 3, kh: 5, .. })
        ));
    }

    #[test]
    fn deconv_identity_and_size_formula() {
        let mut deconv = ComplexConvTranspose2d {
            kernels: ComplexTensor::zeros(&[1, 1, 1, 1]),
            bias: ComplexTensor::zeros(&[1]),
            stride: 1,
            padding: 0,
        };
        deconv.kernels.set(&[0, 0, 0, 0], ComplexScalar::ONE);
        let mut x = ComplexTensor::zeros(&[1, 1, 3, 3]);
        x.set(&[0, 0, 1, 2], ComplexScalar::new(2.0, -1.0));
        let (y, _) = deconv.forward(&x).unwrap();
        assert_eq!(y, x);

        // stride-2 3x3 deconv of 4x4 input, pad 0 -> (4-1)*2 + 3 = 9
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let deconv = ComplexConvTranspose2d::new(&mut rng, 2, 3, 3, 2, 0);
        let x = ComplexTensor::zeros(&[1, 2, 4, 4]);
        let (y, _) = deconv.forward(&x).unwrap();
        assert_eq!(y.shape(), &[1, 3, 9, 9]);
    }

    #[test]
    fn deconv_is_adjoint_of_conv_for_real_kernels() {
        // <conv(x), y> = <x, deconv(y)> with shared real kernels.
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let co = 3;
        let ci = 2;
        let mut conv = ComplexConv2d::new(&mut rng, ci, co, 4, 2, 1);
        conv.kernels.im.fill(0.0);

        // deconv kernels [outC=ci, inC=co] share the conv kernel data.
        let kr4 = conv
            .kernels
            .re
            .view()
            .into_dimensionality::<Ix4>()
            .unwrap()
            .permuted_axes([1, 0, 2, 3])
            .as_standard_layout()
            .into_owned();
        let deconv = ComplexConvTranspose2d {
            kernels: ComplexTensor::from_real(kr4.into_dyn()),
            bias: ComplexTensor::zeros(&[ci]),
            stride: 2,
            padding: 1,
        };

        let mut x = ComplexTensor::zeros(&[2, ci, 8, 8]);
        let mut y = ComplexTensor::zeros(&[2, co, 4, 4]);
        for v in x.re.iter_mut().chain(x.im.iter_mut()) {
            *v = rng.random_range(-1.0..1.0);
        }
        for v in y.re.iter_mut().chain(y.im.iter_mut()) {
            *v = rng.random_range(-1.0..1.0);
        }

        let (cx, _) = conv.forward(&x).unwrap();
        let (dy, _) = deconv.forward(&y).unwrap();

        let inner_a: f64 = cx.re.iter().zip(y.re.iter()).map(|(a, b)| a * b).sum::<f64>()
            + cx.im.iter().zip(y.im.iter()).map(|(a, b)| a * b).sum::<f64>();
        let inner_b: f64 = x.re.iter().zip(dy.re.iter()).map(|(a, b)| a * b).sum::<f64>()
            + x.im.iter().zip(dy.im.iter()).map(|(a, b)| a * b).sum::<f64>();
        assert_abs_diff_eq!(inner_a, inner_b, epsilon = 1e-10);
    }

    #[test]
    fn deconv_1x1_multiplication_by_i() {
        let mut deconv = ComplexConvTranspose2d {
            kernels: ComplexTensor::zeros(&[1, 1, 1, 1]),
            bias: ComplexTensor::zeros(&[1]),
            stride: 1,
            padding: 0,
        };
        deconv.kernels.set(&[0, 0, 0, 0], ComplexScalar::I);
        let mut x = ComplexTensor::zeros(&[1, 1, 2, 2]);
        x.set(&[0, 0, 0, 1], ComplexScalar::new(3.0, 4.0));
        let (y, _) = deconv.forward(&x).unwrap();
        assert_eq!(y.get(&[0, 0, 0, 1]), ComplexScalar::new(-4.0, 3.0));
    }
}
