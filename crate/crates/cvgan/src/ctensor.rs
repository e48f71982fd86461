//! Complex scalars and dense complex tensors.
//!
//! A [`ComplexTensor`] stores its real and imaginary parts as two parallel
//! real-valued arrays sharing one shape. Every complex linear operation in
//! this crate decomposes into four real operations on those planes plus one
//! elementwise add and one subtract, so the planar layout keeps each real
//! operation on contiguous data.

use ndarray::{concatenate, ArrayD, ArrayView2, Axis, Ix2, IxDyn};
use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};

/// A complex number stored as a real/imaginary pair.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct ComplexScalar {
    pub re: f64,
    pub im: f64,
}

impl ComplexScalar {
    pub const ZERO: ComplexScalar = ComplexScalar { re: 0.0, im: 0.0 };
    pub const ONE: ComplexScalar = ComplexScalar { re: 1.0, im: 0.0 };
    pub const I: ComplexScalar = ComplexScalar { re: 0.0, im: 1.0 };

    pub fn new(re: f64, im: f64) -> Self {
        Self { re, im }
    }

    pub fn conj(self) -> Self {
        Self::new(self.re, -self.im)
    }

    pub fn modulus(self) -> f64 {
        self.re.hypot(self.im)
    }
}

impl Add for ComplexScalar {
    type Output = ComplexScalar;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.re + rhs.re, self.im + rhs.im)
    }
}

impl Sub for ComplexScalar {
    type Output = ComplexScalar;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.re - rhs.re, self.im - rhs.im)
    }
}

/// (a+ib)(c+id) = (ac - bd) + i(ad + bc)
impl Mul for ComplexScalar {
    type Output = ComplexScalar;
    fn mul(self, rhs: Self) -> Self {
        Self::new(
            self.re * rhs.re - self.im * rhs.im,
            self.re * rhs.im + self.im * rhs.re,
        )
    }
}

impl Neg for ComplexScalar {
    type Output = ComplexScalar;
    fn neg(self) -> Self {
        Self::new(-self.re, -self.im)
    }
}

/// Dense rank-N complex tensor with planar real/imaginary storage.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexTensor {
    pub re: ArrayD<f64>,
    pub im: ArrayD<f64>,
}

impl ComplexTensor {
    pub fn zeros(shape: &[usize]) -> Self {
        Self {
            re: ArrayD::zeros(IxDyn(shape)),
            im: ArrayD::zeros(IxDyn(shape)),
        }
    }

    pub fn full(shape: &[usize], value: ComplexScalar) -> Self {
        Self {
            re: ArrayD::from_elem(IxDyn(shape), value.re),
            im: ArrayD::from_elem(IxDyn(shape), value.im),
        }
    }

    /// Builds a tensor from two equally shaped real planes.
    pub fn from_planes(re: ArrayD<f64>, im: ArrayD<f64>) -> Result<Self> {
        if re.shape() != im.shape() {
            return Err(Error::ShapeMismatch {
                left: re.shape().to_vec(),
                right: im.shape().to_vec(),
            });
        }
        Ok(Self { re, im })
    }

    pub fn from_vecs(shape: &[usize], re: Vec<f64>, im: Vec<f64>) -> Result<Self> {
        let re = ArrayD::from_shape_vec(IxDyn(shape), re).map_err(|_| Error::InvalidConfig {
            reason: format!("real plane does not fill shape {shape:?}"),
        })?;
        let im = ArrayD::from_shape_vec(IxDyn(shape), im).map_err(|_| Error::InvalidConfig {
            reason: format!("imaginary plane does not fill shape {shape:?}"),
        })?;
        Self::from_planes(re, im)
    }

    /// A purely real tensor (imaginary plane all zero).
    pub fn from_real(re: ArrayD<f64>) -> Self {
        let im = ArrayD::zeros(re.raw_dim());
        Self { re, im }
    }

    pub fn shape(&self) -> &[usize] {
        self.re.shape()
    }

    pub fn len(&self) -> usize {
        self.re.len()
    }

    pub fn is_empty(&self) -> bool {
        self.re.is_empty()
    }

    pub fn get(&self, index: &[usize]) -> ComplexScalar {
        ComplexScalar::new(self.re[IxDyn(index)], self.im[IxDyn(index)])
    }

    pub fn set(&mut self, index: &[usize], value: ComplexScalar) {
        self.re[IxDyn(index)] = value.re;
        self.im[IxDyn(index)] = value.im;
    }

    /// Reshapes in place; the element count must be preserved.
    pub fn reshape(&self, shape: &[usize]) -> Result<Self> {
        let to_len: usize = shape.iter().product();
        if to_len != self.len() {
            return Err(Error::ReshapeCount {
                from: self.shape().to_vec(),
                from_len: self.len(),
                to: shape.to_vec(),
                to_len,
            });
        }
        let re = self
            .re
            .clone()
            .into_shape_with_order(IxDyn(shape))
            .expect("element count checked");
        let im = self
            .im
            .clone()
            .into_shape_with_order(IxDyn(shape))
            .expect("element count checked");
        Ok(Self { re, im })
    }

    fn check_same_shape(&self, rhs: &Self) -> Result<()> {
        if self.shape() != rhs.shape() {
            return Err(Error::ShapeMismatch {
                left: self.shape().to_vec(),
                right: rhs.shape().to_vec(),
            });
        }
        Ok(())
    }

    /// Elementwise sum.
    pub fn ewise_add(&self, rhs: &Self) -> Result<Self> {
        self.check_same_shape(rhs)?;
        Ok(Self {
            re: &self.re + &rhs.re,
            im: &self.im + &rhs.im,
        })
    }

    /// Elementwise difference.
    pub fn ewise_sub(&self, rhs: &Self) -> Result<Self> {
        self.check_same_shape(rhs)?;
        Ok(Self {
            re: &self.re - &rhs.re,
            im: &self.im - &rhs.im,
        })
    }

    /// Elementwise complex product via the four-real-products mask.
    pub fn ewise_mul(&self, rhs: &Self) -> Result<Self> {
        self.check_same_shape(rhs)?;
        Ok(Self {
            re: &self.re * &rhs.re - &self.im * &rhs.im,
            im: &self.re * &rhs.im + &self.im * &rhs.re,
        })
    }

    pub fn negate(&self) -> Self {
        Self {
            re: -&self.re,
            im: -&self.im,
        }
    }

    /// Multiplies both planes by a real scalar.
    pub fn scale(&self, factor: f64) -> Self {
        Self {
            re: &self.re * factor,
            im: &self.im * factor,
        }
    }

    /// Multiplies by a complex scalar.
    pub fn scale_complex(&self, z: ComplexScalar) -> Self {
        Self {
            re: &self.re * z.re - &self.im * z.im,
            im: &self.re * z.im + &self.im * z.re,
        }
    }

    /// Concatenates the real and imaginary planes along the trailing axis:
    /// shape [..., d] becomes [..., 2d] with columns 0..d carrying the real part.
    pub fn concat_real_imag(&self) -> ArrayD<f64> {
        let last = self.re.ndim() - 1;
        concatenate(Axis(last), &[self.re.view(), self.im.view()])
            .expect("planes share a shape by construction")
    }

    /// Frobenius-style squared modulus sum over all elements.
    pub fn sq_modulus_sum(&self) -> f64 {
        self.re.iter().map(|v| v * v).sum::<f64>() + self.im.iter().map(|v| v * v).sum::<f64>()
    }
}

/// Views a rank-2 dynamic array as a fixed `Ix2` matrix.
pub(crate) fn as_mat(a: &ArrayD<f64>) -> ArrayView2<'_, f64> {
    a.view()
        .into_dimensionality::<Ix2>()
        .expect("expected a rank-2 tensor")
}

/// Matrix product written into a freshly allocated row-major array.
/// (`dot` may hand back column-major storage depending on operand layout,
/// which breaks downstream flat-slice access.)
pub(crate) fn matmul_std(a: &ArrayView2<'_, f64>, b: &ArrayView2<'_, f64>) -> ndarray::Array2<f64> {
    let mut out = ndarray::Array2::zeros((a.nrows(), b.ncols()));
    ndarray::linalg::general_mat_mul(1.0, a, b, 0.0, &mut out);
    out
}

/// Complex matrix product of rank-2 tensors, decomposed into four real
/// products: out_r = a_r b_r - a_i b_i, out_i = a_r b_i + a_i b_r.
pub fn complex_matmul(a: &ComplexTensor, b: &ComplexTensor) -> Result<ComplexTensor> {
    if a.re.ndim() != 2 || b.re.ndim() != 2 {
        return Err(Error::InvalidConfig {
            reason: format!(
                "complex_matmul expects rank-2 tensors, got ranks {} and {}",
                a.re.ndim(),
                b.re.ndim()
            ),
        });
    }
    let (m, k_left) = (a.shape()[0], a.shape()[1]);
    let (k_right, n) = (b.shape()[0], b.shape()[1]);
    if k_left != k_right {
        return Err(Error::MatmulDims {
            m,
            k_left,
            k_right,
            n,
        });
    }
    let ar = as_mat(&a.re);
    let ai = as_mat(&a.im);
    let br = as_mat(&b.re);
    let bi = as_mat(&b.im);
    let out_r = matmul_std(&ar, &br) - matmul_std(&ai, &bi);
    let out_i = matmul_std(&ar, &bi) + matmul_std(&ai, &br);
    Ok(ComplexTensor {
        re: out_r.into_dyn(),
        im: out_i.into_dyn(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::arr2;

    fn c(re: f64, im: f64) -> ComplexScalar {
        ComplexScalar::new(re, im)
    }

    #[test]
    fn cmul_identity_and_i_squared() {
        let z = c(3.5, -2.0);
        assert_eq!(ComplexScalar::ONE * z, z);
        assert_eq!(ComplexScalar::I * ComplexScalar::I, c(-1.0, 0.0));
    }

    #[test]
    fn cmul_direct_evaluation() {
        // (1+2i)(3+4i) = -5 + 10i
        assert_eq!(c(1.0, 2.0) * c(3.0, 4.0), c(-5.0, 10.0));
    }

    #[test]
    fn cadd_csub() {
        let z = c(1.0, 2.0);
        assert_eq!(z + ComplexScalar::ZERO, z);
        assert_eq!(c(1.0, 2.0) + c(3.0, 4.0), c(4.0, 6.0));
        assert_eq!(z - z, ComplexScalar::ZERO);
    }

    #[test]
    fn ewise_ops() {
        let ones = ComplexTensor::full(&[2, 2], ComplexScalar::ONE);
        let x = ComplexTensor::from_vecs(
            &[2, 2],
            vec![1.0, 2.0, 3.0, 4.0],
            vec![-1.0, 0.5, 0.0, 2.0],
        )
        .unwrap();
        assert_eq!(ones.ewise_mul(&x).unwrap(), x);
        let zero = x.ewise_add(&x.negate()).unwrap();
        assert!(zero.re.iter().all(|&v| v == 0.0));
        assert!(zero.im.iter().all(|&v| v == 0.0));

        // (1+1i)^2 = 2i
        let a = ComplexTensor::full(&[2, 2], c(1.0, 1.0));
        let sq = a.ewise_mul(&a).unwrap();
        for idx in [[0, 0], [0, 1], [1, 0], [1, 1]] {
            assert_eq!(sq.get(&idx), c(0.0, 2.0));
        }
    }

    #[test]
    fn ewise_shape_mismatch_names_both_shapes() {
        let a = ComplexTensor::zeros(&[2, 3]);
        let b = ComplexTensor::zeros(&[3, 2]);
        match a.ewise_add(&b) {
            Err(Error::ShapeMismatch { left, right }) => {
                assert_eq!(left, vec![2, 3]);
                assert_eq!(right, vec![3, 2]);
            }
            other => panic!("expected shape mismatch, got {other:?}"),
        }
    }

    #[test]
    fn matmul_identity_and_i_squared() {
        let a = ComplexTensor::from_vecs(
            &[2, 2],
            vec![1.0, 2.0, 3.0, 4.0],
            vec![0.5, -0.5, 1.5, 0.0],
        )
        .unwrap();
        let eye = ComplexTensor::from_planes(
            arr2(&[[1.0, 0.0], [0.0, 1.0]]).into_dyn(),
            ArrayD::zeros(IxDyn(&[2, 2])),
        )
        .unwrap();
        let prod = complex_matmul(&a, &eye).unwrap();
        assert_eq!(prod, a);

        let i_mat = ComplexTensor::from_vecs(&[1, 1], vec![0.0], vec![1.0]).unwrap();
        let sq = complex_matmul(&i_mat, &i_mat).unwrap();
        assert_abs_diff_eq!(sq.re[[0, 0]], -1.0);
        assert_abs_diff_eq!(sq.im[[0, 0]], 0.0);
    }

    #[test]
    fn matmul_dim_mismatch() {
        let a = ComplexTensor::zeros(&[2, 3]);
        let b = ComplexTensor::zeros(&[4, 2]);
        assert!(matches!(
            complex_matmul(&a, &b),
            Err(Error::MatmulDims { k_left: 3, k_right: 4, .. })
        ));
    }

    #[test]
    fn concat_real_imag_layout() {
        // (3+4i) scalar-shaped tensor -> [3, 4]
        let z = ComplexTensor::from_vecs(&[1], vec![3.0], vec![4.0]).unwrap();
        let flat = z.concat_real_imag();
        assert_eq!(flat.shape(), &[2]);
        assert_eq!(flat[[0]], 3.0);
        assert_eq!(flat[[1]], 4.0);

        let x = ComplexTensor::from_vecs(
            &[2, 3],
            vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0],
            vec![10.0, 20.0, 30.0, 40.0, 50.0, 60.0],
        )
        .unwrap();
        let flat = x.concat_real_imag();
        assert_eq!(flat.shape(), &[2, 6]);
        for b in 0..2 {
            for j in 0..3 {
                assert_eq!(flat[[b, j]], x.re[[b, j]]);
                assert_eq!(flat[[b, j + 3]], x.im[[b, j]]);
            }
        }

        // purely real tensor -> second half all zero
        let r = ComplexTensor::from_real(arr2(&[[1.0, 2.0]]).into_dyn());
        let flat = r.concat_real_imag();
        assert_eq!(flat[[0, 2]], 0.0);
        assert_eq!(flat[[0, 3]], 0.0);
    }

    #[test]
    fn reshape_preserves_count() {
        let x = ComplexTensor::zeros(&[2, 6]);
        assert!(x.reshape(&[3, 4]).is_ok());
        assert!(matches!(
            x.reshape(&[5, 2]),
            Err(Error::ReshapeCount { .. })
        ));
    }
}
