//! Complex and real n-dimensional tensors plus the arithmetic kernels
//! (elementwise ops, matrix multiply, 2-D cross-correlation) every other
//! module consumes.
//!
//! Tensors are immutable values once constructed; all kernels are pure
//! functions over `f64` / `Complex64` data stored row-major.

mod conv;
mod matmul;

pub use conv::{conv2d, conv2d_real, Padding};
pub use matmul::{matmul, matmul_real};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// n-dimensional tensor of double-precision complex scalars, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexTensor {
    shape: Vec<usize>,
    data: Vec<Complex64>,
}

/// n-dimensional tensor of double-precision real scalars, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RealTensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

fn numel(shape: &[usize]) -> usize {
    shape.iter().product()
}

impl ComplexTensor {
    pub fn zeros(shape: &[usize]) -> Self {
        Self {
            shape: shape.to_vec(),
            data: vec![Complex64::new(0.0, 0.0); numel(shape)],
        }
    }

    pub fn from_vec(shape: &[usize], data: Vec<Complex64>) -> Result<Self> {
        if numel(shape) != data.len() {
            return Err(Error::Shape(format!(
                "shape {:?} holds {} scalars, got {}",
                shape,
                numel(shape),
                data.len()
            )));
        }
        Ok(Self {
            shape: shape.to_vec(),
            data,
        })
    }

    /// Builds a complex tensor from separate real and imaginary planes.
    pub fn from_planes(re: &RealTensor, im: &RealTensor) -> Result<Self> {
        if re.shape != im.shape {
            return Err(Error::Shape(format!(
                "plane shapes differ: {:?} vs {:?}",
                re.shape, im.shape
            )));
        }
        let data = re
            .data
            .iter()
            .zip(&im.data)
            .map(|(&a, &b)| Complex64::new(a, b))
            .collect();
        Ok(Self {
            shape: re.shape.clone(),
            data,
        })
    }

    pub fn scalar(z: Complex64) -> Self {
        Self {
            shape: vec![],
            data: vec![z],
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    /// View of the real parts as a real tensor of identical shape.
    pub fn re(&self) -> RealTensor {
        RealTensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|z| z.re).collect(),
        }
    }

    /// View of the imaginary parts as a real tensor of identical shape.
    pub fn im(&self) -> RealTensor {
        RealTensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|z| z.im).collect(),
        }
    }

    pub fn conj(&self) -> Self {
        self.map(|z| z.conj())
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&z| f(z)).collect(),
        }
    }

    pub fn reshape(&self, shape: &[usize]) -> Result<Self> {
        if numel(shape) != self.data.len() {
            return Err(Error::Shape(format!(
                "cannot reshape {:?} ({} scalars) to {:?}",
                self.shape,
                self.data.len(),
                shape
            )));
        }
        Ok(Self {
            shape: shape.to_vec(),
            data: self.data.clone(),
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a - b)
    }

    pub fn mul_elem(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a * b)
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|z| z * s)
    }

    pub fn neg(&self) -> Self {
        self.map(|z| -z)
    }

    /// Transpose of a 2-D tensor.
    pub fn transpose(&self) -> Result<Self> {
        let [r, c] = self.shape[..] else {
            return Err(Error::Shape(format!(
                "transpose needs a 2-D tensor, got {:?}",
                self.shape
            )));
        };
        let mut data = vec![Complex64::new(0.0, 0.0); r * c];
        for i in 0..r {
            for j in 0..c {
                data[j * r + i] = self.data[i * c + j];
            }
        }
        Self::from_vec(&[c, r], data)
    }

    /// Conjugate transpose of a 2-D tensor.
    pub fn hermitian(&self) -> Result<Self> {
        Ok(self.transpose()?.conj())
    }

    fn zip(&self, other: &Self, f: impl Fn(Complex64, Complex64) -> Complex64) -> Result<Self> {
        if self.shape != other.shape {
            return Err(Error::Shape(format!(
                "elementwise op on {:?} vs {:?}",
                self.shape, other.shape
            )));
        }
        Ok(Self {
            shape: self.shape.clone(),
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }
}

impl RealTensor {
    pub fn zeros(shape: &[usize]) -> Self {
        Self {
            shape: shape.to_vec(),
            data: vec![0.0; numel(shape)],
        }
    }

    pub fn full(shape: &[usize], value: f64) -> Self {
        Self {
            shape: shape.to_vec(),
            data: vec![value; numel(shape)],
        }
    }

    pub fn from_vec(shape: &[usize], data: Vec<f64>) -> Result<Self> {
        if numel(shape) != data.len() {
            return Err(Error::Shape(format!(
                "shape {:?} holds {} scalars, got {}",
                shape,
                numel(shape),
                data.len()
            )));
        }
        Ok(Self {
            shape: shape.to_vec(),
            data,
        })
    }

    pub fn scalar(x: f64) -> Self {
        Self {
            shape: vec![],
            data: vec![x],
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn reshape(&self, shape: &[usize]) -> Result<Self> {
        if numel(shape) != self.data.len() {
            return Err(Error::Shape(format!(
                "cannot reshape {:?} ({} scalars) to {:?}",
                self.shape,
                self.data.len(),
                shape
            )));
        }
        Ok(Self {
            shape: shape.to_vec(),
            data: self.data.clone(),
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a - b)
    }

    pub fn mul_elem(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a * b)
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|x| x * s)
    }

    pub fn neg(&self) -> Self {
        self.map(|x| -x)
    }

    /// Transpose of a 2-D tensor.
    pub fn transpose(&self) -> Result<Self> {
        let [r, c] = self.shape[..] else {
            return Err(Error::Shape(format!(
                "transpose needs a 2-D tensor, got {:?}",
                self.shape
            )));
        };
        let mut data = vec![0.0; r * c];
        for i in 0..r {
            for j in 0..c {
                data[j * r + i] = self.data[i * c + j];
            }
        }
        Self::from_vec(&[c, r], data)
    }

    fn zip(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.shape != other.shape {
            return Err(Error::Shape(format!(
                "elementwise op on {:?} vs {:?}",
                self.shape, other.shape
            )));
        }
        Ok(Self {
            shape: self.shape.clone(),
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }
}

/// Elementwise |z| = sqrt(Re^2 + Im^2).
pub fn modulus(z: &ComplexTensor) -> RealTensor {
    RealTensor {
        shape: z.shape.clone(),
        data: z.data.iter().map(|v| modulus_scalar(*v)).collect(),
    }
}

/// Elementwise |z|^2 = Re^2 + Im^2 (no square root, exact per element).
pub fn modulus_sq(z: &ComplexTensor) -> RealTensor {
    RealTensor {
        shape: z.shape.clone(),
        data: z.data.iter().map(|v| v.re * v.re + v.im * v.im).collect(),
    }
}

/// Elementwise phase in (-pi, pi], with phase(0) = 0.
pub fn phase(z: &ComplexTensor) -> RealTensor {
    RealTensor {
        shape: z.shape.clone(),
        data: z.data.iter().map(|v| phase_scalar(*v)).collect(),
    }
}

pub(crate) fn modulus_scalar(z: Complex64) -> f64 {
    (z.re * z.re + z.im * z.im).sqrt()
}

pub(crate) fn phase_scalar(z: Complex64) -> f64 {
    if z.re == 0.0 && z.im == 0.0 {
        return 0.0;
    }
    // Normalize -0.0 so that e.g. -1 - 0i lands on +pi, keeping the range (-pi, pi].
    let im = if z.im == 0.0 { 0.0 } else { z.im };
    im.atan2(z.re)
}
