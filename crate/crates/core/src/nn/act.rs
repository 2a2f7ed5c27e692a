//! Complex activation functions built from real scalar functions.
//!
//! Two extension schemes are supported: Type-A applies a real function to
//! each plane independently, Type-B transforms magnitude and phase.

use num_complex::Complex64;

use crate::ctensor::{modulus_scalar, phase_scalar, ComplexTensor, RealTensor};

/// Real scalar functions with known derivatives, usable inside the
/// gradient engine. ReLU takes subgradient 0 at the origin.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RealFn {
    Identity,
    Relu,
    Tanh,
    Sigmoid,
}

impl RealFn {
    pub fn eval(self, x: f64) -> f64 {
        match self {
            RealFn::Identity => x,
            // NaN passes through so numeric failures stay visible.
            RealFn::Relu => {
                if x > 0.0 || x.is_nan() {
                    x
                } else {
                    0.0
                }
            }
            RealFn::Tanh => x.tanh(),
            RealFn::Sigmoid => 1.0 / (1.0 + (-x).exp()),
        }
    }

    pub fn deriv(self, x: f64) -> f64 {
        match self {
            RealFn::Identity => 1.0,
            RealFn::Relu => {
                if x > 0.0 {
                    1.0
                } else if x.is_nan() {
                    f64::NAN
                } else {
                    0.0
                }
            }
            RealFn::Tanh => {
                let t = x.tanh();
                1.0 - t * t
            }
            RealFn::Sigmoid => {
                let s = 1.0 / (1.0 + (-x).exp());
                s * (1.0 - s)
            }
        }
    }
}

/// Type-A activation: sigma(Re(z)) + i sigma(Im(z)), planes independent.
pub fn type_a(
    sigma_re: impl Fn(f64) -> f64,
    sigma_im: impl Fn(f64) -> f64,
    z: &ComplexTensor,
) -> ComplexTensor {
    z.map(|v| Complex64::new(sigma_re(v.re), sigma_im(v.im)))
}

/// Type-B activation: sigma_r(|z|) * exp(i sigma_phi(arg(z))).
///
/// Phase of 0 is 0, so type_b(f, g, 0) = f(0) * exp(i g(0)) stays total.
pub fn type_b(
    sigma_r: impl Fn(f64) -> f64,
    sigma_phi: impl Fn(f64) -> f64,
    z: &ComplexTensor,
) -> ComplexTensor {
    z.map(|v| {
        let r = sigma_r(modulus_scalar(v));
        let phi = sigma_phi(phase_scalar(v));
        Complex64::new(r * phi.cos(), r * phi.sin())
    })
}

/// Complex ReLU: Type-A with ReLU on both planes.
pub fn crelu(z: &ComplexTensor) -> ComplexTensor {
    type_a(|x| RealFn::Relu.eval(x), |x| RealFn::Relu.eval(x), z)
}

/// Plain real activation applied elementwise.
pub fn apply_real(f: RealFn, x: &RealTensor) -> RealTensor {
    x.map(|v| f.eval(v))
}
