//! Weight initialization.
//!
//! Complex weights follow the He scheme adapted to the complex domain:
//! Rayleigh-distributed magnitudes with scale sigma = sqrt(1/fan_in) and
//! phases uniform on (-pi, pi], giving E|w|^2 = 2/fan_in. Real weights use
//! He normal with variance 2/fan_in. Biases start at zero.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::ctensor::{ComplexTensor, RealTensor};
use crate::error::{Error, Result};

/// He-style complex initialization: |w| ~ Rayleigh(sqrt(1/fan_in)),
/// arg(w) ~ U(-pi, pi].
pub fn he_complex_init(fan_in: usize, shape: &[usize], rng: &mut ChaCha8Rng) -> Result<ComplexTensor> {
    if fan_in == 0 {
        return Err(Error::Contract("fan_in must be >= 1".into()));
    }
    let sigma = (1.0 / fan_in as f64).sqrt();
    let n: usize = shape.iter().product();
    let mut data = Vec::with_capacity(n);
    for _ in 0..n {
        // Inverse-CDF Rayleigh sample; 1 - U keeps the argument in (0, 1].
        let u: f64 = rng.random();
        let mag = sigma * (-2.0 * (1.0 - u).ln()).sqrt();
        let phase = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
        data.push(Complex64::new(mag * phase.cos(), mag * phase.sin()));
    }
    ComplexTensor::from_vec(shape, data)
}

/// He normal initialization for real weights: w ~ N(0, 2/fan_in).
pub fn he_real_init(fan_in: usize, shape: &[usize], rng: &mut ChaCha8Rng) -> Result<RealTensor> {
    if fan_in == 0 {
        return Err(Error::Contract("fan_in must be >= 1".into()));
    }
    let std = (2.0 / fan_in as f64).sqrt();
    let normal = Normal::new(0.0, std).expect("valid std");
    let n: usize = shape.iter().product();
    let data = (0..n).map(|_| normal.sample(rng)).collect();
    RealTensor::from_vec(shape, data)
}
