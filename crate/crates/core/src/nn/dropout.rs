//! Dropout with one Bernoulli mask shared by both planes: a complex unit
//! drops as a whole, survivors are scaled by 1/(1 - rate). Identity at
//! inference time.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::ctensor::{ComplexTensor, RealTensor};
use crate::error::{Error, Result};

/// Draws the dropout mask: 0 with probability `rate`, 1/(1-rate) otherwise.
pub fn dropout_mask(shape: &[usize], rate: f64, rng: &mut ChaCha8Rng) -> Result<RealTensor> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::Contract(format!(
            "dropout rate must be in [0, 1), got {rate}"
        )));
    }
    let keep = 1.0 / (1.0 - rate);
    let n: usize = shape.iter().product();
    let data = (0..n)
        .map(|_| {
            if rng.random::<f64>() < rate {
                0.0
            } else {
                keep
            }
        })
        .collect();
    RealTensor::from_vec(shape, data)
}

/// Standalone dropout over a plain complex tensor.
pub fn dropout_complex(
    x: &ComplexTensor,
    rate: f64,
    rng: &mut ChaCha8Rng,
    training: bool,
) -> Result<ComplexTensor> {
    if !training || rate == 0.0 {
        if !(0.0..1.0).contains(&rate) {
            return Err(Error::Contract(format!(
                "dropout rate must be in [0, 1), got {rate}"
            )));
        }
        return Ok(x.clone());
    }
    let mask = dropout_mask(x.shape(), rate, rng)?;
    let data = x
        .data()
        .iter()
        .zip(mask.data())
        .map(|(z, m)| z * *m)
        .collect();
    ComplexTensor::from_vec(x.shape(), data)
}
