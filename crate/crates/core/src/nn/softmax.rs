//! Softmax output activation and the class prediction rule.
//!
//! For complex logits the real softmax is applied independently to the
//! real and imaginary planes; prediction averages the two plane
//! probabilities and takes the argmax (ties broken by lowest index).

use num_complex::Complex64;

use crate::ctensor::{ComplexTensor, RealTensor};
use crate::error::{Error, Result};

fn class_axis(shape: &[usize]) -> Result<(usize, usize)> {
    if shape.is_empty() {
        return Err(Error::Shape("softmax needs at least one axis".into()));
    }
    let k = shape[shape.len() - 1];
    let rows = shape[..shape.len() - 1].iter().product::<usize>().max(1);
    Ok((rows, k))
}

pub(crate) fn softmax_row(row: &mut [f64]) {
    let mut max = f64::NEG_INFINITY;
    for &v in row.iter() {
        if v > max {
            max = v;
        }
    }
    let mut sum = 0.0;
    for v in row.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in row.iter_mut() {
        *v /= sum;
    }
}

/// Plane-wise softmax over the last (class) axis.
pub fn softmax_output(z: &ComplexTensor) -> Result<ComplexTensor> {
    let (rows, k) = class_axis(z.shape())?;
    let mut re: Vec<f64> = z.data().iter().map(|v| v.re).collect();
    let mut im: Vec<f64> = z.data().iter().map(|v| v.im).collect();
    for r in 0..rows {
        softmax_row(&mut re[r * k..(r + 1) * k]);
        softmax_row(&mut im[r * k..(r + 1) * k]);
    }
    let data = re
        .into_iter()
        .zip(im)
        .map(|(a, b)| Complex64::new(a, b))
        .collect();
    ComplexTensor::from_vec(z.shape(), data)
}

/// Real softmax over the last axis.
pub fn softmax_output_real(z: &RealTensor) -> Result<RealTensor> {
    let (rows, k) = class_axis(z.shape())?;
    let mut data = z.data().to_vec();
    for r in 0..rows {
        softmax_row(&mut data[r * k..(r + 1) * k]);
    }
    RealTensor::from_vec(z.shape(), data)
}

/// Predicted class of one output row: argmax of (Re + Im)/2, lowest index wins ties.
pub fn prediction(y_row: &[Complex64]) -> usize {
    let mut best = f64::NEG_INFINITY;
    let mut arg = 0;
    for (i, v) in y_row.iter().enumerate() {
        let score = (v.re + v.im) / 2.0;
        if score > best {
            best = score;
            arg = i;
        }
    }
    arg
}

/// Predicted class of one real output row.
pub fn prediction_real(y_row: &[f64]) -> usize {
    let mut best = f64::NEG_INFINITY;
    let mut arg = 0;
    for (i, &v) in y_row.iter().enumerate() {
        if v > best {
            best = v;
            arg = i;
        }
    }
    arg
}
