//! Average categorical cross-entropy for complex predictions.
//!
//! The categorical cross-entropy is evaluated once per plane, using the
//! real and then the imaginary part as the prediction, and the two error
//! values are averaged. For real predictions it reduces to the plain
//! categorical cross-entropy.

use crate::ctensor::{ComplexTensor, RealTensor};
use crate::error::{Error, Result};

/// Floor applied inside the logarithm to keep saturated softmax finite.
pub const LOG_FLOOR: f64 = 1e-12;

fn check_rows(y_shape: &[usize], d_shape: &[usize]) -> Result<(usize, usize)> {
    if y_shape != d_shape {
        return Err(Error::Contract(format!(
            "prediction shape {y_shape:?} vs target shape {d_shape:?}"
        )));
    }
    if y_shape.is_empty() {
        return Err(Error::Contract("loss needs a class axis".into()));
    }
    let k = y_shape[y_shape.len() - 1];
    let rows = y_shape[..y_shape.len() - 1].iter().product::<usize>().max(1);
    Ok((rows, k))
}

/// Clamp for the log argument; NaN passes through so numeric failures
/// surface in the loss instead of being silently floored.
fn clamp_prob(p: f64) -> f64 {
    if p > LOG_FLOOR {
        p
    } else if p.is_nan() {
        f64::NAN
    } else {
        LOG_FLOOR
    }
}

fn cce_row(p: &[f64], d: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (pi, di) in p.iter().zip(d) {
        if *di != 0.0 {
            acc -= di * clamp_prob(*pi).ln();
        }
    }
    acc
}

/// Mean complex average cross-entropy over the batch:
/// `0.5 * [CCE(Re(y), d) + CCE(Im(y), d)]` per row, then mean over rows.
pub fn ace_loss(y: &ComplexTensor, d: &RealTensor) -> Result<f64> {
    let (rows, _) = check_rows(y.shape(), d.shape())?;
    let w = vec![1.0 / rows as f64; rows];
    ace_loss_weighted(y, d, &w)
}

/// Row-weighted form: `sum_r rw[r] * 0.5 * [CCE_re(r) + CCE_im(r)]`.
///
/// Row weights carry masking and class weighting already folded in,
/// including the normalization (plain mean uses rw = 1/rows).
pub fn ace_loss_weighted(y: &ComplexTensor, d: &RealTensor, row_weights: &[f64]) -> Result<f64> {
    let (rows, k) = check_rows(y.shape(), d.shape())?;
    if row_weights.len() != rows {
        return Err(Error::Contract(format!(
            "{} row weights for {} rows",
            row_weights.len(),
            rows
        )));
    }
    let mut acc = 0.0;
    for r in 0..rows {
        let dr = &d.data()[r * k..(r + 1) * k];
        let yr = &y.data()[r * k..(r + 1) * k];
        let mut cce_re = 0.0;
        let mut cce_im = 0.0;
        for (yi, di) in yr.iter().zip(dr) {
            if *di != 0.0 {
                cce_re -= di * clamp_prob(yi.re).ln();
                cce_im -= di * clamp_prob(yi.im).ln();
            }
        }
        acc += row_weights[r] * 0.5 * (cce_re + cce_im);
    }
    Ok(acc)
}

/// Plain categorical cross-entropy, mean over rows.
pub fn cce_loss(y: &RealTensor, d: &RealTensor) -> Result<f64> {
    let (rows, _) = check_rows(y.shape(), d.shape())?;
    let w = vec![1.0 / rows as f64; rows];
    cce_loss_weighted(y, d, &w)
}

/// Row-weighted categorical cross-entropy (real predictions).
pub fn cce_loss_weighted(y: &RealTensor, d: &RealTensor, row_weights: &[f64]) -> Result<f64> {
    let (rows, k) = check_rows(y.shape(), d.shape())?;
    if row_weights.len() != rows {
        return Err(Error::Contract(format!(
            "{} row weights for {} rows",
            row_weights.len(),
            rows
        )));
    }
    let mut acc = 0.0;
    for r in 0..rows {
        acc += row_weights[r] * cce_row(&y.data()[r * k..(r + 1) * k], &d.data()[r * k..(r + 1) * k]);
    }
    Ok(acc)
}

/// One-hot encodes labels into a [rows, classes] real tensor.
pub fn one_hot(labels: &[usize], classes: usize) -> Result<RealTensor> {
    let mut data = vec![0.0; labels.len() * classes];
    for (r, &l) in labels.iter().enumerate() {
        if l >= classes {
            return Err(Error::Contract(format!(
                "label {l} out of range for {classes} classes"
            )));
        }
        data[r * classes + l] = 1.0;
    }
    RealTensor::from_vec(&[labels.len(), classes], data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_stochastic_rows(rng: &mut ChaCha8Rng, rows: usize, k: usize) -> Vec<Vec<f64>> {
        (0..rows)
            .map(|_| {
                let mut v: Vec<f64> = (0..k).map(|_| rng.random_range(0.01..1.0)).collect();
                let s: f64 = v.iter().sum();
                v.iter_mut().for_each(|x| *x /= s);
                v
            })
            .collect()
    }

    #[test]
    fn symmetric_half_half_case() {
        let y = ComplexTensor::from_vec(&[1, 2], vec![c(0.5, 0.5), c(0.5, 0.5)]).unwrap();
        let d = RealTensor::from_vec(&[1, 2], vec![1.0, 0.0]).unwrap();
        let l = ace_loss(&y, &d).unwrap();
        assert!((l - 0.5f64.recip().ln()).abs() < 1e-12); // -ln 0.5 = ln 2
        assert!((l - 0.6931).abs() < 1e-4);
    }

    #[test]
    fn real_output_equals_cce() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..50 {
            let p = random_stochastic_rows(&mut rng, 4, 3);
            let labels: Vec<usize> = (0..4).map(|_| rng.random_range(0..3)).collect();
            let d = one_hot(&labels, 3).unwrap();
            let flat: Vec<f64> = p.iter().flatten().copied().collect();
            let yr = RealTensor::from_vec(&[4, 3], flat.clone()).unwrap();
            // Both planes carry the same real prediction.
            let yc = ComplexTensor::from_vec(
                &[4, 3],
                flat.iter().map(|&v| c(v, v)).collect(),
            )
            .unwrap();
            let cce = cce_loss(&yr, &d).unwrap();
            assert_eq!(ace_loss(&yc, &d).unwrap(), cce);
        }
    }

    #[test]
    fn matches_scalar_loop_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        let re = random_stochastic_rows(&mut rng, 6, 4);
        let im = random_stochastic_rows(&mut rng, 6, 4);
        let labels: Vec<usize> = (0..6).map(|_| rng.random_range(0..4)).collect();
        let d = one_hot(&labels, 4).unwrap();
        let data: Vec<Complex64> = re
            .iter()
            .flatten()
            .zip(im.iter().flatten())
            .map(|(&a, &b)| c(a, b))
            .collect();
        let y = ComplexTensor::from_vec(&[6, 4], data).unwrap();
        let got = ace_loss(&y, &d).unwrap();

        let mut want = 0.0;
        for r in 0..6 {
            let l = labels[r];
            want += 0.5 * (-(re[r][l].max(LOG_FLOOR).ln()) - im[r][l].max(LOG_FLOOR).ln());
        }
        want /= 6.0;
        assert!((got - want).abs() < 1e-12);
    }

    #[test]
    fn loss_nonnegative_and_zero_at_certainty() {
        let y = ComplexTensor::from_vec(&[1, 2], vec![c(1.0, 1.0), c(0.0, 0.0)]).unwrap();
        let d = RealTensor::from_vec(&[1, 2], vec![1.0, 0.0]).unwrap();
        assert_eq!(ace_loss(&y, &d).unwrap(), 0.0);
        let y2 = ComplexTensor::from_vec(&[1, 2], vec![c(0.9, 1.0), c(0.1, 0.0)]).unwrap();
        assert!(ace_loss(&y2, &d).unwrap() > 0.0);
    }

    #[test]
    fn all_ones_weights_equal_unweighted_bitwise() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let re = random_stochastic_rows(&mut rng, 5, 3);
        let im = random_stochastic_rows(&mut rng, 5, 3);
        let labels: Vec<usize> = (0..5).map(|_| rng.random_range(0..3)).collect();
        let d = one_hot(&labels, 3).unwrap();
        let data: Vec<Complex64> = re
            .iter()
            .flatten()
            .zip(im.iter().flatten())
            .map(|(&a, &b)| c(a, b))
            .collect();
        let y = ComplexTensor::from_vec(&[5, 3], data).unwrap();
        let w = vec![1.0 / 5.0; 5];
        assert_eq!(
            ace_loss(&y, &d).unwrap().to_bits(),
            ace_loss_weighted(&y, &d, &w).unwrap().to_bits()
        );
    }

    #[test]
    fn nan_prediction_surfaces_in_loss() {
        let y = ComplexTensor::from_vec(&[1, 2], vec![c(f64::NAN, 0.5), c(0.5, 0.5)]).unwrap();
        let d = RealTensor::from_vec(&[1, 2], vec![1.0, 0.0]).unwrap();
        assert!(ace_loss(&y, &d).unwrap().is_nan());
    }

    #[test]
    fn shape_mismatch_is_contract_error() {
        let y = ComplexTensor::zeros(&[2, 3]);
        let d = RealTensor::zeros(&[2, 4]);
        assert!(ace_loss(&y, &d).is_err());
    }
}
