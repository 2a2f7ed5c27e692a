//! Batch normalization for complex and real activations.
//!
//! The complex variant whitens each channel's (Re, Im) pair by the
//! inverse square root of the batch 2x2 covariance (plus eps on the
//! diagonal), then applies a trainable 2x2 affine plus complex shift.
//! The whitening is composed from differentiable tape primitives, so its
//! backward pass needs no hand-derived rule. Running statistics store the
//! eps-regularized covariance and are updated with momentum in training.

use num_complex::Complex64;

use crate::ctensor::{ComplexTensor, RealTensor};
use crate::error::{Error, Result};
use crate::grad::{Tape, Value, VarId};

pub const BN_EPSILON: f64 = 1e-5;
pub const BN_MOMENTUM: f64 = 0.9;

/// State of one complex batch-norm layer.
#[derive(Debug, Clone)]
pub struct BnComplex {
    pub channels: usize,
    /// Trainable 2x2 scale per channel, initialized to (1/2) I.
    pub scale_rr: RealTensor,
    pub scale_ri: RealTensor,
    pub scale_ir: RealTensor,
    pub scale_ii: RealTensor,
    /// Trainable complex shift per channel, initialized to zero.
    pub shift: ComplexTensor,
    /// Running mean and eps-regularized (Re, Im) covariance per channel.
    pub running_mean: ComplexTensor,
    pub run_cov_rr: RealTensor,
    pub run_cov_ri: RealTensor,
    pub run_cov_ii: RealTensor,
    pub momentum: f64,
    pub epsilon: f64,
}

/// State of one real batch-norm layer.
#[derive(Debug, Clone)]
pub struct BnReal {
    pub channels: usize,
    pub scale: RealTensor,
    pub shift: RealTensor,
    pub running_mean: RealTensor,
    /// Running eps-regularized variance.
    pub running_var: RealTensor,
    pub momentum: f64,
    pub epsilon: f64,
}

impl BnComplex {
    pub fn new(channels: usize) -> Self {
        Self {
            channels,
            scale_rr: RealTensor::full(&[channels], 0.5),
            scale_ri: RealTensor::zeros(&[channels]),
            scale_ir: RealTensor::zeros(&[channels]),
            scale_ii: RealTensor::full(&[channels], 0.5),
            shift: ComplexTensor::zeros(&[channels]),
            running_mean: ComplexTensor::zeros(&[channels]),
            run_cov_rr: RealTensor::full(&[channels], 1.0),
            run_cov_ri: RealTensor::zeros(&[channels]),
            run_cov_ii: RealTensor::full(&[channels], 1.0),
            momentum: BN_MOMENTUM,
            epsilon: BN_EPSILON,
        }
    }
}

impl BnReal {
    pub fn new(channels: usize) -> Self {
        Self {
            channels,
            scale: RealTensor::full(&[channels], 1.0),
            shift: RealTensor::zeros(&[channels]),
            running_mean: RealTensor::zeros(&[channels]),
            running_var: RealTensor::full(&[channels], 1.0),
            momentum: BN_MOMENTUM,
            epsilon: BN_EPSILON,
        }
    }
}

/// Tape parameter handles for one complex BN layer, in registration order.
pub struct BnComplexParams {
    pub scale_rr: VarId,
    pub scale_ri: VarId,
    pub scale_ir: VarId,
    pub scale_ii: VarId,
    pub shift: VarId,
}

fn check_batch(rows: usize, training: bool) -> Result<()> {
    if training && rows < 2 {
        return Err(Error::Contract(format!(
            "batch normalization needs at least 2 samples in training mode, got {rows}"
        )));
    }
    Ok(())
}

/// Builds the complex BN graph. In training mode the batch statistics are
/// also written into the running state (momentum update).
pub fn complex_bn_graph(
    tape: &mut Tape,
    x: VarId,
    p: &BnComplexParams,
    state: &mut BnComplex,
    training: bool,
) -> Result<VarId> {
    let c = state.channels;
    let xv = tape.value(x).as_complex()?;
    let shape = xv.shape().to_vec();
    if shape.last() != Some(&c) {
        return Err(Error::Shape(format!(
            "batch norm over {c} channels on input {shape:?}"
        )));
    }
    let rows = xv.len() / c;
    check_batch(rows, training)?;

    let a = tape.re(x)?;
    let b = tape.im(x)?;

    let (ca, cb, wrr, wri, wii) = if training {
        let mu_a = tape.mean_chan(a)?;
        let mu_b = tape.mean_chan(b)?;
        let neg_mu_a = tape.neg(mu_a);
        let neg_mu_b = tape.neg(mu_b);
        let ca = tape.add_chan(a, neg_mu_a)?;
        let cb = tape.add_chan(b, neg_mu_b)?;
        // Batch 2x2 covariance per channel (biased), plus eps on the diagonal.
        let caca = tape.mul_elem(ca, ca)?;
        let cacb = tape.mul_elem(ca, cb)?;
        let cbcb = tape.mul_elem(cb, cb)?;
        let vrr_raw = tape.mean_chan(caca)?;
        let vri = tape.mean_chan(cacb)?;
        let vii_raw = tape.mean_chan(cbcb)?;
        let vrr = tape.add_const(vrr_raw, state.epsilon)?;
        let vii = tape.add_const(vii_raw, state.epsilon)?;
        let (wrr, wri, wii) = inv_sqrt_2x2_graph(tape, vrr, vri, vii)?;

        // Momentum update of the running stats with the plain batch values.
        let m = state.momentum;
        let mu_a_v = tape.value(mu_a).as_real()?.clone();
        let mu_b_v = tape.value(mu_b).as_real()?.clone();
        let vrr_v = tape.value(vrr).as_real()?.clone();
        let vri_v = tape.value(vri).as_real()?.clone();
        let vii_v = tape.value(vii).as_real()?.clone();
        for j in 0..c {
            let rm = state.running_mean.data_mut();
            rm[j] = rm[j] * m
                + Complex64::new(mu_a_v.data()[j], mu_b_v.data()[j]) * (1.0 - m);
            let rr = state.run_cov_rr.data_mut();
            rr[j] = rr[j] * m + vrr_v.data()[j] * (1.0 - m);
            let ri = state.run_cov_ri.data_mut();
            ri[j] = ri[j] * m + vri_v.data()[j] * (1.0 - m);
            let ii = state.run_cov_ii.data_mut();
            ii[j] = ii[j] * m + vii_v.data()[j] * (1.0 - m);
        }
        (ca, cb, wrr, wri, wii)
    } else {
        // Inference: running stats enter as constants.
        let mu_a = tape.leaf(Value::R(state.running_mean.re()));
        let mu_b = tape.leaf(Value::R(state.running_mean.im()));
        let neg_mu_a = tape.neg(mu_a);
        let neg_mu_b = tape.neg(mu_b);
        let ca = tape.add_chan(a, neg_mu_a)?;
        let cb = tape.add_chan(b, neg_mu_b)?;
        let mut wrr = vec![0.0; c];
        let mut wri = vec![0.0; c];
        let mut wii = vec![0.0; c];
        for j in 0..c {
            let (rr, ri, ii) = (
                state.run_cov_rr.data()[j],
                state.run_cov_ri.data()[j],
                state.run_cov_ii.data()[j],
            );
            let (a, b, d) = inv_sqrt_2x2(rr, ri, ii);
            wrr[j] = a;
            wri[j] = b;
            wii[j] = d;
        }
        let wrr = tape.leaf(Value::R(RealTensor::from_vec(&[c], wrr)?));
        let wri = tape.leaf(Value::R(RealTensor::from_vec(&[c], wri)?));
        let wii = tape.leaf(Value::R(RealTensor::from_vec(&[c], wii)?));
        (ca, cb, wrr, wri, wii)
    };

    // Whiten: (wa, wb) = W (ca, cb) per channel.
    let t1 = tape.mul_chan(ca, wrr)?;
    let t2 = tape.mul_chan(cb, wri)?;
    let wa = tape.add(t1, t2)?;
    let t3 = tape.mul_chan(ca, wri)?;
    let t4 = tape.mul_chan(cb, wii)?;
    let wb = tape.add(t3, t4)?;

    // Trainable affine: (ya, yb) = Gamma (wa, wb) + beta.
    let u1 = tape.mul_chan(wa, p.scale_rr)?;
    let u2 = tape.mul_chan(wb, p.scale_ri)?;
    let ya = tape.add(u1, u2)?;
    let u3 = tape.mul_chan(wa, p.scale_ir)?;
    let u4 = tape.mul_chan(wb, p.scale_ii)?;
    let yb = tape.add(u3, u4)?;
    let y = tape.make_complex(ya, yb)?;
    tape.add_chan(y, p.shift)
}

/// Inverse square root of the symmetric 2x2 [[rr, ri], [ri, ii]] via the
/// trace/determinant closed form, as tape nodes over [C] tensors.
fn inv_sqrt_2x2_graph(
    tape: &mut Tape,
    vrr: VarId,
    vri: VarId,
    vii: VarId,
) -> Result<(VarId, VarId, VarId)> {
    let det1 = tape.mul_elem(vrr, vii)?;
    let det2 = tape.mul_elem(vri, vri)?;
    let det = tape.sub(det1, det2)?;
    let s = tape.sqrt(det)?;
    let tr = tape.add(vrr, vii)?;
    let two_s = tape.scale(s, 2.0);
    let tr2s = tape.add(tr, two_s)?;
    let t = tape.sqrt(tr2s)?;
    let st = tape.mul_elem(s, t)?;
    let num_rr = tape.add(vii, s)?;
    let num_ii = tape.add(vrr, s)?;
    let wrr = tape.div(num_rr, st)?;
    let neg_vri = tape.neg(vri);
    let wri = tape.div(neg_vri, st)?;
    let wii = tape.div(num_ii, st)?;
    Ok((wrr, wri, wii))
}

/// Plain closed form used at inference time.
pub(crate) fn inv_sqrt_2x2(rr: f64, ri: f64, ii: f64) -> (f64, f64, f64) {
    let s = (rr * ii - ri * ri).sqrt();
    let t = (rr + ii + 2.0 * s).sqrt();
    let st = s * t;
    ((ii + s) / st, -ri / st, (rr + s) / st)
}

/// Real batch-norm graph: y = scale * (x - mean) / sqrt(var + eps) + shift.
pub fn real_bn_graph(
    tape: &mut Tape,
    x: VarId,
    scale: VarId,
    shift: VarId,
    state: &mut BnReal,
    training: bool,
) -> Result<VarId> {
    let c = state.channels;
    let xv = tape.value(x).as_real()?;
    let shape = xv.shape().to_vec();
    if shape.last() != Some(&c) {
        return Err(Error::Shape(format!(
            "batch norm over {c} channels on input {shape:?}"
        )));
    }
    let rows = xv.len() / c;
    check_batch(rows, training)?;

    let (centered, denom) = if training {
        let mu = tape.mean_chan(x)?;
        let neg_mu = tape.neg(mu);
        let centered = tape.add_chan(x, neg_mu)?;
        let sq = tape.mul_elem(centered, centered)?;
        let var_raw = tape.mean_chan(sq)?;
        let var = tape.add_const(var_raw, state.epsilon)?;
        let denom = tape.sqrt(var)?;

        let m = state.momentum;
        let mu_v = tape.value(mu).as_real()?.clone();
        let var_v = tape.value(var).as_real()?.clone();
        for j in 0..c {
            let rm = state.running_mean.data_mut();
            rm[j] = rm[j] * m + mu_v.data()[j] * (1.0 - m);
            let rv = state.running_var.data_mut();
            rv[j] = rv[j] * m + var_v.data()[j] * (1.0 - m);
        }
        (centered, denom)
    } else {
        let mu = tape.leaf(Value::R(state.running_mean.clone()));
        let neg_mu = tape.neg(mu);
        let centered = tape.add_chan(x, neg_mu)?;
        let denom = tape.leaf(Value::R(state.running_var.map(f64::sqrt)));
        (centered, denom)
    };

    let inv = {
        let ones = tape.leaf(Value::R(RealTensor::full(&[c], 1.0)));
        tape.div(ones, denom)?
    };
    let normed = tape.mul_chan(centered, inv)?;
    let scaled = tape.mul_chan(normed, scale)?;
    tape.add_chan(scaled, shift)
}

/// Standalone complex batch norm over plain tensors (the layer op run on
/// a throwaway tape).
pub fn complex_batchnorm(
    x: &ComplexTensor,
    state: &mut BnComplex,
    training: bool,
) -> Result<ComplexTensor> {
    let mut tape = Tape::new();
    let xid = tape.leaf(Value::C(x.clone()));
    let p = BnComplexParams {
        scale_rr: tape.leaf(Value::R(state.scale_rr.clone())),
        scale_ri: tape.leaf(Value::R(state.scale_ri.clone())),
        scale_ir: tape.leaf(Value::R(state.scale_ir.clone())),
        scale_ii: tape.leaf(Value::R(state.scale_ii.clone())),
        shift: tape.leaf(Value::C(state.shift.clone())),
    };
    let y = complex_bn_graph(&mut tape, xid, &p, state, training)?;
    Ok(tape.value(y).as_complex()?.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn identity_affine(state: &mut BnComplex) {
        state.scale_rr = RealTensor::full(&[state.channels], 1.0);
        state.scale_ii = RealTensor::full(&[state.channels], 1.0);
    }

    fn random_batch(rng: &mut ChaCha8Rng, rows: usize, c: usize, std: f64) -> ComplexTensor {
        let data = (0..rows * c)
            .map(|_| {
                Complex64::new(
                    rng.random_range(-std..std),
                    rng.random_range(-std..std) + 0.3,
                )
            })
            .collect();
        ComplexTensor::from_vec(&[rows, c], data).unwrap()
    }

    /// Sample mean and biased covariance of one channel.
    fn channel_stats(y: &ComplexTensor, c: usize, j: usize) -> (Complex64, f64, f64, f64) {
        let rows = y.len() / c;
        let mut mu = Complex64::new(0.0, 0.0);
        for r in 0..rows {
            mu += y.data()[r * c + j];
        }
        mu /= rows as f64;
        let (mut rr, mut ri, mut ii) = (0.0, 0.0, 0.0);
        for r in 0..rows {
            let d = y.data()[r * c + j] - mu;
            rr += d.re * d.re;
            ri += d.re * d.im;
            ii += d.im * d.im;
        }
        let n = rows as f64;
        (mu, rr / n, ri / n, ii / n)
    }

    #[test]
    fn training_whitens_to_identity_covariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        // Variance well above eps so the eps bias stays below tolerance.
        let x = random_batch(&mut rng, 256, 3, 8.0);
        let mut state = BnComplex::new(3);
        identity_affine(&mut state);
        let y = complex_batchnorm(&x, &mut state, true).unwrap();
        for j in 0..3 {
            let (mu, rr, ri, ii) = channel_stats(&y, 3, j);
            assert!(mu.norm() < 1e-9, "channel {j} mean {mu}");
            assert!((rr - 1.0).abs() < 1e-6, "channel {j} rr {rr}");
            assert!(ri.abs() < 1e-6, "channel {j} ri {ri}");
            assert!((ii - 1.0).abs() < 1e-6, "channel {j} ii {ii}");
        }
    }

    #[test]
    fn purely_real_batch_matches_real_bn() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let re: Vec<f64> = (0..128).map(|_| rng.random_range(-2.0..2.0)).collect();
        let x = ComplexTensor::from_vec(
            &[128, 1],
            re.iter().map(|&a| Complex64::new(a, 0.0)).collect(),
        )
        .unwrap();
        let mut cstate = BnComplex::new(1);
        identity_affine(&mut cstate);
        let yc = complex_batchnorm(&x, &mut cstate, true).unwrap();

        let xr = RealTensor::from_vec(&[128, 1], re).unwrap();
        let mut rstate = BnReal::new(1);
        let mut tape = Tape::new();
        let xid = tape.leaf(Value::R(xr));
        let scale = tape.leaf(Value::R(rstate.scale.clone()));
        let shift = tape.leaf(Value::R(rstate.shift.clone()));
        let yid = real_bn_graph(&mut tape, xid, scale, shift, &mut rstate, true).unwrap();
        let yr = tape.value(yid).as_real().unwrap().clone();

        for (zc, zr) in yc.data().iter().zip(yr.data()) {
            assert_eq!(zc.im, 0.0);
            assert!((zc.re - zr).abs() < 1e-12, "{} vs {}", zc.re, zr);
        }
    }

    #[test]
    fn inference_with_identity_cov_subtracts_mean() {
        let mut state = BnComplex::new(2);
        identity_affine(&mut state);
        state.running_mean =
            ComplexTensor::from_vec(&[2], vec![Complex64::new(1.0, -2.0), Complex64::new(0.5, 0.0)])
                .unwrap();
        let x = ComplexTensor::from_vec(
            &[2, 2],
            vec![
                Complex64::new(3.0, 1.0),
                Complex64::new(0.0, 4.0),
                Complex64::new(-1.0, 2.0),
                Complex64::new(2.5, -1.0),
            ],
        )
        .unwrap();
        let y = complex_batchnorm(&x, &mut state, false).unwrap();
        for r in 0..2 {
            for j in 0..2 {
                let want = x.data()[r * 2 + j] - state.running_mean.data()[j];
                let got = y.data()[r * 2 + j];
                assert!((got - want).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn running_covariance_stays_psd_across_updates() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut state = BnComplex::new(2);
        for _ in 0..20 {
            let x = random_batch(&mut rng, 16, 2, 1.5);
            complex_batchnorm(&x, &mut state, true).unwrap();
            for j in 0..2 {
                let rr = state.run_cov_rr.data()[j];
                let ri = state.run_cov_ri.data()[j];
                let ii = state.run_cov_ii.data()[j];
                assert!(rr > 0.0 && ii > 0.0);
                assert!(rr * ii - ri * ri >= 0.0, "det {}", rr * ii - ri * ri);
            }
        }
    }

    #[test]
    fn training_needs_two_samples() {
        let x = ComplexTensor::zeros(&[1, 4]);
        let mut state = BnComplex::new(4);
        assert!(complex_batchnorm(&x, &mut state, true).is_err());
        assert!(complex_batchnorm(&x, &mut state, false).is_ok());
    }
}
