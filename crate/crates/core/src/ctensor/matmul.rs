//! Dense matrix multiply for complex and real 2-D tensors.

use num_complex::Complex64;

use super::{ComplexTensor, RealTensor};
use crate::error::{Error, Result};

fn check_2d(shape: &[usize], side: &str) -> Result<(usize, usize)> {
    match shape {
        [r, c] => Ok((*r, *c)),
        _ => Err(Error::Shape(format!(
            "matmul {side} operand must be 2-D, got {shape:?}"
        ))),
    }
}

/// c[i,j] = sum_p a[i,p] * b[p,j] in complex arithmetic.
pub fn matmul(a: &ComplexTensor, b: &ComplexTensor) -> Result<ComplexTensor> {
    let (m, ka) = check_2d(a.shape(), "left")?;
    let (kb, n) = check_2d(b.shape(), "right")?;
    if ka != kb {
        return Err(Error::Shape(format!(
            "matmul inner extents disagree: {:?} vs {:?}",
            a.shape(),
            b.shape()
        )));
    }
    let ad = a.data();
    let bd = b.data();
    let mut out = vec![Complex64::new(0.0, 0.0); m * n];
    for i in 0..m {
        for p in 0..ka {
            let av = ad[i * ka + p];
            if av.re == 0.0 && av.im == 0.0 {
                continue;
            }
            let brow = &bd[p * n..(p + 1) * n];
            let orow = &mut out[i * n..(i + 1) * n];
            for j in 0..n {
                orow[j] += av * brow[j];
            }
        }
    }
    ComplexTensor::from_vec(&[m, n], out)
}

/// Real counterpart of [`matmul`].
pub fn matmul_real(a: &RealTensor, b: &RealTensor) -> Result<RealTensor> {
    let (m, ka) = check_2d(a.shape(), "left")?;
    let (kb, n) = check_2d(b.shape(), "right")?;
    if ka != kb {
        return Err(Error::Shape(format!(
            "matmul inner extents disagree: {:?} vs {:?}",
            a.shape(),
            b.shape()
        )));
    }
    let ad = a.data();
    let bd = b.data();
    let mut out = vec![0.0; m * n];
    for i in 0..m {
        for p in 0..ka {
            let av = ad[i * ka + p];
            if av == 0.0 {
                continue;
            }
            let brow = &bd[p * n..(p + 1) * n];
            let orow = &mut out[i * n..(i + 1) * n];
            for j in 0..n {
                orow[j] += av * brow[j];
            }
        }
    }
    RealTensor::from_vec(&[m, n], out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_ct(rng: &mut ChaCha8Rng, shape: &[usize]) -> ComplexTensor {
        let n: usize = shape.iter().product();
        let data = (0..n)
            .map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        ComplexTensor::from_vec(shape, data).unwrap()
    }

    #[test]
    fn one_plus_i_times_one_minus_i() {
        let a = ComplexTensor::from_vec(&[1, 1], vec![c(1.0, 1.0)]).unwrap();
        let b = ComplexTensor::from_vec(&[1, 1], vec![c(1.0, -1.0)]).unwrap();
        let p = matmul(&a, &b).unwrap();
        assert_eq!(p.data()[0], c(2.0, 0.0));
    }

    #[test]
    fn identity_left_multiply() {
        let eye = ComplexTensor::from_vec(
            &[2, 2],
            vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)],
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let b = random_ct(&mut rng, &[2, 2]);
        assert_eq!(matmul(&eye, &b).unwrap(), b);
    }

    #[test]
    fn matches_triple_loop_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = random_ct(&mut rng, &[5, 4]);
        let b = random_ct(&mut rng, &[4, 3]);
        let fast = matmul(&a, &b).unwrap();
        for i in 0..5 {
            for j in 0..3 {
                let mut acc = c(0.0, 0.0);
                for p in 0..4 {
                    acc += a.data()[i * 4 + p] * b.data()[p * 3 + j];
                }
                let d = fast.data()[i * 3 + j] - acc;
                assert!(d.norm() < 1e-12, "mismatch at ({i},{j})");
            }
        }
    }

    #[test]
    fn associativity_within_tolerance() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..10 {
            let a = random_ct(&mut rng, &[4, 5]);
            let b = random_ct(&mut rng, &[5, 6]);
            let d = random_ct(&mut rng, &[6, 3]);
            let left = matmul(&matmul(&a, &b).unwrap(), &d).unwrap();
            let right = matmul(&a, &matmul(&b, &d).unwrap()).unwrap();
            for (l, r) in left.data().iter().zip(right.data()) {
                let denom = l.norm().max(1.0);
                assert!((l - r).norm() / denom < 1e-9);
            }
        }
    }

    #[test]
    fn shape_mismatch_names_both_shapes() {
        let a = ComplexTensor::zeros(&[2, 3]);
        let b = ComplexTensor::zeros(&[4, 2]);
        let err = matmul(&a, &b).unwrap_err().to_string();
        assert!(err.contains("[2, 3]") && err.contains("[4, 2]"), "{err}");
    }
}
