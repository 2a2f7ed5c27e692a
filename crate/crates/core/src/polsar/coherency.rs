//! Boxcar coherency matrices T = (1/n) sum k k^H and a closed-form
//! eigenvalue solver for 3x3 Hermitian matrices.

use num_complex::Complex64;

use super::{CoherencyMatrix, PolsarField};
use crate::error::{Error, Result};

/// Grid of coherency matrices aligned with a source field.
#[derive(Debug, Clone)]
pub struct CoherencyField {
    height: usize,
    width: usize,
    mats: Vec<CoherencyMatrix>,
}

impl CoherencyField {
    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn get(&self, y: usize, x: usize) -> &CoherencyMatrix {
        &self.mats[y * self.width + x]
    }
}

/// Boxcar average of k k^H over a `w x w` window centered at each pixel;
/// windows are clipped at the edges so T stays an average of true pixels.
pub fn coherency_field(field: &PolsarField, boxcar: usize) -> Result<CoherencyField> {
    if boxcar.is_multiple_of(2) {
        return Err(Error::Contract(format!(
            "boxcar window must be odd, got {boxcar}"
        )));
    }
    let (h, w) = (field.height(), field.width());
    if boxcar > h.min(w) {
        return Err(Error::Contract(format!(
            "boxcar {boxcar} exceeds field extent {h}x{w}"
        )));
    }
    let r = boxcar / 2;
    let mut mats = Vec::with_capacity(h * w);
    for y in 0..h {
        let y0 = y.saturating_sub(r);
        let y1 = (y + r + 1).min(h);
        for x in 0..w {
            let x0 = x.saturating_sub(r);
            let x1 = (x + r + 1).min(w);
            let mut diag = [0.0f64; 3];
            let mut t01 = Complex64::new(0.0, 0.0);
            let mut t02 = Complex64::new(0.0, 0.0);
            let mut t12 = Complex64::new(0.0, 0.0);
            let mut n = 0usize;
            for yy in y0..y1 {
                for xx in x0..x1 {
                    let k = field.pauli(yy, xx);
                    diag[0] += k[0].norm_sqr();
                    diag[1] += k[1].norm_sqr();
                    diag[2] += k[2].norm_sqr();
                    t01 += k[0] * k[1].conj();
                    t02 += k[0] * k[2].conj();
                    t12 += k[1] * k[2].conj();
                    n += 1;
                }
            }
            let inv = 1.0 / n as f64;
            diag.iter_mut().for_each(|d| *d *= inv);
            mats.push(CoherencyMatrix::from_upper(
                diag,
                t01 * inv,
                t02 * inv,
                t12 * inv,
                n,
            ));
        }
    }
    Ok(CoherencyField {
        height: h,
        width: w,
        mats,
    })
}

/// Eigenvalues of a 3x3 Hermitian matrix, ascending, via the
/// trace-shifted trigonometric closed form.
pub fn eig3_hermitian(a: &[[Complex64; 3]; 3]) -> [f64; 3] {
    let p1 = a[0][1].norm_sqr() + a[0][2].norm_sqr() + a[1][2].norm_sqr();
    let q = (a[0][0].re + a[1][1].re + a[2][2].re) / 3.0;
    let d0 = a[0][0].re - q;
    let d1 = a[1][1].re - q;
    let d2 = a[2][2].re - q;
    let p2 = d0 * d0 + d1 * d1 + d2 * d2 + 2.0 * p1;
    if p2 <= 0.0 {
        return [q, q, q];
    }
    let p = (p2 / 6.0).sqrt();
    let inv_p = 1.0 / p;
    // B = (A - qI) / p; det(B) is real for Hermitian input.
    let b00 = d0 * inv_p;
    let b11 = d1 * inv_p;
    let b22 = d2 * inv_p;
    let b01 = a[0][1] * inv_p;
    let b02 = a[0][2] * inv_p;
    let b12 = a[1][2] * inv_p;
    let det = b00 * (b11 * b22 - b12.norm_sqr())
        - (b01 * (b01.conj() * b22 - b12 * b02.conj())).re
        + (b02 * (b01.conj() * b12.conj() - b11 * b02.conj())).re;
    let r = (det / 2.0).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    let e1 = q + 2.0 * p * phi.cos();
    let e3 = q + 2.0 * p * (phi + 2.0 * std::f64::consts::FRAC_PI_3).cos();
    let e2 = 3.0 * q - e1 - e3;
    let mut eigs = [e1, e2, e3];
    eigs.sort_by(|x, y| x.partial_cmp(y).unwrap());
    eigs
}
