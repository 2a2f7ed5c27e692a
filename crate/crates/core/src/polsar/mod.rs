//! PolSAR physics pipeline: scattering vector to Pauli vector, boxcar
//! coherency matrices, channel encodings, synthetic scene generation and
//! scene file I/O.

mod coherency;
mod encode;
mod io;
mod scene;

pub use coherency::{coherency_field, eig3_hermitian, CoherencyField};
pub use encode::{
    decode_coherency_complex, decode_coherency_real, decode_pauli_real, encode_coherency_complex,
    encode_coherency_real, encode_field, encode_pauli_real, Representation,
};
pub use io::{read_scene, write_scene};
pub use scene::{
    cov_built_up, cov_open_area, cov_runway, cov_wood_land, frobenius_distance, generate_scene,
    CovEntry, Layout, SceneRecipe,
};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub const UNLABELED: u8 = 255;

/// Monostatic measurement triple (S_HH, sqrt(2) S_HV, S_VV).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatteringVector(pub [Complex64; 3]);

/// Pauli-basis vector k in C^3.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PauliVector(pub [Complex64; 3]);

impl PauliVector {
    pub fn norm_sq(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }
}

impl ScatteringVector {
    pub fn norm_sq(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }
}

/// Pauli recombination
/// k = (1/sqrt 2) (S_HH + S_VV, S_HH - S_VV, 2 S_HV).
///
/// The stored second component is sqrt(2) S_HV, so the third Pauli entry
/// equals it directly: 2 S_HV / sqrt(2) = sqrt(2) S_HV.
pub fn scattering_to_pauli(s: &ScatteringVector) -> PauliVector {
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    let [hh, hv_sqrt2, vv] = s.0;
    PauliVector([(hh + vv) * inv_sqrt2, (hh - vv) * inv_sqrt2, hv_sqrt2])
}

/// 3x3 Hermitian coherency matrix averaged over `n` boxcar pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct CoherencyMatrix {
    t: [[Complex64; 3]; 3],
    n: usize,
}

impl CoherencyMatrix {
    /// Builds from the upper triangle; the lower is completed by
    /// conjugation so T == T^H holds bit-exactly.
    pub fn from_upper(
        diag: [f64; 3],
        t01: Complex64,
        t02: Complex64,
        t12: Complex64,
        n: usize,
    ) -> Self {
        let d = |x: f64| Complex64::new(x, 0.0);
        Self {
            t: [
                [d(diag[0]), t01, t02],
                [t01.conj(), d(diag[1]), t12],
                [t02.conj(), t12.conj(), d(diag[2])],
            ],
            n,
        }
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        self.t[i][j]
    }

    pub fn boxcar_count(&self) -> usize {
        self.n
    }

    /// Smallest eigenvalue (exact Hermitian symmetry assumed).
    pub fn min_eigenvalue(&self) -> f64 {
        let e = eig3_hermitian(&self.t);
        e[0]
    }

    pub fn is_psd(&self, tol: f64) -> bool {
        self.min_eigenvalue() >= -tol
    }
}

/// H x W grid of Pauli vectors with an aligned label grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PolsarField {
    height: usize,
    width: usize,
    pauli: Vec<[Complex64; 3]>,
    labels: Vec<u8>,
    class_names: Vec<String>,
}

impl PolsarField {
    pub fn new(
        height: usize,
        width: usize,
        pauli: Vec<[Complex64; 3]>,
        labels: Vec<u8>,
        class_names: Vec<String>,
    ) -> Result<Self> {
        if pauli.len() != height * width {
            return Err(Error::Shape(format!(
                "{} Pauli pixels for a {height}x{width} field",
                pauli.len()
            )));
        }
        if labels.len() != height * width {
            return Err(Error::Shape(format!(
                "label grid has {} cells for a {height}x{width} field",
                labels.len()
            )));
        }
        let classes = class_names.len();
        if let Some(bad) = labels
            .iter()
            .find(|&&l| l != UNLABELED && l as usize >= classes)
        {
            return Err(Error::Contract(format!(
                "label {bad} out of range for {classes} classes"
            )));
        }
        Ok(Self {
            height,
            width,
            pauli,
            labels,
            class_names,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn pauli(&self, y: usize, x: usize) -> &[Complex64; 3] {
        &self.pauli[y * self.width + x]
    }

    pub fn pauli_data(&self) -> &[[Complex64; 3]] {
        &self.pauli
    }

    pub fn label(&self, y: usize, x: usize) -> u8 {
        self.labels[y * self.width + x]
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn labels_mut(&mut self) -> &mut [u8] {
        &mut self.labels
    }

    /// Pixel count per class (unlabeled pixels excluded).
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.classes()];
        for &l in &self.labels {
            if l != UNLABELED {
                counts[l as usize] += 1;
            }
        }
        counts
    }

    /// Copies out a column range [x0, x1) as a new field.
    pub fn column_slice(&self, x0: usize, x1: usize) -> Result<PolsarField> {
        if x0 >= x1 || x1 > self.width {
            return Err(Error::Contract(format!(
                "column slice [{x0}, {x1}) of width {}",
                self.width
            )));
        }
        let w = x1 - x0;
        let mut pauli = Vec::with_capacity(self.height * w);
        let mut labels = Vec::with_capacity(self.height * w);
        for y in 0..self.height {
            let row = y * self.width;
            pauli.extend_from_slice(&self.pauli[row + x0..row + x1]);
            labels.extend_from_slice(&self.labels[row + x0..row + x1]);
        }
        PolsarField::new(self.height, w, pauli, labels, self.class_names.clone())
    }
}
