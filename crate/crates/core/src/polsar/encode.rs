//! Channel encodings of coherency matrices and Pauli vectors.
//!
//! The Hermitian lower triangle of T carries no extra information and is
//! dropped; the real diagonal is extended to the complex plane with a
//! zero imaginary part. This gives six complex channels per pixel, or
//! nine real channels for real-valued networks. Pauli inputs use the
//! vector directly: three complex channels or six real ones (Re then Im).

use num_complex::Complex64;

use super::{coherency_field, CoherencyMatrix, PauliVector, PolsarField};
use crate::ctensor::{ComplexTensor, RealTensor};
use crate::error::Result;
use crate::grad::Value;
use crate::nn::Domain;

/// Input representation fed to the networks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Representation {
    Coherency,
    Pauli,
}

impl Representation {
    /// Channel count for a (representation, domain) pair.
    pub fn channels(self, domain: Domain) -> usize {
        match (self, domain) {
            (Representation::Coherency, Domain::Complex) => 6,
            (Representation::Coherency, Domain::Real) => 9,
            (Representation::Pauli, Domain::Complex) => 3,
            (Representation::Pauli, Domain::Real) => 6,
        }
    }
}

/// (T00, T01, T02, T11, T12, T22), diagonals with zero imaginary part.
pub fn encode_coherency_complex(t: &CoherencyMatrix) -> [Complex64; 6] {
    [
        t.entry(0, 0),
        t.entry(0, 1),
        t.entry(0, 2),
        t.entry(1, 1),
        t.entry(1, 2),
        t.entry(2, 2),
    ]
}

/// (T00, T11, T22, Re T01, Im T01, Re T02, Im T02, Re T12, Im T12).
pub fn encode_coherency_real(t: &CoherencyMatrix) -> [f64; 9] {
    [
        t.entry(0, 0).re,
        t.entry(1, 1).re,
        t.entry(2, 2).re,
        t.entry(0, 1).re,
        t.entry(0, 1).im,
        t.entry(0, 2).re,
        t.entry(0, 2).im,
        t.entry(1, 2).re,
        t.entry(1, 2).im,
    ]
}

/// (Re k || Im k): six real channels.
pub fn encode_pauli_real(k: &PauliVector) -> [f64; 6] {
    [
        k.0[0].re, k.0[1].re, k.0[2].re, k.0[0].im, k.0[1].im, k.0[2].im,
    ]
}

/// Hermitian completion of the six complex channels.
pub fn decode_coherency_complex(ch: &[Complex64; 6], n: usize) -> CoherencyMatrix {
    CoherencyMatrix::from_upper([ch[0].re, ch[3].re, ch[5].re], ch[1], ch[2], ch[4], n)
}

/// Hermitian completion of the nine real channels (exact round trip).
pub fn decode_coherency_real(ch: &[f64; 9], n: usize) -> CoherencyMatrix {
    CoherencyMatrix::from_upper(
        [ch[0], ch[1], ch[2]],
        Complex64::new(ch[3], ch[4]),
        Complex64::new(ch[5], ch[6]),
        Complex64::new(ch[7], ch[8]),
        n,
    )
}

pub fn decode_pauli_real(ch: &[f64; 6]) -> PauliVector {
    PauliVector([
        Complex64::new(ch[0], ch[3]),
        Complex64::new(ch[1], ch[4]),
        Complex64::new(ch[2], ch[5]),
    ])
}

/// Encodes a whole field into an [H, W, C] channel tensor. Coherency
/// representations average k k^H over the given odd boxcar window first.
pub fn encode_field(
    field: &PolsarField,
    representation: Representation,
    domain: Domain,
    boxcar: usize,
) -> Result<Value> {
    let (h, w) = (field.height(), field.width());
    let c = representation.channels(domain);
    match representation {
        Representation::Coherency => {
            let tf = coherency_field(field, boxcar)?;
            match domain {
                Domain::Complex => {
                    let mut data = Vec::with_capacity(h * w * c);
                    for y in 0..h {
                        for x in 0..w {
                            data.extend_from_slice(&encode_coherency_complex(tf.get(y, x)));
                        }
                    }
                    Ok(Value::C(ComplexTensor::from_vec(&[h, w, c], data)?))
                }
                Domain::Real => {
                    let mut data = Vec::with_capacity(h * w * c);
                    for y in 0..h {
                        for x in 0..w {
                            data.extend_from_slice(&encode_coherency_real(tf.get(y, x)));
                        }
                    }
                    Ok(Value::R(RealTensor::from_vec(&[h, w, c], data)?))
                }
            }
        }
        Representation::Pauli => match domain {
            Domain::Complex => {
                let mut data = Vec::with_capacity(h * w * c);
                for k in field.pauli_data() {
                    data.extend_from_slice(k);
                }
                Ok(Value::C(ComplexTensor::from_vec(&[h, w, c], data)?))
            }
            Domain::Real => {
                let mut data = Vec::with_capacity(h * w * c);
                for k in field.pauli_data() {
                    data.extend_from_slice(&encode_pauli_real(&PauliVector(*k)));
                }
                Ok(Value::R(RealTensor::from_vec(&[h, w, c], data)?))
            }
        },
    }
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

    fn identity_t() -> CoherencyMatrix {
        CoherencyMatrix::from_upper([1.0, 1.0, 1.0], c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), 1)
    }

    #[test]
    fn identity_complex_channels() {
        let ch = encode_coherency_complex(&identity_t());
        let want = [1.0, 0.0, 0.0, 1.0, 0.0, 1.0];
        for (got, w) in ch.iter().zip(want) {
            assert_eq!(*got, c(w, 0.0));
        }
    }

    #[test]
    fn identity_real_channels() {
        let ch = encode_coherency_real(&identity_t());
        assert_eq!(ch, [1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn real_nine_channel_round_trip_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(51);
        for _ in 0..100 {
            let t = CoherencyMatrix::from_upper(
                [
                    rng.random_range(0.0..3.0),
                    rng.random_range(0.0..3.0),
                    rng.random_range(0.0..3.0),
                ],
                c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
                c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
                c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
                9,
            );
            let back = decode_coherency_real(&encode_coherency_real(&t), 9);
            for i in 0..3 {
                for j in 0..3 {
                    assert_eq!(t.entry(i, j), back.entry(i, j));
                }
            }
        }
    }

    #[test]
    fn pauli_round_trip_exact() {
        let k = PauliVector([c(0.1, -0.2), c(0.3, 0.4), c(-0.5, 0.6)]);
        assert_eq!(decode_pauli_real(&encode_pauli_real(&k)), k);
    }
}
