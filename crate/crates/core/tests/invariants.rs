//! Property tests for the algebraic invariants.

use num_complex::Complex64;
use proptest::prelude::*;

use cvnn_core::ctensor::{modulus, modulus_sq, ComplexTensor, RealTensor};
use cvnn_core::grad::Value;
use cvnn_core::polsar::{
    decode_coherency_real, decode_pauli_real, encode_coherency_real, encode_pauli_real,
    scattering_to_pauli, CoherencyMatrix, PauliVector, ScatteringVector,
};
use cvnn_core::sampling::{sliding_window, ChannelField};

fn finite() -> impl Strategy<Value = f64> {
    prop::num::f64::NORMAL.prop_map(|v| v % 1e3)
}

fn complex() -> impl Strategy<Value = Complex64> {
    (finite(), finite()).prop_map(|(a, b)| Complex64::new(a, b))
}

proptest! {
    #[test]
    fn pauli_preserves_energy(v in prop::array::uniform3(complex())) {
        let s = ScatteringVector(v);
        let k = scattering_to_pauli(&s);
        let diff = (k.norm_sq() - s.norm_sq()).abs();
        let scale = s.norm_sq().max(1.0);
        prop_assert!(diff <= 1e-12 * scale, "diff {diff}");
    }

    #[test]
    fn modulus_sq_is_exact_plane_sum(v in prop::collection::vec(complex(), 1..32)) {
        let n = v.len();
        let t = ComplexTensor::from_vec(&[n], v.clone()).unwrap();
        let m2 = modulus_sq(&t);
        let m = modulus(&t);
        for (i, z) in v.iter().enumerate() {
            prop_assert_eq!(m2.data()[i], z.re * z.re + z.im * z.im);
            // modulus is the square root of the exact plane sum.
            prop_assert_eq!(m.data()[i], (z.re * z.re + z.im * z.im).sqrt());
        }
    }

    #[test]
    fn coherency_real_encoding_round_trips(
        diag in prop::array::uniform3(0.0..10.0f64),
        offs in prop::array::uniform3(complex()),
    ) {
        let t = CoherencyMatrix::from_upper(diag, offs[0], offs[1], offs[2], 9);
        let back = decode_coherency_real(&encode_coherency_real(&t), 9);
        for i in 0..3 {
            for j in 0..3 {
                prop_assert_eq!(t.entry(i, j), back.entry(i, j));
            }
        }
    }

    #[test]
    fn pauli_real_encoding_round_trips(v in prop::array::uniform3(complex())) {
        let k = PauliVector(v);
        prop_assert_eq!(decode_pauli_real(&encode_pauli_real(&k)), k);
    }

    #[test]
    fn sliding_window_count_formula(
        extent in 1usize..40,
        size in 1usize..40,
        stride in 1usize..8,
    ) {
        prop_assume!(size <= extent);
        let data = RealTensor::zeros(&[extent, extent, 1]);
        let labels = vec![0u8; extent * extent];
        let field = ChannelField::new(Value::R(data), labels, 1).unwrap();
        let set = sliding_window(&field, size, stride).unwrap();
        let per_axis = (extent - size) / stride + 1;
        prop_assert_eq!(set.patches.len(), per_axis * per_axis);
        // Every origin is a multiple of the stride and fully inside.
        for p in &set.patches {
            prop_assert_eq!(p.origin.0 % stride, 0);
            prop_assert!(p.origin.0 + size <= extent);
        }
    }
}
