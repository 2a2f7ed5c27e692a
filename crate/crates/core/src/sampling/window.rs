//! Sliding-window and centered patch extraction.

use super::{ChannelField, Patch, PatchSet};
use crate::ctensor::{ComplexTensor, RealTensor};
use crate::error::{Error, Result};
use crate::grad::Value;

fn slice_patch(field: &ChannelField, oy: usize, ox: usize, size: usize) -> Result<Value> {
    let (h, w, c) = (field.height(), field.width(), field.channels());
    debug_assert!(oy + size <= h && ox + size <= w);
    let _ = h;
    match &field.data {
        Value::C(t) => {
            let mut data = Vec::with_capacity(size * size * c);
            for y in oy..oy + size {
                let row = (y * w + ox) * c;
                data.extend_from_slice(&t.data()[row..row + size * c]);
            }
            Ok(Value::C(ComplexTensor::from_vec(&[size, size, c], data)?))
        }
        Value::R(t) => {
            let mut data = Vec::with_capacity(size * size * c);
            for y in oy..oy + size {
                let row = (y * w + ox) * c;
                data.extend_from_slice(&t.data()[row..row + size * c]);
            }
            Ok(Value::R(RealTensor::from_vec(&[size, size, c], data)?))
        }
    }
}

fn slice_labels(field: &ChannelField, oy: usize, ox: usize, size: usize) -> Vec<u8> {
    let w = field.width();
    let mut labels = Vec::with_capacity(size * size);
    for y in oy..oy + size {
        labels.extend_from_slice(&field.labels[y * w + ox..y * w + ox + size]);
    }
    labels
}

/// Extracts every fully contained patch at offsets {0, stride, 2 stride, ...};
/// the count per axis is floor((extent - size) / stride) + 1.
pub fn sliding_window(field: &ChannelField, size: usize, stride: usize) -> Result<PatchSet> {
    let (h, w) = (field.height(), field.width());
    if size == 0 || stride == 0 {
        return Err(Error::Contract("size and stride must be >= 1".into()));
    }
    if size > h || size > w {
        return Err(Error::Contract(format!(
            "window {size} exceeds field extents {h}x{w}"
        )));
    }
    let ny = (h - size) / stride + 1;
    let nx = (w - size) / stride + 1;
    let mut patches = Vec::with_capacity(ny * nx);
    for iy in 0..ny {
        for ix in 0..nx {
            let (oy, ox) = (iy * stride, ix * stride);
            patches.push(Patch {
                input: slice_patch(field, oy, ox, size)?,
                labels: slice_labels(field, oy, ox, size),
                origin: (oy, ox),
                center_class: None,
            });
        }
    }
    Ok(PatchSet {
        size,
        classes: field.classes,
        patches,
    })
}

/// Extracts one patch per pixel index, nominally centered on it; windows
/// that would cross the border are clamped inside, and the generating
/// pixel's class is kept as the patch target.
pub fn extract_centered_patches(
    field: &ChannelField,
    pixel_indices: &[usize],
    size: usize,
) -> Result<PatchSet> {
    let (h, w) = (field.height(), field.width());
    if size > h || size > w {
        return Err(Error::Contract(format!(
            "window {size} exceeds field extents {h}x{w}"
        )));
    }
    let half = size / 2;
    let mut patches = Vec::with_capacity(pixel_indices.len());
    for &p in pixel_indices {
        if p >= h * w {
            return Err(Error::Contract(format!("pixel index {p} out of range")));
        }
        let (py, px) = (p / w, p % w);
        let oy = py.saturating_sub(half).min(h - size);
        let ox = px.saturating_sub(half).min(w - size);
        patches.push(Patch {
            input: slice_patch(field, oy, ox, size)?,
            labels: slice_labels(field, oy, ox, size),
            origin: (oy, ox),
            center_class: Some(field.labels[p]),
        });
    }
    Ok(PatchSet {
        size,
        classes: field.classes,
        patches,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn field(h: usize, w: usize, c: usize, seed: u64) -> ChannelField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data: Vec<f64> = (0..h * w * c).map(|_| rng.random_range(-1.0..1.0)).collect();
        let labels: Vec<u8> = (0..h * w).map(|_| rng.random_range(0..3)).collect();
        ChannelField::new(
            Value::R(RealTensor::from_vec(&[h, w, c], data).unwrap()),
            labels,
            3,
        )
        .unwrap()
    }

    #[test]
    fn offset_count_formula() {
        let f = field(128, 128, 2, 1);
        let set = sliding_window(&f, 12, 1).unwrap();
        assert_eq!(set.patches.len(), 117 * 117);
        let set = sliding_window(&f, 128, 25).unwrap();
        assert_eq!(set.patches.len(), 1);
    }

    #[test]
    fn patches_equal_source_slices() {
        let f = field(20, 17, 3, 2);
        let set = sliding_window(&f, 5, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let data = f.data.as_real().unwrap();
        for _ in 0..20 {
            let p = &set.patches[rng.random_range(0..set.patches.len())];
            let inp = p.input.as_real().unwrap();
            for dy in 0..5 {
                for dx in 0..5 {
                    for ch in 0..3 {
                        let want = data.data()[((p.origin.0 + dy) * 17 + p.origin.1 + dx) * 3 + ch];
                        let got = inp.data()[(dy * 5 + dx) * 3 + ch];
                        assert_eq!(want, got);
                        let lw = f.labels[(p.origin.0 + dy) * 17 + p.origin.1 + dx];
                        assert_eq!(lw, p.labels[dy * 5 + dx]);
                    }
                }
            }
        }
    }

    #[test]
    fn oversized_window_rejected() {
        let f = field(8, 8, 1, 4);
        assert!(sliding_window(&f, 9, 1).is_err());
    }

    #[test]
    fn centered_patches_clamp_at_borders() {
        let f = field(10, 10, 1, 5);
        // Corner pixel 0 and center pixel 55.
        let set = extract_centered_patches(&f, &[0, 55], 4).unwrap();
        assert_eq!(set.patches[0].origin, (0, 0));
        assert_eq!(set.patches[0].center_class, Some(f.labels[0]));
        // Pixel (5,5): origin clamps to (3,3) .. covers rows 3..7.
        assert_eq!(set.patches[1].origin, (3, 3));
    }
}
