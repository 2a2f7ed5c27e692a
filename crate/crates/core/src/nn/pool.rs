//! 2x2 spatial pooling: modulus max-pool with argmax locations, the
//! matching max-unpool, and arithmetic average pooling.
//!
//! Inputs are [H, W, C] or [N, H, W, C]; odd spatial extents are padded
//! on the right/bottom with zeros. Locations index into the flat input
//! tensor and are what max-unpooling consumes to restore positions.

use num_complex::Complex64;

use crate::ctensor::{modulus_scalar, ComplexTensor, RealTensor};
use crate::error::{Error, Result};

/// (batch, h, w, c) with batch = 1 for rank-3 tensors.
fn spatial_dims(shape: &[usize]) -> Result<(usize, usize, usize, usize, bool)> {
    match shape {
        [h, w, c] => Ok((1, *h, *w, *c, false)),
        [n, h, w, c] => Ok((*n, *h, *w, *c, true)),
        _ => Err(Error::Shape(format!(
            "pooling expects [H, W, C] or [N, H, W, C], got {shape:?}"
        ))),
    }
}

fn pooled_shape(shape: &[usize]) -> Result<Vec<usize>> {
    let (n, h, w, c, batched) = spatial_dims(shape)?;
    let (oh, ow) = (h.div_ceil(2), w.div_ceil(2));
    Ok(if batched {
        vec![n, oh, ow, c]
    } else {
        vec![oh, ow, c]
    })
}

/// Per 2x2 window, emits the entry of largest modulus and its flat
/// location in the input. Ties go to the first element in row-major order.
pub fn max_pool_modulus(x: &ComplexTensor) -> Result<(ComplexTensor, Vec<usize>)> {
    let (n, h, w, c, _) = spatial_dims(x.shape())?;
    let out_shape = pooled_shape(x.shape())?;
    let (oh, ow) = (h.div_ceil(2), w.div_ceil(2));
    let d = x.data();
    let mut out = Vec::with_capacity(n * oh * ow * c);
    let mut locs = Vec::with_capacity(n * oh * ow * c);
    for b in 0..n {
        for oy in 0..oh {
            for ox in 0..ow {
                for ch in 0..c {
                    let mut best_val = Complex64::new(0.0, 0.0);
                    let mut best_mod = f64::NEG_INFINITY;
                    let mut best_loc = 0usize;
                    for dy in 0..2 {
                        for dx in 0..2 {
                            let (iy, ix) = (2 * oy + dy, 2 * ox + dx);
                            // Padded cells are zeros; a strict > keeps the
                            // first (always in-bounds) cell on ties.
                            let (v, m, loc) = if iy < h && ix < w {
                                let loc = ((b * h + iy) * w + ix) * c + ch;
                                (d[loc], modulus_scalar(d[loc]), loc)
                            } else {
                                (Complex64::new(0.0, 0.0), 0.0, usize::MAX)
                            };
                            if m > best_mod {
                                best_mod = m;
                                best_val = v;
                                best_loc = loc;
                            }
                        }
                    }
                    debug_assert_ne!(best_loc, usize::MAX);
                    out.push(best_val);
                    locs.push(best_loc);
                }
            }
        }
    }
    Ok((ComplexTensor::from_vec(&out_shape, out)?, locs))
}

/// Real max-pool by value (standard convention for real networks).
pub fn max_pool_real(x: &RealTensor) -> Result<(RealTensor, Vec<usize>)> {
    let (n, h, w, c, _) = spatial_dims(x.shape())?;
    let out_shape = pooled_shape(x.shape())?;
    let (oh, ow) = (h.div_ceil(2), w.div_ceil(2));
    let d = x.data();
    let mut out = Vec::with_capacity(n * oh * ow * c);
    let mut locs = Vec::with_capacity(n * oh * ow * c);
    for b in 0..n {
        for oy in 0..oh {
            for ox in 0..ow {
                for ch in 0..c {
                    let mut best_val = 0.0;
                    let mut best = f64::NEG_INFINITY;
                    let mut best_loc = 0usize;
                    for dy in 0..2 {
                        for dx in 0..2 {
                            let (iy, ix) = (2 * oy + dy, 2 * ox + dx);
                            let (v, loc) = if iy < h && ix < w {
                                let loc = ((b * h + iy) * w + ix) * c + ch;
                                (d[loc], loc)
                            } else {
                                (0.0, usize::MAX)
                            };
                            if v > best {
                                best = v;
                                best_val = v;
                                best_loc = loc;
                            }
                        }
                    }
                    debug_assert_ne!(best_loc, usize::MAX);
                    out.push(best_val);
                    locs.push(best_loc);
                }
            }
        }
    }
    Ok((RealTensor::from_vec(&out_shape, out)?, locs))
}

/// Places pooled entries back on their stored locations, zeros elsewhere.
pub fn max_unpool(x: &ComplexTensor, locs: &[usize], out_shape: &[usize]) -> Result<ComplexTensor> {
    if locs.len() != x.len() {
        return Err(Error::Contract(format!(
            "{} locations for {} pooled entries",
            locs.len(),
            x.len()
        )));
    }
    let mut out = ComplexTensor::zeros(out_shape);
    let n = out.len();
    for (v, &loc) in x.data().iter().zip(locs) {
        if loc >= n {
            return Err(Error::Contract(format!(
                "unpool location {loc} out of range for {out_shape:?}"
            )));
        }
        out.data_mut()[loc] = *v;
    }
    Ok(out)
}

/// Real counterpart of [`max_unpool`].
pub fn max_unpool_real(x: &RealTensor, locs: &[usize], out_shape: &[usize]) -> Result<RealTensor> {
    if locs.len() != x.len() {
        return Err(Error::Contract(format!(
            "{} locations for {} pooled entries",
            locs.len(),
            x.len()
        )));
    }
    let mut out = RealTensor::zeros(out_shape);
    let n = out.len();
    for (v, &loc) in x.data().iter().zip(locs) {
        if loc >= n {
            return Err(Error::Contract(format!(
                "unpool location {loc} out of range for {out_shape:?}"
            )));
        }
        out.data_mut()[loc] = *v;
    }
    Ok(out)
}

/// Arithmetic 2x2 average pooling (window sum / 4, zero padding).
pub fn avg_pool(x: &ComplexTensor) -> Result<ComplexTensor> {
    let (n, h, w, c, _) = spatial_dims(x.shape())?;
    let out_shape = pooled_shape(x.shape())?;
    let (oh, ow) = (h.div_ceil(2), w.div_ceil(2));
    let d = x.data();
    let mut out = Vec::with_capacity(n * oh * ow * c);
    for b in 0..n {
        for oy in 0..oh {
            for ox in 0..ow {
                for ch in 0..c {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for dy in 0..2 {
                        for dx in 0..2 {
                            let (iy, ix) = (2 * oy + dy, 2 * ox + dx);
                            if iy < h && ix < w {
                                acc += d[((b * h + iy) * w + ix) * c + ch];
                            }
                        }
                    }
                    out.push(acc / 4.0);
                }
            }
        }
    }
    ComplexTensor::from_vec(&out_shape, out)
}

/// Real counterpart of [`avg_pool`].
pub fn avg_pool_real(x: &RealTensor) -> Result<RealTensor> {
    let (n, h, w, c, _) = spatial_dims(x.shape())?;
    let out_shape = pooled_shape(x.shape())?;
    let (oh, ow) = (h.div_ceil(2), w.div_ceil(2));
    let d = x.data();
    let mut out = Vec::with_capacity(n * oh * ow * c);
    for b in 0..n {
        for oy in 0..oh {
            for ox in 0..ow {
                for ch in 0..c {
                    let mut acc = 0.0;
                    for dy in 0..2 {
                        for dx in 0..2 {
                            let (iy, ix) = (2 * oy + dy, 2 * ox + dx);
                            if iy < h && ix < w {
                                acc += d[((b * h + iy) * w + ix) * c + ch];
                            }
                        }
                    }
                    out.push(acc / 4.0);
                }
            }
        }
    }
    RealTensor::from_vec(&out_shape, out)
}
