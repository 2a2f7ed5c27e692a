//! 2-D cross-correlation (deep-learning convolution, no kernel flip).

use num_complex::Complex64;

use super::{ComplexTensor, RealTensor};
use crate::error::{Error, Result};

/// Spatial padding mode for [`conv2d`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Padding {
    /// No padding; output is (H-k+1) x (W-k+1).
    Valid,
    /// Symmetric zero padding; output keeps the input's H x W.
    Same,
}

fn conv_dims(shape: &[usize]) -> Result<(usize, usize, usize)> {
    match shape {
        [h, w, c] => Ok((*h, *w, *c)),
        _ => Err(Error::Shape(format!(
            "conv input must be [H, W, Cin], got {shape:?}"
        ))),
    }
}

fn kernel_dims(shape: &[usize]) -> Result<(usize, usize, usize, usize)> {
    match shape {
        [kh, kw, cin, cout] => Ok((*kh, *kw, *cin, *cout)),
        _ => Err(Error::Shape(format!(
            "conv kernels must be [k, k, Cin, Cout], got {shape:?}"
        ))),
    }
}

pub(crate) fn conv_output_extent(
    h: usize,
    w: usize,
    kh: usize,
    kw: usize,
    pad: Padding,
) -> Result<(usize, usize, usize, usize)> {
    match pad {
        Padding::Valid => {
            if kh > h || kw > w {
                return Err(Error::Shape(format!(
                    "kernel {kh}x{kw} larger than input {h}x{w}"
                )));
            }
            Ok((h - kh + 1, w - kw + 1, 0, 0))
        }
        Padding::Same => {
            // Symmetric zero padding; for even kernels the extra cell goes right/below.
            let ph = (kh - 1) / 2;
            let pw = (kw - 1) / 2;
            if kh > h + (kh - 1) || kw > w + (kw - 1) {
                return Err(Error::Shape(format!(
                    "kernel {kh}x{kw} larger than padded input {h}x{w}"
                )));
            }
            Ok((h, w, ph, pw))
        }
    }
}

/// Cross-correlation of an [H, W, Cin] input with [k, k, Cin, Cout] kernels.
pub fn conv2d(
    input: &ComplexTensor,
    kernels: &ComplexTensor,
    pad: Padding,
) -> Result<ComplexTensor> {
    let (h, w, cin) = conv_dims(input.shape())?;
    let (kh, kw, kcin, cout) = kernel_dims(kernels.shape())?;
    if cin != kcin {
        return Err(Error::Shape(format!(
            "input channels {cin} vs kernel channels {kcin}"
        )));
    }
    let (oh, ow, ph, pw) = conv_output_extent(h, w, kh, kw, pad)?;
    let x = input.data();
    let k = kernels.data();
    let mut out = vec![Complex64::new(0.0, 0.0); oh * ow * cout];
    for oy in 0..oh {
        for ox in 0..ow {
            for dy in 0..kh {
                let iy = oy + dy;
                if iy < ph || iy - ph >= h {
                    continue;
                }
                let iy = iy - ph;
                for dx in 0..kw {
                    let ix = ox + dx;
                    if ix < pw || ix - pw >= w {
                        continue;
                    }
                    let ix = ix - pw;
                    let xbase = (iy * w + ix) * cin;
                    let kbase = (dy * kw + dx) * cin * cout;
                    let obase = (oy * ow + ox) * cout;
                    for ci in 0..cin {
                        let xv = x[xbase + ci];
                        let krow = &k[kbase + ci * cout..kbase + (ci + 1) * cout];
                        let orow = &mut out[obase..obase + cout];
                        for co in 0..cout {
                            orow[co] += xv * krow[co];
                        }
                    }
                }
            }
        }
    }
    ComplexTensor::from_vec(&[oh, ow, cout], out)
}

/// Real counterpart of [`conv2d`].
pub fn conv2d_real(input: &RealTensor, kernels: &RealTensor, pad: Padding) -> Result<RealTensor> {
    let (h, w, cin) = conv_dims(input.shape())?;
    let (kh, kw, kcin, cout) = kernel_dims(kernels.shape())?;
    if cin != kcin {
        return Err(Error::Shape(format!(
            "input channels {cin} vs kernel channels {kcin}"
        )));
    }
    let (oh, ow, ph, pw) = conv_output_extent(h, w, kh, kw, pad)?;
    let x = input.data();
    let k = kernels.data();
    let mut out = vec![0.0; oh * ow * cout];
    for oy in 0..oh {
        for ox in 0..ow {
            for dy in 0..kh {
                let iy = oy + dy;
                if iy < ph || iy - ph >= h {
                    continue;
                }
                let iy = iy - ph;
                for dx in 0..kw {
                    let ix = ox + dx;
                    if ix < pw || ix - pw >= w {
                        continue;
                    }
                    let ix = ix - pw;
                    let xbase = (iy * w + ix) * cin;
                    let kbase = (dy * kw + dx) * cin * cout;
                    let obase = (oy * ow + ox) * cout;
                    for ci in 0..cin {
                        let xv = x[xbase + ci];
                        let krow = &k[kbase + ci * cout..kbase + (ci + 1) * cout];
                        let orow = &mut out[obase..obase + cout];
                        for co in 0..cout {
                            orow[co] += xv * krow[co];
                        }
                    }
                }
            }
        }
    }
    RealTensor::from_vec(&[oh, ow, cout], out)
}
