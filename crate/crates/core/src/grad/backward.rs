//! Adjoint rules in split-real form. For any complex intermediate, the
//! incoming gradient G packs (dL/dRe, dL/dIm) as planes; rules for
//! complex-bilinear ops take the familiar conjugated forms
//! (e.g. matmul: dA = G B^H, dB = A^H G).

use num_complex::Complex64;

use super::{Op, Tape, Value, VarId};
use crate::ctensor::{modulus_scalar, phase_scalar, ComplexTensor, Padding, RealTensor};
use crate::error::{Error, Result};
use crate::nn::loss::LOG_FLOOR;

fn accumulate(grads: &mut [Option<Value>], id: VarId, contribution: Value) -> Result<()> {
    match &mut grads[id.0] {
        Some(g) => g.accumulate(&contribution)?,
        slot @ None => *slot = Some(contribution),
    }
    Ok(())
}

/// Propagates the gradient of node `idx` to its parents.
pub(super) fn step(
    tape: &Tape,
    idx: usize,
    g_out: &Value,
    grads: &mut [Option<Value>],
) -> Result<()> {
    let node = &tape.nodes[idx];
    match &node.op {
        Op::Leaf | Op::Param => {}

        Op::Add(a, b) => {
            accumulate(grads, *a, g_out.clone())?;
            accumulate(grads, *b, g_out.clone())?;
        }

        Op::Sub(a, b) => {
            accumulate(grads, *a, g_out.clone())?;
            let neg = match g_out {
                Value::C(g) => Value::C(g.neg()),
                Value::R(g) => Value::R(g.neg()),
            };
            accumulate(grads, *b, neg)?;
        }

        Op::Neg(a) => {
            let neg = match g_out {
                Value::C(g) => Value::C(g.neg()),
                Value::R(g) => Value::R(g.neg()),
            };
            accumulate(grads, *a, neg)?;
        }

        Op::MulElem(a, b) => match (g_out, tape.value(*a), tape.value(*b)) {
            (Value::C(g), Value::C(va), Value::C(vb)) => {
                accumulate(grads, *a, Value::C(g.mul_elem(&vb.conj())?))?;
                accumulate(grads, *b, Value::C(g.mul_elem(&va.conj())?))?;
            }
            (Value::R(g), Value::R(va), Value::R(vb)) => {
                accumulate(grads, *a, Value::R(g.mul_elem(vb)?))?;
                accumulate(grads, *b, Value::R(g.mul_elem(va)?))?;
            }
            _ => return Err(Error::Contract("mul_elem domain mismatch".into())),
        },

        Op::Scale(a, s) => {
            let g = match g_out {
                Value::C(g) => Value::C(g.scale(*s)),
                Value::R(g) => Value::R(g.scale(*s)),
            };
            accumulate(grads, *a, g)?;
        }

        Op::AddConst(a) => {
            accumulate(grads, *a, g_out.clone())?;
        }

        Op::Matmul(a, b) => match (g_out, tape.value(*a), tape.value(*b)) {
            (Value::C(g), Value::C(va), Value::C(vb)) => {
                let ga = crate::ctensor::matmul(g, &vb.hermitian()?)?;
                let gb = crate::ctensor::matmul(&va.hermitian()?, g)?;
                accumulate(grads, *a, Value::C(ga))?;
                accumulate(grads, *b, Value::C(gb))?;
            }
            (Value::R(g), Value::R(va), Value::R(vb)) => {
                let ga = crate::ctensor::matmul_real(g, &vb.transpose()?)?;
                let gb = crate::ctensor::matmul_real(&va.transpose()?, g)?;
                accumulate(grads, *a, Value::R(ga))?;
                accumulate(grads, *b, Value::R(gb))?;
            }
            _ => return Err(Error::Contract("matmul domain mismatch".into())),
        },

        Op::Conv2d { x, k, pad } => match (g_out, tape.value(*x), tape.value(*k)) {
            (Value::C(g), Value::C(vx), Value::C(vk)) => {
                let (gx, gk) = conv2d_backward(g, vx, vk, *pad)?;
                accumulate(grads, *x, Value::C(gx))?;
                accumulate(grads, *k, Value::C(gk))?;
            }
            (Value::R(g), Value::R(vx), Value::R(vk)) => {
                let (gx, gk) = conv2d_backward_real(g, vx, vk, *pad)?;
                accumulate(grads, *x, Value::R(gx))?;
                accumulate(grads, *k, Value::R(gk))?;
            }
            _ => return Err(Error::Contract("conv2d domain mismatch".into())),
        },

        Op::Re(a) => {
            let g = g_out.as_real()?;
            let zero = RealTensor::zeros(g.shape());
            accumulate(grads, *a, Value::C(ComplexTensor::from_planes(g, &zero)?))?;
        }

        Op::Im(a) => {
            let g = g_out.as_real()?;
            let zero = RealTensor::zeros(g.shape());
            accumulate(grads, *a, Value::C(ComplexTensor::from_planes(&zero, g)?))?;
        }

        Op::MakeComplex { re, im } => {
            let g = g_out.as_complex()?;
            accumulate(grads, *re, Value::R(g.re()))?;
            accumulate(grads, *im, Value::R(g.im()))?;
        }

        Op::MeanChan(a) => {
            let g = g_out.as_real()?;
            let x = tape.value(*a).as_real()?;
            let c = g.len();
            let rows = x.len() / c;
            let inv = 1.0 / rows as f64;
            let mut gx = vec![0.0; x.len()];
            for (i, v) in gx.iter_mut().enumerate() {
                *v = g.data()[i % c] * inv;
            }
            accumulate(grads, *a, Value::R(RealTensor::from_vec(x.shape(), gx)?))?;
        }

        Op::AddChan { x, v } => {
            accumulate(grads, *x, g_out.clone())?;
            let c = tape.value(*v).len();
            match g_out {
                Value::C(g) => {
                    let mut gv = vec![Complex64::new(0.0, 0.0); c];
                    for (i, z) in g.data().iter().enumerate() {
                        gv[i % c] += z;
                    }
                    accumulate(grads, *v, Value::C(ComplexTensor::from_vec(&[c], gv)?))?;
                }
                Value::R(g) => {
                    let mut gv = vec![0.0; c];
                    for (i, z) in g.data().iter().enumerate() {
                        gv[i % c] += z;
                    }
                    accumulate(grads, *v, Value::R(RealTensor::from_vec(&[c], gv)?))?;
                }
            }
        }

        Op::MulChan { x, v } => {
            let g = g_out.as_real()?;
            let xs = tape.value(*x).as_real()?;
            let vs = tape.value(*v).as_real()?;
            let c = vs.len();
            let mut gx = vec![0.0; xs.len()];
            let mut gv = vec![0.0; c];
            for i in 0..xs.len() {
                gx[i] = g.data()[i] * vs.data()[i % c];
                gv[i % c] += g.data()[i] * xs.data()[i];
            }
            accumulate(grads, *x, Value::R(RealTensor::from_vec(xs.shape(), gx)?))?;
            accumulate(grads, *v, Value::R(RealTensor::from_vec(&[c], gv)?))?;
        }

        Op::MulMask { x, mask } => {
            let g = match g_out {
                Value::C(g) => {
                    let data = g
                        .data()
                        .iter()
                        .zip(mask.data())
                        .map(|(z, m)| z * *m)
                        .collect();
                    Value::C(ComplexTensor::from_vec(g.shape(), data)?)
                }
                Value::R(g) => Value::R(g.mul_elem(mask)?),
            };
            accumulate(grads, *x, g)?;
        }

        Op::Sqrt(a) => {
            let g = g_out.as_real()?;
            let y = node.value.as_real()?;
            let data = g
                .data()
                .iter()
                .zip(y.data())
                .map(|(gi, yi)| gi / (2.0 * yi))
                .collect();
            accumulate(grads, *a, Value::R(RealTensor::from_vec(g.shape(), data)?))?;
        }

        Op::Div(a, b) => {
            let g = g_out.as_real()?;
            let va = tape.value(*a).as_real()?;
            let vb = tape.value(*b).as_real()?;
            let ga: Vec<f64> = g
                .data()
                .iter()
                .zip(vb.data())
                .map(|(gi, bi)| gi / bi)
                .collect();
            let gb: Vec<f64> = g
                .data()
                .iter()
                .zip(va.data().iter().zip(vb.data()))
                .map(|(gi, (ai, bi))| -gi * ai / (bi * bi))
                .collect();
            accumulate(grads, *a, Value::R(RealTensor::from_vec(g.shape(), ga)?))?;
            accumulate(grads, *b, Value::R(RealTensor::from_vec(g.shape(), gb)?))?;
        }

        Op::ActA { x, f_re, f_im } => {
            let g = g_out.as_complex()?;
            let xs = tape.value(*x).as_complex()?;
            let data = g
                .data()
                .iter()
                .zip(xs.data())
                .map(|(gz, xz)| {
                    Complex64::new(gz.re * f_re.deriv(xz.re), gz.im * f_im.deriv(xz.im))
                })
                .collect();
            accumulate(
                grads,
                *x,
                Value::C(ComplexTensor::from_vec(xs.shape(), data)?),
            )?;
        }

        Op::ActR { x, f } => {
            let g = g_out.as_real()?;
            let xs = tape.value(*x).as_real()?;
            let data = g
                .data()
                .iter()
                .zip(xs.data())
                .map(|(gi, xi)| gi * f.deriv(*xi))
                .collect();
            accumulate(grads, *x, Value::R(RealTensor::from_vec(xs.shape(), data)?))?;
        }

        Op::ActB { x, f_r, f_phi } => {
            let g = g_out.as_complex()?;
            let xs = tape.value(*x).as_complex()?;
            let data = g
                .data()
                .iter()
                .zip(xs.data())
                .map(|(gz, xz)| act_b_adjoint(*gz, *xz, *f_r, *f_phi))
                .collect();
            accumulate(
                grads,
                *x,
                Value::C(ComplexTensor::from_vec(xs.shape(), data)?),
            )?;
        }

        Op::Modulus(x) => {
            let g = g_out.as_real()?;
            let xs = tape.value(*x).as_complex()?;
            let data = g
                .data()
                .iter()
                .zip(xs.data())
                .map(|(gi, z)| {
                    let m = modulus_scalar(*z);
                    if m == 0.0 {
                        Complex64::new(0.0, 0.0)
                    } else {
                        Complex64::new(gi * z.re / m, gi * z.im / m)
                    }
                })
                .collect();
            accumulate(
                grads,
                *x,
                Value::C(ComplexTensor::from_vec(xs.shape(), data)?),
            )?;
        }

        Op::SoftmaxLast(x) => match (g_out, &node.value) {
            (Value::C(g), Value::C(s)) => {
                let k = *s.shape().last().unwrap();
                let rows = s.len() / k;
                let mut out = vec![Complex64::new(0.0, 0.0); s.len()];
                for r in 0..rows {
                    let srow = &s.data()[r * k..(r + 1) * k];
                    let grow = &g.data()[r * k..(r + 1) * k];
                    let dot_re: f64 = srow.iter().zip(grow).map(|(si, gi)| si.re * gi.re).sum();
                    let dot_im: f64 = srow.iter().zip(grow).map(|(si, gi)| si.im * gi.im).sum();
                    for j in 0..k {
                        out[r * k + j] = Complex64::new(
                            srow[j].re * (grow[j].re - dot_re),
                            srow[j].im * (grow[j].im - dot_im),
                        );
                    }
                }
                accumulate(grads, *x, Value::C(ComplexTensor::from_vec(s.shape(), out)?))?;
            }
            (Value::R(g), Value::R(s)) => {
                let k = *s.shape().last().unwrap();
                let rows = s.len() / k;
                let mut out = vec![0.0; s.len()];
                for r in 0..rows {
                    let srow = &s.data()[r * k..(r + 1) * k];
                    let grow = &g.data()[r * k..(r + 1) * k];
                    let dot: f64 = srow.iter().zip(grow).map(|(si, gi)| si * gi).sum();
                    for j in 0..k {
                        out[r * k + j] = srow[j] * (grow[j] - dot);
                    }
                }
                accumulate(grads, *x, Value::R(RealTensor::from_vec(s.shape(), out)?))?;
            }
            _ => return Err(Error::Contract("softmax domain mismatch".into())),
        },

        Op::MaxPool { x, locs } => {
            // Full incoming gradient (both planes) routed to each argmax cell.
            match (g_out, tape.value(*x)) {
                (Value::C(g), Value::C(xs)) => {
                    let mut gx = ComplexTensor::zeros(xs.shape());
                    for (gi, &loc) in g.data().iter().zip(locs.iter()) {
                        gx.data_mut()[loc] += gi;
                    }
                    accumulate(grads, *x, Value::C(gx))?;
                }
                (Value::R(g), Value::R(xs)) => {
                    let mut gx = RealTensor::zeros(xs.shape());
                    for (gi, &loc) in g.data().iter().zip(locs.iter()) {
                        gx.data_mut()[loc] += gi;
                    }
                    accumulate(grads, *x, Value::R(gx))?;
                }
                _ => return Err(Error::Contract("max_pool domain mismatch".into())),
            }
        }

        Op::MaxUnpool { x, locs } => match (g_out, tape.value(*x)) {
            (Value::C(g), Value::C(xs)) => {
                let mut gx = ComplexTensor::zeros(xs.shape());
                for (i, &loc) in locs.iter().enumerate() {
                    gx.data_mut()[i] = g.data()[loc];
                }
                accumulate(grads, *x, Value::C(gx))?;
            }
            (Value::R(g), Value::R(xs)) => {
                let mut gx = RealTensor::zeros(xs.shape());
                for (i, &loc) in locs.iter().enumerate() {
                    gx.data_mut()[i] = g.data()[loc];
                }
                accumulate(grads, *x, Value::R(gx))?;
            }
            _ => return Err(Error::Contract("max_unpool domain mismatch".into())),
        },

        Op::AvgPool(x) => {
            let xv = tape.value(*x);
            let (h, w) = spatial_hw(xv.shape())?;
            match (g_out, xv) {
                (Value::C(g), Value::C(xs)) => {
                    let mut gx = ComplexTensor::zeros(xs.shape());
                    spread_avg_c(g, &mut gx, h, w);
                    accumulate(grads, *x, Value::C(gx))?;
                }
                (Value::R(g), Value::R(xs)) => {
                    let mut gx = RealTensor::zeros(xs.shape());
                    spread_avg_r(g, &mut gx, h, w);
                    accumulate(grads, *x, Value::R(gx))?;
                }
                _ => return Err(Error::Contract("avg_pool domain mismatch".into())),
            }
        }

        Op::Reshape(x) => {
            let shape = tape.value(*x).shape().to_vec();
            let g = match g_out {
                Value::C(g) => Value::C(g.reshape(&shape)?),
                Value::R(g) => Value::R(g.reshape(&shape)?),
            };
            accumulate(grads, *x, g)?;
        }

        Op::AceLoss {
            y,
            target,
            row_weights,
        } => {
            let gl = g_out.as_real()?.data()[0];
            match tape.value(*y) {
                Value::C(ys) => {
                    let k = *ys.shape().last().unwrap();
                    let mut gy = vec![Complex64::new(0.0, 0.0); ys.len()];
                    for (i, (yv, dv)) in ys.data().iter().zip(target.data()).enumerate() {
                        if *dv != 0.0 {
                            let rw = row_weights[i / k];
                            let gre = if yv.re > LOG_FLOOR {
                                -gl * rw * 0.5 * dv / yv.re
                            } else {
                                0.0
                            };
                            let gim = if yv.im > LOG_FLOOR {
                                -gl * rw * 0.5 * dv / yv.im
                            } else {
                                0.0
                            };
                            gy[i] = Complex64::new(gre, gim);
                        }
                    }
                    accumulate(
                        grads,
                        *y,
                        Value::C(ComplexTensor::from_vec(ys.shape(), gy)?),
                    )?;
                }
                Value::R(ys) => {
                    let k = *ys.shape().last().unwrap();
                    let mut gy = vec![0.0; ys.len()];
                    for (i, (yv, dv)) in ys.data().iter().zip(target.data()).enumerate() {
                        if *dv != 0.0 && *yv > LOG_FLOOR {
                            gy[i] = -gl * row_weights[i / k] * dv / yv;
                        }
                    }
                    accumulate(grads, *y, Value::R(RealTensor::from_vec(ys.shape(), gy)?))?;
                }
            }
        }

        Op::SumAbs2(x) => {
            let gl = g_out.as_real()?.data()[0];
            match tape.value(*x) {
                Value::C(xs) => {
                    let data = xs
                        .data()
                        .iter()
                        .map(|z| Complex64::new(2.0 * gl * z.re, 2.0 * gl * z.im))
                        .collect();
                    accumulate(
                        grads,
                        *x,
                        Value::C(ComplexTensor::from_vec(xs.shape(), data)?),
                    )?;
                }
                Value::R(xs) => {
                    let data = xs.data().iter().map(|v| 2.0 * gl * v).collect();
                    accumulate(grads, *x, Value::R(RealTensor::from_vec(xs.shape(), data)?))?;
                }
            }
        }

        Op::ProbeSum { x, probe } => {
            let gl = g_out.as_real()?.data()[0];
            let g = match probe.as_ref() {
                Value::C(p) => Value::C(p.scale(gl)),
                Value::R(p) => Value::R(p.scale(gl)),
            };
            accumulate(grads, *x, g)?;
        }
    }
    Ok(())
}

/// Split-real adjoint of sigma_r(|z|) exp(i sigma_phi(arg z)); subgradient
/// 0 at the origin.
fn act_b_adjoint(g: Complex64, z: Complex64, f_r: crate::nn::act::RealFn, f_phi: crate::nn::act::RealFn) -> Complex64 {
    let m = modulus_scalar(z);
    if m == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let theta = phase_scalar(z);
    let r = f_r.eval(m);
    let rp = f_r.deriv(m);
    let phi = f_phi.eval(theta);
    let pp = f_phi.deriv(theta);
    let (sin_phi, cos_phi) = phi.sin_cos();
    let (a, b) = (z.re, z.im);
    let m2 = m * m;
    let dyr_da = rp * (a / m) * cos_phi + r * sin_phi * pp * (b / m2);
    let dyr_db = rp * (b / m) * cos_phi - r * sin_phi * pp * (a / m2);
    let dyi_da = rp * (a / m) * sin_phi - r * cos_phi * pp * (b / m2);
    let dyi_db = rp * (b / m) * sin_phi + r * cos_phi * pp * (a / m2);
    Complex64::new(
        g.re * dyr_da + g.im * dyi_da,
        g.re * dyr_db + g.im * dyi_db,
    )
}

fn spatial_hw(shape: &[usize]) -> Result<(usize, usize)> {
    match shape {
        [h, w, _] | [_, h, w, _] => Ok((*h, *w)),
        _ => Err(Error::Shape(format!("pooling shape: {shape:?}"))),
    }
}

fn spread_avg_c(g: &ComplexTensor, gx: &mut ComplexTensor, h: usize, w: usize) {
    let c = *gx.shape().last().unwrap();
    let n = gx.len() / (h * w * c);
    let (oh, ow) = (h.div_ceil(2), w.div_ceil(2));
    for bidx in 0..n {
        for oy in 0..oh {
            for ox in 0..ow {
                for ch in 0..c {
                    let gv = g.data()[((bidx * oh + oy) * ow + ox) * c + ch] / 4.0;
                    for dy in 0..2 {
                        for dx in 0..2 {
                            let (iy, ix) = (2 * oy + dy, 2 * ox + dx);
                            if iy < h && ix < w {
                                gx.data_mut()[((bidx * h + iy) * w + ix) * c + ch] += gv;
                            }
                        }
                    }
                }
            }
        }
    }
}

fn spread_avg_r(g: &RealTensor, gx: &mut RealTensor, h: usize, w: usize) {
    let c = *gx.shape().last().unwrap();
    let n = gx.len() / (h * w * c);
    let (oh, ow) = (h.div_ceil(2), w.div_ceil(2));
    for bidx in 0..n {
        for oy in 0..oh {
            for ox in 0..ow {
                for ch in 0..c {
                    let gv = g.data()[((bidx * oh + oy) * ow + ox) * c + ch] / 4.0;
                    for dy in 0..2 {
                        for dx in 0..2 {
                            let (iy, ix) = (2 * oy + dy, 2 * ox + dx);
                            if iy < h && ix < w {
                                gx.data_mut()[((bidx * h + iy) * w + ix) * c + ch] += gv;
                            }
                        }
                    }
                }
            }
        }
    }
}

/// Gradients of a (possibly batched) cross-correlation w.r.t. input and
/// kernels: each output term y += x*k contributes G*conj(k) to the input
/// and G*conj(x) to the kernel.
fn conv2d_backward(
    g: &ComplexTensor,
    x: &ComplexTensor,
    k: &ComplexTensor,
    pad: Padding,
) -> Result<(ComplexTensor, ComplexTensor)> {
    let (n, h, w, cin) = match x.shape() {
        [h, w, c] => (1, *h, *w, *c),
        [n, h, w, c] => (*n, *h, *w, *c),
        s => return Err(Error::Shape(format!("conv input rank: {s:?}"))),
    };
    let [kh, kw, _, cout] = k.shape() else {
        return Err(Error::Shape("conv kernel rank".into()));
    };
    let (kh, kw, cout) = (*kh, *kw, *cout);
    let (oh, ow) = match pad {
        Padding::Valid => (h - kh + 1, w - kw + 1),
        Padding::Same => (h, w),
    };
    let (ph, pw) = match pad {
        Padding::Valid => (0, 0),
        Padding::Same => ((kh - 1) / 2, (kw - 1) / 2),
    };
    let mut gx = ComplexTensor::zeros(x.shape());
    let mut gk = ComplexTensor::zeros(k.shape());
    let gd = g.data();
    let xd = x.data();
    let gxd = gx.data_mut();
    let gkd = gk.data_mut();
    for b in 0..n {
        for oy in 0..oh {
            for ox in 0..ow {
                let obase = ((b * oh + oy) * ow + ox) * cout;
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
                        let xbase = ((b * h + iy) * w + ix) * cin;
                        let kbase = (dy * kw + dx) * cin * cout;
                        for ci in 0..cin {
                            let xv = xd[xbase + ci].conj();
                            let mut acc = Complex64::new(0.0, 0.0);
                            for co in 0..cout {
                                let gv = gd[obase + co];
                                acc += gv * k.data()[kbase + ci * cout + co].conj();
                                gkd[kbase + ci * cout + co] += gv * xv;
                            }
                            gxd[xbase + ci] += acc;
                        }
                    }
                }
            }
        }
    }
    Ok((gx, gk))
}

fn conv2d_backward_real(
    g: &RealTensor,
    x: &RealTensor,
    k: &RealTensor,
    pad: Padding,
) -> Result<(RealTensor, RealTensor)> {
    let (n, h, w, cin) = match x.shape() {
        [h, w, c] => (1, *h, *w, *c),
        [n, h, w, c] => (*n, *h, *w, *c),
        s => return Err(Error::Shape(format!("conv input rank: {s:?}"))),
    };
    let [kh, kw, _, cout] = k.shape() else {
        return Err(Error::Shape("conv kernel rank".into()));
    };
    let (kh, kw, cout) = (*kh, *kw, *cout);
    let (oh, ow) = match pad {
        Padding::Valid => (h - kh + 1, w - kw + 1),
        Padding::Same => (h, w),
    };
    let (ph, pw) = match pad {
        Padding::Valid => (0, 0),
        Padding::Same => ((kh - 1) / 2, (kw - 1) / 2),
    };
    let mut gx = RealTensor::zeros(x.shape());
    let mut gk = RealTensor::zeros(k.shape());
    let gd = g.data();
    let xd = x.data();
    let gxd = gx.data_mut();
    let gkd = gk.data_mut();
    for b in 0..n {
        for oy in 0..oh {
            for ox in 0..ow {
                let obase = ((b * oh + oy) * ow + ox) * cout;
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
                        let xbase = ((b * h + iy) * w + ix) * cin;
                        let kbase = (dy * kw + dx) * cin * cout;
                        for ci in 0..cin {
                            let xv = xd[xbase + ci];
                            let mut acc = 0.0;
                            for co in 0..cout {
                                let gv = gd[obase + co];
                                acc += gv * k.data()[kbase + ci * cout + co];
                                gkd[kbase + ci * cout + co] += gv * xv;
                            }
                            gxd[xbase + ci] += acc;
                        }
                    }
                }
            }
        }
    }
    Ok((gx, gk))
}
