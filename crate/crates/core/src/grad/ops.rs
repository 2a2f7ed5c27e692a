//! Forward op constructors. Each checks its contract, computes the
//! result eagerly and records the node for the backward pass.

use std::rc::Rc;

use num_complex::Complex64;

use super::{Op, Tape, Value, VarId};
use crate::ctensor::{self, ComplexTensor, Padding, RealTensor};
use crate::error::{Error, Result};
use crate::nn::act::{self, RealFn};
use crate::nn::loss;
use crate::nn::pool;
use crate::nn::softmax;

fn same_domain(a: &Value, b: &Value, what: &str) -> Result<()> {
    if a.is_complex() != b.is_complex() {
        return Err(Error::Contract(format!("{what}: operand domains differ")));
    }
    Ok(())
}

impl Tape {
    pub fn add(&mut self, a: VarId, b: VarId) -> Result<VarId> {
        let (va, vb) = (self.value(a), self.value(b));
        same_domain(va, vb, "add")?;
        let out = match (va, vb) {
            (Value::C(x), Value::C(y)) => Value::C(x.add(y)?),
            (Value::R(x), Value::R(y)) => Value::R(x.add(y)?),
            _ => unreachable!(),
        };
        Ok(self.push(out, Op::Add(a, b)))
    }

    pub fn sub(&mut self, a: VarId, b: VarId) -> Result<VarId> {
        let (va, vb) = (self.value(a), self.value(b));
        same_domain(va, vb, "sub")?;
        let out = match (va, vb) {
            (Value::C(x), Value::C(y)) => Value::C(x.sub(y)?),
            (Value::R(x), Value::R(y)) => Value::R(x.sub(y)?),
            _ => unreachable!(),
        };
        Ok(self.push(out, Op::Sub(a, b)))
    }

    pub fn neg(&mut self, a: VarId) -> VarId {
        let out = match self.value(a) {
            Value::C(x) => Value::C(x.neg()),
            Value::R(x) => Value::R(x.neg()),
        };
        self.push(out, Op::Neg(a))
    }

    pub fn mul_elem(&mut self, a: VarId, b: VarId) -> Result<VarId> {
        let (va, vb) = (self.value(a), self.value(b));
        same_domain(va, vb, "mul_elem")?;
        let out = match (va, vb) {
            (Value::C(x), Value::C(y)) => Value::C(x.mul_elem(y)?),
            (Value::R(x), Value::R(y)) => Value::R(x.mul_elem(y)?),
            _ => unreachable!(),
        };
        Ok(self.push(out, Op::MulElem(a, b)))
    }

    pub fn scale(&mut self, a: VarId, s: f64) -> VarId {
        let out = match self.value(a) {
            Value::C(x) => Value::C(x.scale(s)),
            Value::R(x) => Value::R(x.scale(s)),
        };
        self.push(out, Op::Scale(a, s))
    }

    /// Adds a real constant elementwise (real tensors only).
    pub fn add_const(&mut self, a: VarId, c: f64) -> Result<VarId> {
        let x = self.value(a).as_real()?;
        let out = Value::R(x.map(|v| v + c));
        Ok(self.push(out, Op::AddConst(a)))
    }

    pub fn matmul(&mut self, a: VarId, b: VarId) -> Result<VarId> {
        let (va, vb) = (self.value(a), self.value(b));
        same_domain(va, vb, "matmul")?;
        let out = match (va, vb) {
            (Value::C(x), Value::C(y)) => Value::C(ctensor::matmul(x, y)?),
            (Value::R(x), Value::R(y)) => Value::R(ctensor::matmul_real(x, y)?),
            _ => unreachable!(),
        };
        Ok(self.push(out, Op::Matmul(a, b)))
    }

    /// Cross-correlation; input [H, W, Cin] or [N, H, W, Cin].
    pub fn conv2d(&mut self, x: VarId, k: VarId, pad: Padding) -> Result<VarId> {
        let (vx, vk) = (self.value(x), self.value(k));
        same_domain(vx, vk, "conv2d")?;
        let out = match (vx, vk) {
            (Value::C(xs), Value::C(ks)) => Value::C(batched_conv(xs, ks, pad)?),
            (Value::R(xs), Value::R(ks)) => Value::R(batched_conv_real(xs, ks, pad)?),
            _ => unreachable!(),
        };
        Ok(self.push(out, Op::Conv2d { x, k, pad }))
    }

    pub fn re(&mut self, a: VarId) -> Result<VarId> {
        let x = self.value(a).as_complex()?;
        let out = Value::R(x.re());
        Ok(self.push(out, Op::Re(a)))
    }

    pub fn im(&mut self, a: VarId) -> Result<VarId> {
        let x = self.value(a).as_complex()?;
        let out = Value::R(x.im());
        Ok(self.push(out, Op::Im(a)))
    }

    pub fn make_complex(&mut self, re: VarId, im: VarId) -> Result<VarId> {
        let (r, i) = (self.value(re).as_real()?, self.value(im).as_real()?);
        let out = Value::C(ComplexTensor::from_planes(r, i)?);
        Ok(self.push(out, Op::MakeComplex { re, im }))
    }

    /// Mean over every axis but the last: real [.., C] -> [C].
    pub fn mean_chan(&mut self, a: VarId) -> Result<VarId> {
        let x = self.value(a).as_real()?;
        let shape = x.shape();
        if shape.is_empty() {
            return Err(Error::Shape("mean_chan needs a channel axis".into()));
        }
        let c = shape[shape.len() - 1];
        let rows = x.len() / c;
        if rows < 1 {
            return Err(Error::Shape("mean_chan on empty tensor".into()));
        }
        let mut acc = vec![0.0; c];
        for r in 0..rows {
            for (j, a) in acc.iter_mut().enumerate() {
                *a += x.data()[r * c + j];
            }
        }
        let inv = 1.0 / rows as f64;
        acc.iter_mut().for_each(|v| *v *= inv);
        let out = Value::R(RealTensor::from_vec(&[c], acc)?);
        Ok(self.push(out, Op::MeanChan(a)))
    }

    /// x[.., C] + broadcast(v[C]); used for biases and shifts.
    pub fn add_chan(&mut self, x: VarId, v: VarId) -> Result<VarId> {
        let (vx, vv) = (self.value(x), self.value(v));
        same_domain(vx, vv, "add_chan")?;
        let c = chan_extent(vx.shape(), vv.shape())?;
        let out = match (vx, vv) {
            (Value::C(xs), Value::C(vs)) => {
                let mut data = xs.data().to_vec();
                for (i, d) in data.iter_mut().enumerate() {
                    *d += vs.data()[i % c];
                }
                Value::C(ComplexTensor::from_vec(xs.shape(), data)?)
            }
            (Value::R(xs), Value::R(vs)) => {
                let mut data = xs.data().to_vec();
                for (i, d) in data.iter_mut().enumerate() {
                    *d += vs.data()[i % c];
                }
                Value::R(RealTensor::from_vec(xs.shape(), data)?)
            }
            _ => unreachable!(),
        };
        Ok(self.push(out, Op::AddChan { x, v }))
    }

    /// Real x[.., C] * broadcast(v[C]); used for per-channel scales.
    pub fn mul_chan(&mut self, x: VarId, v: VarId) -> Result<VarId> {
        let xs = self.value(x).as_real()?;
        let vs = self.value(v).as_real()?;
        let c = chan_extent(xs.shape(), vs.shape())?;
        let mut data = xs.data().to_vec();
        for (i, d) in data.iter_mut().enumerate() {
            *d *= vs.data()[i % c];
        }
        let out = Value::R(RealTensor::from_vec(xs.shape(), data)?);
        Ok(self.push(out, Op::MulChan { x, v }))
    }

    /// Multiplies both planes by a fixed real mask of identical shape.
    pub fn mul_mask(&mut self, x: VarId, mask: Rc<RealTensor>) -> Result<VarId> {
        let vx = self.value(x);
        if vx.shape() != mask.shape() {
            return Err(Error::Shape(format!(
                "mask shape {:?} vs input {:?}",
                mask.shape(),
                vx.shape()
            )));
        }
        let out = match vx {
            Value::C(xs) => {
                let data = xs
                    .data()
                    .iter()
                    .zip(mask.data())
                    .map(|(z, m)| z * *m)
                    .collect();
                Value::C(ComplexTensor::from_vec(xs.shape(), data)?)
            }
            Value::R(xs) => Value::R(xs.mul_elem(&mask)?),
        };
        Ok(self.push(out, Op::MulMask { x, mask }))
    }

    /// Elementwise square root (real tensors only).
    pub fn sqrt(&mut self, a: VarId) -> Result<VarId> {
        let x = self.value(a).as_real()?;
        let out = Value::R(x.map(f64::sqrt));
        Ok(self.push(out, Op::Sqrt(a)))
    }

    /// Elementwise division (real tensors only).
    pub fn div(&mut self, a: VarId, b: VarId) -> Result<VarId> {
        let x = self.value(a).as_real()?;
        let y = self.value(b).as_real()?;
        let out = Value::R(x.zip_div(y)?);
        Ok(self.push(out, Op::Div(a, b)))
    }

    /// Type-A activation on a complex tensor.
    pub fn act_a(&mut self, x: VarId, f_re: RealFn, f_im: RealFn) -> Result<VarId> {
        let xs = self.value(x).as_complex()?;
        let out = Value::C(act::type_a(|v| f_re.eval(v), |v| f_im.eval(v), xs));
        Ok(self.push(out, Op::ActA { x, f_re, f_im }))
    }

    /// Real activation.
    pub fn act_r(&mut self, x: VarId, f: RealFn) -> Result<VarId> {
        let xs = self.value(x).as_real()?;
        let out = Value::R(act::apply_real(f, xs));
        Ok(self.push(out, Op::ActR { x, f }))
    }

    /// Type-B activation on a complex tensor.
    pub fn act_b(&mut self, x: VarId, f_r: RealFn, f_phi: RealFn) -> Result<VarId> {
        let xs = self.value(x).as_complex()?;
        let out = Value::C(act::type_b(|v| f_r.eval(v), |v| f_phi.eval(v), xs));
        Ok(self.push(out, Op::ActB { x, f_r, f_phi }))
    }

    /// Elementwise modulus |z|: complex -> real.
    pub fn modulus(&mut self, x: VarId) -> Result<VarId> {
        let xs = self.value(x).as_complex()?;
        let out = Value::R(ctensor::modulus(xs));
        Ok(self.push(out, Op::Modulus(x)))
    }

    /// Softmax over the last axis; plane-wise for complex tensors.
    pub fn softmax_last(&mut self, x: VarId) -> Result<VarId> {
        let out = match self.value(x) {
            Value::C(xs) => Value::C(softmax::softmax_output(xs)?),
            Value::R(xs) => Value::R(softmax::softmax_output_real(xs)?),
        };
        Ok(self.push(out, Op::SoftmaxLast(x)))
    }

    /// 2x2 modulus max-pool; returns the output node and the argmax
    /// locations for a mirrored unpool.
    pub fn max_pool(&mut self, x: VarId) -> Result<(VarId, Rc<Vec<usize>>)> {
        let (out, locs) = match self.value(x) {
            Value::C(xs) => {
                let (y, l) = pool::max_pool_modulus(xs)?;
                (Value::C(y), l)
            }
            Value::R(xs) => {
                let (y, l) = pool::max_pool_real(xs)?;
                (Value::R(y), l)
            }
        };
        let locs = Rc::new(locs);
        let id = self.push(
            out,
            Op::MaxPool {
                x,
                locs: locs.clone(),
            },
        );
        Ok((id, locs))
    }

    /// Max-unpool into `out_shape` using locations from a matching pool.
    pub fn max_unpool(
        &mut self,
        x: VarId,
        locs: Rc<Vec<usize>>,
        out_shape: &[usize],
    ) -> Result<VarId> {
        let out = match self.value(x) {
            Value::C(xs) => Value::C(pool::max_unpool(xs, &locs, out_shape)?),
            Value::R(xs) => Value::R(pool::max_unpool_real(xs, &locs, out_shape)?),
        };
        Ok(self.push(out, Op::MaxUnpool { x, locs }))
    }

    /// 2x2 arithmetic average pooling.
    pub fn avg_pool(&mut self, x: VarId) -> Result<VarId> {
        let out = match self.value(x) {
            Value::C(xs) => Value::C(pool::avg_pool(xs)?),
            Value::R(xs) => Value::R(pool::avg_pool_real(xs)?),
        };
        Ok(self.push(out, Op::AvgPool(x)))
    }

    pub fn reshape(&mut self, x: VarId, shape: &[usize]) -> Result<VarId> {
        let out = match self.value(x) {
            Value::C(xs) => Value::C(xs.reshape(shape)?),
            Value::R(xs) => Value::R(xs.reshape(shape)?),
        };
        Ok(self.push(out, Op::Reshape(x)))
    }

    /// Weighted average cross-entropy against fixed one-hot targets.
    /// `row_weights` already fold mask, class weight and normalization.
    pub fn ace_loss(
        &mut self,
        y: VarId,
        target: Rc<RealTensor>,
        row_weights: Rc<Vec<f64>>,
    ) -> Result<VarId> {
        let l = match self.value(y) {
            Value::C(ys) => loss::ace_loss_weighted(ys, &target, &row_weights)?,
            Value::R(ys) => loss::cce_loss_weighted(ys, &target, &row_weights)?,
        };
        let out = Value::R(RealTensor::scalar(l));
        Ok(self.push(
            out,
            Op::AceLoss {
                y,
                target,
                row_weights,
            },
        ))
    }

    /// sum(Re^2 + Im^2) over all entries -> real scalar.
    pub fn sum_abs2(&mut self, x: VarId) -> VarId {
        let s = match self.value(x) {
            Value::C(xs) => xs.data().iter().map(|z| z.re * z.re + z.im * z.im).sum(),
            Value::R(xs) => xs.data().iter().map(|v| v * v).sum(),
        };
        self.push(Value::R(RealTensor::scalar(s)), Op::SumAbs2(x))
    }

    /// Plane-wise inner product with a fixed probe: a smooth linear
    /// functional used by gradient checks.
    pub fn probe_sum(&mut self, x: VarId, probe: Rc<Value>) -> Result<VarId> {
        let vx = self.value(x);
        same_domain(vx, &probe, "probe_sum")?;
        if vx.shape() != probe.shape() {
            return Err(Error::Shape("probe shape mismatch".into()));
        }
        let s = match (vx, probe.as_ref()) {
            (Value::C(xs), Value::C(ps)) => xs
                .data()
                .iter()
                .zip(ps.data())
                .map(|(z, p)| z.re * p.re + z.im * p.im)
                .sum(),
            (Value::R(xs), Value::R(ps)) => {
                xs.data().iter().zip(ps.data()).map(|(a, b)| a * b).sum()
            }
            _ => unreachable!(),
        };
        Ok(self.push(Value::R(RealTensor::scalar(s)), Op::ProbeSum { x, probe }))
    }
}

fn chan_extent(x_shape: &[usize], v_shape: &[usize]) -> Result<usize> {
    let c = match v_shape {
        [c] => *c,
        _ => {
            return Err(Error::Shape(format!(
                "per-channel operand must be 1-D, got {v_shape:?}"
            )))
        }
    };
    match x_shape.last() {
        Some(&last) if last == c => Ok(c),
        _ => Err(Error::Shape(format!(
            "channel extent {c} does not match input {x_shape:?}"
        ))),
    }
}

impl RealTensor {
    fn zip_div(&self, other: &Self) -> Result<Self> {
        if self.shape() != other.shape() {
            return Err(Error::Shape(format!(
                "elementwise div on {:?} vs {:?}",
                self.shape(),
                other.shape()
            )));
        }
        let data = self
            .data()
            .iter()
            .zip(other.data())
            .map(|(a, b)| a / b)
            .collect();
        Self::from_vec(self.shape(), data)
    }
}

/// Runs conv2d per batch item for rank-4 inputs, or directly for rank-3.
pub(crate) fn batched_conv(
    x: &ComplexTensor,
    k: &ComplexTensor,
    pad: Padding,
) -> Result<ComplexTensor> {
    match x.shape() {
        [_, _, _] => ctensor::conv2d(x, k, pad),
        [n, h, w, c] => {
            let (n, h, w, c) = (*n, *h, *w, *c);
            let item = h * w * c;
            let mut out_data: Vec<Complex64> = Vec::new();
            let mut out_shape = Vec::new();
            for b in 0..n {
                let slice = ComplexTensor::from_vec(
                    &[h, w, c],
                    x.data()[b * item..(b + 1) * item].to_vec(),
                )?;
                let y = ctensor::conv2d(&slice, k, pad)?;
                if b == 0 {
                    out_shape = vec![n, y.shape()[0], y.shape()[1], y.shape()[2]];
                    out_data.reserve(n * y.len());
                }
                out_data.extend_from_slice(y.data());
            }
            ComplexTensor::from_vec(&out_shape, out_data)
        }
        s => Err(Error::Shape(format!("conv2d input rank: {s:?}"))),
    }
}

pub(crate) fn batched_conv_real(
    x: &RealTensor,
    k: &RealTensor,
    pad: Padding,
) -> Result<RealTensor> {
    match x.shape() {
        [_, _, _] => ctensor::conv2d_real(x, k, pad),
        [n, h, w, c] => {
            let (n, h, w, c) = (*n, *h, *w, *c);
            let item = h * w * c;
            let mut out_data: Vec<f64> = Vec::new();
            let mut out_shape = Vec::new();
            for b in 0..n {
                let slice =
                    RealTensor::from_vec(&[h, w, c], x.data()[b * item..(b + 1) * item].to_vec())?;
                let y = ctensor::conv2d_real(&slice, k, pad)?;
                if b == 0 {
                    out_shape = vec![n, y.shape()[0], y.shape()[1], y.shape()[2]];
                    out_data.reserve(n * y.len());
                }
                out_data.extend_from_slice(y.data());
            }
            RealTensor::from_vec(&out_shape, out_data)
        }
        s => Err(Error::Shape(format!("conv2d input rank: {s:?}"))),
    }
}
