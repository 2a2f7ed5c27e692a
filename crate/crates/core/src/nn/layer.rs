//! Layer catalog and the sequential network container.
//!
//! A network owns its parameters as plain tensors. Each forward pass
//! registers them on a fresh tape (in a fixed visit order that the
//! optimizer relies on) and builds the graph; max-pool argmax locations
//! flow to the mirrored unpool layers through a LIFO stack.

use std::rc::Rc;

use rand_chacha::ChaCha8Rng;

use super::act::RealFn;
use super::batchnorm::{complex_bn_graph, real_bn_graph, BnComplex, BnComplexParams, BnReal};
use super::dropout::dropout_mask;
use crate::ctensor::Padding;
use crate::error::{Error, Result};
use crate::grad::{Tape, Value, VarId};

/// Value domain of a network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Domain {
    Complex,
    Real,
}

/// Activation selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActKind {
    /// Plane-wise application of two real functions (complex inputs).
    TypeA(RealFn, RealFn),
    /// Magnitude/phase application of two real functions (complex inputs).
    TypeB(RealFn, RealFn),
    /// Plain real activation (real inputs).
    Real(RealFn),
}

impl ActKind {
    /// Complex ReLU: Type-A with ReLU on both planes.
    pub fn crelu() -> Self {
        ActKind::TypeA(RealFn::Relu, RealFn::Relu)
    }

    pub fn relu() -> Self {
        ActKind::Real(RealFn::Relu)
    }
}

#[derive(Debug, Clone)]
pub struct DenseLayer {
    /// [in, out] weights; domain decides complex vs real.
    pub w: Value,
    /// [out] bias, initialized to zero.
    pub b: Value,
}

#[derive(Debug, Clone)]
pub struct ConvLayer {
    /// [k, k, cin, cout] kernels.
    pub k: Value,
    /// [cout] bias, initialized to zero.
    pub b: Value,
    pub pad: Padding,
}

/// Batch-norm state for either domain.
#[derive(Debug, Clone)]
pub enum BnState {
    Complex(BnComplex),
    Real(BnReal),
}

/// Output softmax variant for complex logits. The plane-wise form is the
/// default; the magnitude form feeds |z| to a real softmax.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SoftmaxMode {
    #[default]
    PlaneWise,
    Magnitude,
}

#[derive(Debug, Clone)]
pub enum Layer {
    Dense(DenseLayer),
    Conv2d(ConvLayer),
    Activation(ActKind),
    /// 2x2 arithmetic average pooling.
    AvgPool,
    /// 2x2 max pooling (modulus comparison in the complex domain),
    /// storing argmax locations for a mirrored unpool.
    MaxPool,
    /// Restores the mirror pool's input shape, zeros off the argmax cells.
    MaxUnpool,
    BatchNorm(BnState),
    Dropout { rate: f64 },
    /// Softmax over the class axis; the mode only matters for complex
    /// logits (real logits always use the plain softmax).
    Softmax(SoftmaxMode),
    /// [N, ...] -> [N, prod].
    Flatten,
}

impl Layer {
    /// Visits trainable parameters in the fixed registration order.
    pub fn for_each_param(&self, f: &mut dyn FnMut(&Value)) {
        match self {
            Layer::Dense(d) => {
                f(&d.w);
                f(&d.b);
            }
            Layer::Conv2d(c) => {
                f(&c.k);
                f(&c.b);
            }
            Layer::BatchNorm(BnState::Complex(bn)) => {
                f(&Value::R(bn.scale_rr.clone()));
                f(&Value::R(bn.scale_ri.clone()));
                f(&Value::R(bn.scale_ir.clone()));
                f(&Value::R(bn.scale_ii.clone()));
                f(&Value::C(bn.shift.clone()));
            }
            Layer::BatchNorm(BnState::Real(bn)) => {
                f(&Value::R(bn.scale.clone()));
                f(&Value::R(bn.shift.clone()));
            }
            _ => {}
        }
    }

    /// Applies `f` to each trainable parameter slot, in the same order as
    /// [`Layer::for_each_param`]. Used by the optimizer to write updates.
    pub fn update_params(&mut self, f: &mut dyn FnMut(&mut Value)) {
        match self {
            Layer::Dense(d) => {
                f(&mut d.w);
                f(&mut d.b);
            }
            Layer::Conv2d(c) => {
                f(&mut c.k);
                f(&mut c.b);
            }
            Layer::BatchNorm(BnState::Complex(bn)) => {
                let mut v = Value::R(bn.scale_rr.clone());
                f(&mut v);
                bn.scale_rr = into_real(v);
                let mut v = Value::R(bn.scale_ri.clone());
                f(&mut v);
                bn.scale_ri = into_real(v);
                let mut v = Value::R(bn.scale_ir.clone());
                f(&mut v);
                bn.scale_ir = into_real(v);
                let mut v = Value::R(bn.scale_ii.clone());
                f(&mut v);
                bn.scale_ii = into_real(v);
                let mut v = Value::C(bn.shift.clone());
                f(&mut v);
                bn.shift = into_complex(v);
            }
            Layer::BatchNorm(BnState::Real(bn)) => {
                let mut v = Value::R(bn.scale.clone());
                f(&mut v);
                bn.scale = into_real(v);
                let mut v = Value::R(bn.shift.clone());
                f(&mut v);
                bn.shift = into_real(v);
            }
            _ => {}
        }
    }
}

fn into_real(v: Value) -> crate::ctensor::RealTensor {
    match v {
        Value::R(t) => t,
        Value::C(_) => unreachable!("optimizer changed a parameter's domain"),
    }
}

fn into_complex(v: Value) -> crate::ctensor::ComplexTensor {
    match v {
        Value::C(t) => t,
        Value::R(_) => unreachable!("optimizer changed a parameter's domain"),
    }
}

/// Forward pass artifacts: the output node and parameter ids aligned
/// with the network's parameter visit order.
pub struct NetForward {
    pub output: VarId,
    pub params: Vec<VarId>,
}

#[derive(Debug, Clone)]
pub struct Network {
    pub domain: Domain,
    pub layers: Vec<Layer>,
}

impl Network {
    pub fn new(domain: Domain, layers: Vec<Layer>) -> Self {
        Self { domain, layers }
    }

    /// Total number of real trainable scalars (complex entries count twice).
    pub fn real_param_count(&self) -> usize {
        let mut n = 0;
        for layer in &self.layers {
            layer.for_each_param(&mut |v| n += v.real_coords());
        }
        n
    }

    /// Runs the forward pass, registering every parameter on the tape.
    /// Training mode draws dropout masks from `rng` and updates BN
    /// running statistics.
    pub fn forward(
        &mut self,
        tape: &mut Tape,
        input: VarId,
        training: bool,
        rng: &mut ChaCha8Rng,
    ) -> Result<NetForward> {
        let mut x = input;
        let mut params = Vec::new();
        let mut pool_stack: Vec<(Rc<Vec<usize>>, Vec<usize>)> = Vec::new();
        for layer in &mut self.layers {
            x = match layer {
                Layer::Dense(d) => {
                    let w = tape.param(d.w.clone());
                    let b = tape.param(d.b.clone());
                    params.push(w);
                    params.push(b);
                    let y = tape.matmul(x, w)?;
                    tape.add_chan(y, b)?
                }
                Layer::Conv2d(c) => {
                    let k = tape.param(c.k.clone());
                    let b = tape.param(c.b.clone());
                    params.push(k);
                    params.push(b);
                    let y = tape.conv2d(x, k, c.pad)?;
                    tape.add_chan(y, b)?
                }
                Layer::Activation(a) => match a {
                    ActKind::TypeA(fr, fi) => tape.act_a(x, *fr, *fi)?,
                    ActKind::TypeB(fr, fp) => tape.act_b(x, *fr, *fp)?,
                    ActKind::Real(f) => tape.act_r(x, *f)?,
                },
                Layer::AvgPool => tape.avg_pool(x)?,
                Layer::MaxPool => {
                    let in_shape = tape.value(x).shape().to_vec();
                    let (y, locs) = tape.max_pool(x)?;
                    pool_stack.push((locs, in_shape));
                    y
                }
                Layer::MaxUnpool => {
                    let (locs, shape) = pool_stack.pop().ok_or_else(|| {
                        Error::Contract("max-unpool without a matching pool".into())
                    })?;
                    tape.max_unpool(x, locs, &shape)?
                }
                Layer::BatchNorm(BnState::Complex(bn)) => {
                    let p = BnComplexParams {
                        scale_rr: tape.param(Value::R(bn.scale_rr.clone())),
                        scale_ri: tape.param(Value::R(bn.scale_ri.clone())),
                        scale_ir: tape.param(Value::R(bn.scale_ir.clone())),
                        scale_ii: tape.param(Value::R(bn.scale_ii.clone())),
                        shift: tape.param(Value::C(bn.shift.clone())),
                    };
                    params.extend([p.scale_rr, p.scale_ri, p.scale_ir, p.scale_ii, p.shift]);
                    complex_bn_graph(tape, x, &p, bn, training)?
                }
                Layer::BatchNorm(BnState::Real(bn)) => {
                    let scale = tape.param(Value::R(bn.scale.clone()));
                    let shift = tape.param(Value::R(bn.shift.clone()));
                    params.push(scale);
                    params.push(shift);
                    real_bn_graph(tape, x, scale, shift, bn, training)?
                }
                Layer::Dropout { rate } => {
                    if training && *rate > 0.0 {
                        let shape = tape.value(x).shape().to_vec();
                        let mask = Rc::new(dropout_mask(&shape, *rate, rng)?);
                        tape.mul_mask(x, mask)?
                    } else {
                        x
                    }
                }
                Layer::Softmax(mode) => match (mode, tape.value(x).is_complex()) {
                    (SoftmaxMode::Magnitude, true) => {
                        let m = tape.modulus(x)?;
                        tape.softmax_last(m)?
                    }
                    _ => tape.softmax_last(x)?,
                },
                Layer::Flatten => {
                    let shape = tape.value(x).shape();
                    let n = shape[0];
                    let rest: usize = shape[1..].iter().product();
                    tape.reshape(x, &[n, rest])?
                }
            };
        }
        Ok(NetForward { output: x, params })
    }

    /// Writes optimizer updates back into the parameter slots, visiting
    /// them in the same order as `forward` registered them.
    pub fn update_params(&mut self, f: &mut dyn FnMut(&mut Value)) {
        for layer in &mut self.layers {
            layer.update_params(f);
        }
    }
}
