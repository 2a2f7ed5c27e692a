//! Tape-based reverse-mode gradients in split-real form.
//!
//! Every complex quantity is differentiated as an (Re, Im) pair of real
//! coordinates: the gradient of a complex tensor is stored as a complex
//! tensor whose real plane holds dL/dRe and imaginary plane dL/dIm. This
//! is the only contract that stays valid for the non-holomorphic
//! activations used here, and it is exactly what central finite
//! differences on each plane measure.
//!
//! A [`Tape`] owns the nodes in construction order (which is topological);
//! op constructors run the forward computation eagerly and
//! [`Tape::backward`] walks the list once in reverse.

mod backward;
mod check;
mod ops;

pub use check::{check_gradients, finite_difference_check, FdAnalysis};

use std::rc::Rc;

use crate::ctensor::{ComplexTensor, Padding, RealTensor};
use crate::error::{Error, Result};
use crate::nn::act::RealFn;

/// A tensor value flowing through the graph.
#[derive(Debug, Clone)]
pub enum Value {
    C(ComplexTensor),
    R(RealTensor),
}

impl Value {
    pub fn shape(&self) -> &[usize] {
        match self {
            Value::C(t) => t.shape(),
            Value::R(t) => t.shape(),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Value::C(t) => t.len(),
            Value::R(t) => t.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_complex(&self) -> bool {
        matches!(self, Value::C(_))
    }

    /// Number of real scalar coordinates (complex entries count twice).
    pub fn real_coords(&self) -> usize {
        match self {
            Value::C(t) => 2 * t.len(),
            Value::R(t) => t.len(),
        }
    }

    pub fn zeros_like(&self) -> Value {
        match self {
            Value::C(t) => Value::C(ComplexTensor::zeros(t.shape())),
            Value::R(t) => Value::R(RealTensor::zeros(t.shape())),
        }
    }

    pub fn as_complex(&self) -> Result<&ComplexTensor> {
        match self {
            Value::C(t) => Ok(t),
            Value::R(_) => Err(Error::Contract("expected a complex tensor".into())),
        }
    }

    pub fn as_real(&self) -> Result<&RealTensor> {
        match self {
            Value::R(t) => Ok(t),
            Value::C(_) => Err(Error::Contract("expected a real tensor".into())),
        }
    }

    pub(crate) fn accumulate(&mut self, other: &Value) -> Result<()> {
        match (self, other) {
            (Value::C(a), Value::C(b)) => {
                *a = a.add(b)?;
            }
            (Value::R(a), Value::R(b)) => {
                *a = a.add(b)?;
            }
            _ => return Err(Error::Contract("gradient domain mismatch".into())),
        }
        Ok(())
    }

    /// Reads one real coordinate: complex tensors expose 2*len coords,
    /// plane-major (all Re first, then all Im).
    pub fn coord(&self, i: usize) -> f64 {
        match self {
            Value::C(t) => {
                let n = t.len();
                if i < n {
                    t.data()[i].re
                } else {
                    t.data()[i - n].im
                }
            }
            Value::R(t) => t.data()[i],
        }
    }

    /// Writes one real coordinate (same indexing as [`Value::coord`]).
    pub fn set_coord(&mut self, i: usize, v: f64) {
        match self {
            Value::C(t) => {
                let n = t.len();
                if i < n {
                    t.data_mut()[i].re = v;
                } else {
                    t.data_mut()[i - n].im = v;
                }
            }
            Value::R(t) => t.data_mut()[i] = v,
        }
    }
}

impl From<ComplexTensor> for Value {
    fn from(t: ComplexTensor) -> Self {
        Value::C(t)
    }
}

impl From<RealTensor> for Value {
    fn from(t: RealTensor) -> Self {
        Value::R(t)
    }
}

/// Handle to a node on a tape.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct VarId(pub(crate) usize);

#[derive(Debug, Clone)]
pub(crate) enum Op {
    /// Constant input; no gradient flows out of it.
    Leaf,
    /// Registered trainable parameter.
    Param,
    Add(VarId, VarId),
    Sub(VarId, VarId),
    Neg(VarId),
    MulElem(VarId, VarId),
    Scale(VarId, f64),
    AddConst(VarId),
    Matmul(VarId, VarId),
    Conv2d {
        x: VarId,
        k: VarId,
        pad: Padding,
    },
    Re(VarId),
    Im(VarId),
    MakeComplex {
        re: VarId,
        im: VarId,
    },
    /// Mean over every axis but the last, real [.., C] -> [C].
    MeanChan(VarId),
    /// x[.., C] + broadcast(v[C]); same domain on both sides.
    AddChan {
        x: VarId,
        v: VarId,
    },
    /// Real x[.., C] * broadcast(v[C]).
    MulChan {
        x: VarId,
        v: VarId,
    },
    /// Multiply by a fixed real mask of identical shape (both planes).
    MulMask {
        x: VarId,
        mask: Rc<RealTensor>,
    },
    Sqrt(VarId),
    Div(VarId, VarId),
    ActA {
        x: VarId,
        f_re: RealFn,
        f_im: RealFn,
    },
    ActR {
        x: VarId,
        f: RealFn,
    },
    ActB {
        x: VarId,
        f_r: RealFn,
        f_phi: RealFn,
    },
    /// Elementwise |z|, complex -> real; subgradient 0 at the origin.
    Modulus(VarId),
    SoftmaxLast(VarId),
    MaxPool {
        x: VarId,
        locs: Rc<Vec<usize>>,
    },
    MaxUnpool {
        x: VarId,
        locs: Rc<Vec<usize>>,
    },
    AvgPool(VarId),
    Reshape(VarId),
    /// Weighted average cross-entropy against fixed one-hot targets.
    AceLoss {
        y: VarId,
        target: Rc<RealTensor>,
        row_weights: Rc<Vec<f64>>,
    },
    /// sum(Re^2 + Im^2) over all entries -> real scalar.
    SumAbs2(VarId),
    /// sum of plane-wise inner product with a fixed probe tensor.
    ProbeSum {
        x: VarId,
        probe: Rc<Value>,
    },
}

pub(crate) struct Node {
    pub value: Value,
    pub op: Op,
}

/// Records the forward computation; node order is topological.
#[derive(Default)]
pub struct Tape {
    pub(crate) nodes: Vec<Node>,
    params: Vec<VarId>,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub(crate) fn push(&mut self, value: Value, op: Op) -> VarId {
        let id = VarId(self.nodes.len());
        self.nodes.push(Node { value, op });
        id
    }

    /// Records a constant. Gradients are computed for it but it is not
    /// listed in the parameter registry.
    pub fn leaf(&mut self, v: impl Into<Value>) -> VarId {
        self.push(v.into(), Op::Leaf)
    }

    /// Registers a trainable parameter (exactly once per tape).
    pub fn param(&mut self, v: impl Into<Value>) -> VarId {
        let id = self.push(v.into(), Op::Param);
        self.params.push(id);
        id
    }

    pub fn value(&self, id: VarId) -> &Value {
        &self.nodes[id.0].value
    }

    pub fn params(&self) -> &[VarId] {
        &self.params
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Gradients of one backward pass, indexed by [`VarId`].
pub struct Gradients {
    grads: Vec<Option<Value>>,
}

impl Gradients {
    /// Gradient for a node. Registered parameters always report a value
    /// (zeros when no path reaches the loss); other nodes may be `None`.
    pub fn get(&self, id: VarId) -> Option<&Value> {
        self.grads.get(id.0).and_then(|g| g.as_ref())
    }

    /// Split-real planes for a parameter: (dL/dRe, Some(dL/dIm)) for
    /// complex parameters, (dL/dx, None) for real ones.
    pub fn planes(&self, id: VarId) -> Option<(RealTensor, Option<RealTensor>)> {
        match self.get(id)? {
            Value::C(t) => Some((t.re(), Some(t.im()))),
            Value::R(t) => Some((t.clone(), None)),
        }
    }
}

impl Tape {
    /// Reverse pass from a real scalar loss node. Returns gradients for
    /// every node that influences the loss; registered parameters are
    /// materialized as zeros when unused.
    pub fn backward(&self, loss: VarId) -> Result<Gradients> {
        let lv = self.value(loss);
        match lv {
            Value::R(t) if t.len() == 1 => {}
            _ => {
                return Err(Error::Contract(format!(
                    "loss must be a real scalar, got {:?} ({})",
                    lv.shape(),
                    if lv.is_complex() { "complex" } else { "real" }
                )))
            }
        }
        let mut grads: Vec<Option<Value>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(Value::R(RealTensor::from_vec(lv.shape(), vec![1.0])?));
        for idx in (0..self.nodes.len()).rev() {
            let Some(g_out) = grads[idx].take() else {
                continue;
            };
            backward::step(self, idx, &g_out, &mut grads)?;
            // Parameters keep their accumulated gradient; interior nodes
            // already propagated theirs.
            if matches!(self.nodes[idx].op, Op::Param | Op::Leaf) {
                grads[idx] = Some(g_out);
            }
        }
        for &p in &self.params {
            if grads[p.0].is_none() {
                grads[p.0] = Some(self.nodes[p.0].value.zeros_like());
            }
        }
        Ok(Gradients { grads })
    }
}
