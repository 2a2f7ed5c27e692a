//! Minibatch Adam training on the (optionally weighted) average
//! cross-entropy, plus evaluation into a confusion matrix.

use std::rc::Rc;

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use cvnn_core::ctensor::{ComplexTensor, RealTensor};
use cvnn_core::grad::{Tape, Value};
use cvnn_core::nn::loss::one_hot;
use cvnn_core::nn::{metrics, prediction, prediction_real, ConfusionMatrix, Network};
use cvnn_core::polsar::UNLABELED;
use cvnn_core::sampling::PatchSet;
use cvnn_core::{Error, Result};

/// Adam with per-real-plane moments: each complex parameter is treated as
/// two real coordinates.
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    t: u64,
    m: Vec<Value>,
    v: Vec<Value>,
}

impl Adam {
    pub fn new(learning_rate: f64) -> Self {
        Self {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            t: 0,
            m: Vec::new(),
            v: Vec::new(),
        }
    }

    /// Applies one update; `grads` align with the network's parameter
    /// visit order.
    pub fn step(&mut self, net: &mut Network, grads: &[Value]) {
        if self.m.is_empty() {
            self.m = grads.iter().map(Value::zeros_like).collect();
            self.v = grads.iter().map(Value::zeros_like).collect();
        }
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        let mut slot = 0usize;
        net.update_params(&mut |p| {
            let g = &grads[slot];
            let m = &mut self.m[slot];
            let v = &mut self.v[slot];
            for i in 0..p.real_coords() {
                let gi = g.coord(i);
                let mi = self.beta1 * m.coord(i) + (1.0 - self.beta1) * gi;
                let vi = self.beta2 * v.coord(i) + (1.0 - self.beta2) * gi * gi;
                m.set_coord(i, mi);
                v.set_coord(i, vi);
                let update = self.learning_rate * (mi / bc1) / ((vi / bc2).sqrt() + self.epsilon);
                p.set_coord(i, p.coord(i) - update);
            }
            slot += 1;
        });
    }
}

/// Training hyperparameters for one run.
#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// Early stop after this many epochs without validation-OA
    /// improvement (None trains the full epoch budget).
    pub patience: Option<usize>,
    /// Per-class loss weights (weighted-loss balancing); None is uniform.
    pub class_weights: Option<Vec<f64>>,
    pub seed: u64,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_overall_accuracy: f64,
}

/// Stacks patch inputs [s, s, C] into one [B, s, s, C] batch tensor.
fn stack_inputs(set: &PatchSet, idx: &[usize]) -> Result<Value> {
    let first = &set.patches[idx[0]].input;
    let shape = first.shape().to_vec();
    let mut out_shape = vec![idx.len()];
    out_shape.extend_from_slice(&shape);
    match first {
        Value::C(_) => {
            let mut data = Vec::with_capacity(idx.len() * first.len());
            for &i in idx {
                data.extend_from_slice(set.patches[i].input.as_complex()?.data());
            }
            Ok(Value::C(ComplexTensor::from_vec(&out_shape, data)?))
        }
        Value::R(_) => {
            let mut data = Vec::with_capacity(idx.len() * first.len());
            for &i in idx {
                data.extend_from_slice(set.patches[i].input.as_real()?.data());
            }
            Ok(Value::R(RealTensor::from_vec(&out_shape, data)?))
        }
    }
}

/// Per-row loss targets: one row per center label, or one row per pixel
/// for dense label patches (unlabeled pixels masked out).
fn batch_targets(
    set: &PatchSet,
    idx: &[usize],
    classes: usize,
    class_weights: Option<&[f64]>,
) -> Result<(Rc<RealTensor>, Rc<Vec<f64>>, usize)> {
    let dense = set.patches[idx[0]].center_class.is_none();
    let mut labels: Vec<usize> = Vec::new();
    let mut mask: Vec<bool> = Vec::new();
    if dense {
        for &i in idx {
            for &l in &set.patches[i].labels {
                if l == UNLABELED {
                    labels.push(0);
                    mask.push(false);
                } else {
                    labels.push(l as usize);
                    mask.push(true);
                }
            }
        }
    } else {
        for &i in idx {
            let l = set.patches[i]
                .center_class
                .ok_or_else(|| Error::Contract("patch lacks a center label".into()))?;
            if l == UNLABELED {
                labels.push(0);
                mask.push(false);
            } else {
                labels.push(l as usize);
                mask.push(true);
            }
        }
    }
    let rows = labels.len();
    let labeled = mask.iter().filter(|&&m| m).count().max(1) as f64;
    let weights: Vec<f64> = labels
        .iter()
        .zip(&mask)
        .map(|(&l, &m)| {
            if !m {
                0.0
            } else {
                let w = class_weights.map_or(1.0, |cw| cw[l]);
                w / labeled
            }
        })
        .collect();
    Ok((Rc::new(one_hot(&labels, classes)?), Rc::new(weights), rows))
}

/// One forward pass over `idx` returning the loss node and parameter ids.
fn forward_loss(
    net: &mut Network,
    set: &PatchSet,
    idx: &[usize],
    classes: usize,
    class_weights: Option<&[f64]>,
    training: bool,
    rng: &mut ChaCha8Rng,
    tape: &mut Tape,
) -> Result<(cvnn_core::grad::VarId, Vec<cvnn_core::grad::VarId>)> {
    let input = stack_inputs(set, idx)?;
    let x = tape.leaf(input);
    let fwd = net.forward(tape, x, training, rng)?;
    let (target, weights, rows) = batch_targets(set, idx, classes, class_weights)?;
    let flat = tape.reshape(fwd.output, &[rows, classes])?;
    let loss = tape.ace_loss(flat, target, weights)?;
    Ok((loss, fwd.params))
}

/// Trains with minibatch Adam; records per-epoch validation OA. A
/// non-finite loss aborts with epoch/batch diagnostics.
pub fn train(
    net: &mut Network,
    train_set: &PatchSet,
    val_set: &PatchSet,
    cfg: &TrainConfig,
) -> Result<Vec<EpochStats>> {
    if train_set.patches.is_empty() {
        return Err(Error::Contract("empty training set".into()));
    }
    let classes = train_set.classes;
    let mut adam = Adam::new(cfg.learning_rate);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut dropout_rng = ChaCha8Rng::seed_from_u64(rng.random());
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut best_val = f64::NEG_INFINITY;
    let mut since_best = 0usize;
    let mut order: Vec<usize> = (0..train_set.patches.len()).collect();
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut batches = 0usize;
        for (b, chunk) in order.chunks(cfg.batch_size).enumerate() {
            // A trailing single-sample batch cannot feed batch norm;
            // drop it (the shuffle rotates which sample sits there).
            if chunk.len() < 2 && order.len() > chunk.len() {
                continue;
            }
            let mut tape = Tape::new();
            let (loss, params) = forward_loss(
                net,
                train_set,
                chunk,
                classes,
                cfg.class_weights.as_deref(),
                true,
                &mut dropout_rng,
                &mut tape,
            )?;
            let loss_val = tape.value(loss).as_real()?.data()[0];
            if !loss_val.is_finite() {
                return Err(Error::Numeric(format!(
                    "non-finite loss {loss_val} at epoch {epoch}, batch {b}"
                )));
            }
            loss_sum += loss_val;
            batches += 1;
            let grads = tape.backward(loss)?;
            let gvals: Vec<Value> = params
                .iter()
                .map(|&p| grads.get(p).expect("registered parameter").clone())
                .collect();
            adam.step(net, &gvals);
        }
        let val_oa = if val_set.patches.is_empty() {
            f64::NAN
        } else {
            let cm = evaluate(net, val_set)?;
            metrics(&cm)?.overall_accuracy
        };
        history.push(EpochStats {
            epoch,
            train_loss: loss_sum / batches.max(1) as f64,
            val_overall_accuracy: val_oa,
        });
        // Early stopping needs a validation signal; an empty val set
        // (NaN OA) must not count as "no improvement".
        if let Some(patience) = cfg.patience {
            if val_oa.is_nan() {
                continue;
            }
            if val_oa > best_val {
                best_val = val_oa;
                since_best = 0;
            } else {
                since_best += 1;
                if since_best >= patience {
                    break;
                }
            }
        }
    }
    Ok(history)
}

/// Confusion matrix over a patch set (center labels, or every labeled
/// pixel for dense patches). Runs in inference mode.
pub fn evaluate(net: &mut Network, set: &PatchSet) -> Result<ConfusionMatrix> {
    let classes = set.classes;
    let mut cm = ConfusionMatrix::new(classes);
    if set.patches.is_empty() {
        return Ok(cm);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let chunk_elems = 1 << 18;
    let per = set.patches[0].input.len().max(1);
    let chunk = (chunk_elems / per).clamp(1, 256);
    let all: Vec<usize> = (0..set.patches.len()).collect();
    for idx in all.chunks(chunk) {
        let input = stack_inputs(set, idx)?;
        let mut tape = Tape::new();
        let x = tape.leaf(input);
        let fwd = net.forward(&mut tape, x, false, &mut rng)?;
        let out = tape.value(fwd.output);
        let dense = set.patches[idx[0]].center_class.is_none();
        match out {
            Value::C(y) => {
                let k = *y.shape().last().unwrap();
                let rows = y.len() / k;
                let per_patch = rows / idx.len();
                for (pi, &patch_idx) in idx.iter().enumerate() {
                    record_rows(
                        &mut cm,
                        set,
                        patch_idx,
                        dense,
                        per_patch,
                        |r| prediction(&y.data()[(pi * per_patch + r) * k..(pi * per_patch + r + 1) * k]),
                    );
                }
            }
            Value::R(y) => {
                let k = *y.shape().last().unwrap();
                let rows = y.len() / k;
                let per_patch = rows / idx.len();
                for (pi, &patch_idx) in idx.iter().enumerate() {
                    record_rows(
                        &mut cm,
                        set,
                        patch_idx,
                        dense,
                        per_patch,
                        |r| {
                            prediction_real(
                                &y.data()[(pi * per_patch + r) * k..(pi * per_patch + r + 1) * k],
                            )
                        },
                    );
                }
            }
        }
    }
    Ok(cm)
}

fn record_rows(
    cm: &mut ConfusionMatrix,
    set: &PatchSet,
    patch_idx: usize,
    dense: bool,
    per_patch: usize,
    predict: impl Fn(usize) -> usize,
) {
    if dense {
        debug_assert_eq!(per_patch, set.patches[patch_idx].labels.len());
        for (r, &l) in set.patches[patch_idx].labels.iter().enumerate() {
            if l != UNLABELED {
                cm.record(l as usize, predict(r));
            }
        }
    } else {
        debug_assert_eq!(per_patch, 1);
        if let Some(l) = set.patches[patch_idx].center_class {
            if l != UNLABELED {
                cm.record(l as usize, predict(0));
            }
        }
    }
}
